"""Cut-off rates, the approximate secrecy rate, and a Monte Carlo MI oracle.

The cut-off rate of the discrete-input link is built from pairwise exponent
terms over all ordered transmit-hypothesis pairs,

    kappa = sum_{m,n} exp(-tau * ||W (X_m - X_n) p||^2),    tau = beta P / 4,

with W the whitened effective channel.  The approximate secrecy rate is
log2(kappa_E) - log2(kappa_B), equal to the Bob/Eve cut-off rate difference.
The Monte Carlo mutual information here is a validation oracle only; the
optimizers never consume it because each estimate costs thousands of noise
draws per channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import (
    Constellation,
    DifferencePair,
    HybridPrecoder,
    SystemConfig,
    WhitenedChannels,
    enumerate_hypotheses,
    hypothesis_matrix,
    pair_indices,
)

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class RateReport:
    """Cut-off rates (bits) and the approximate secrecy rate for one state."""

    i0_bob: float
    i0_eve: float
    r_approx: float
    kappa_b: float
    kappa_e: float
    mc_mi_bob: float | None = None
    mc_mi_eve: float | None = None
    mc_std_err_bob: float | None = None
    mc_std_err_eve: float | None = None


def effective_whitened(wch: WhitenedChannels, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Whitened effective channels (H~ + G~ V F, Q~ + M~ V F)."""
    vf = v[:, None] * wch.f
    return wch.h_tilde + wch.g_tilde @ vf, wch.q_tilde + wch.m_tilde @ vf


def _as_vector(p: HybridPrecoder | np.ndarray) -> np.ndarray:
    return p.p if isinstance(p, HybridPrecoder) else np.asarray(p)


def pair_distances_sq(w_eff: np.ndarray, diffs: list[DifferencePair], p: np.ndarray) -> np.ndarray:
    """||w_eff (X_m - X_n) p||^2 for every pair, via per-hypothesis caching."""
    responses: dict[int, np.ndarray] = {}
    for d in diffs:
        for hyp in (d.m, d.n):
            if hyp.index not in responses:
                responses[hyp.index] = w_eff @ hyp.apply(p)
    out = np.empty(len(diffs))
    for k, d in enumerate(diffs):
        delta = responses[d.m.index] - responses[d.n.index]
        out[k] = float(np.vdot(delta, delta).real)
    return out


def kappa(
    w_eff: np.ndarray,
    diffs: list[DifferencePair],
    p: HybridPrecoder | np.ndarray,
    tau: float,
) -> float:
    """Pairwise exponent sum over the supplied difference pairs.

    Always lies in [K, K^2] for the full K^2 pair set because the K diagonal
    pairs contribute exp(0) = 1 each.  Individual exp underflows saturate to
    zero, which only sharpens the sum toward its lower bound.
    """
    dist_sq = pair_distances_sq(w_eff, diffs, _as_vector(p))
    with np.errstate(under="ignore"):
        value = float(np.sum(np.exp(-tau * dist_sq)))
    n_pairs = len(diffs)
    k_hyp = int(round(np.sqrt(n_pairs)))
    if k_hyp * k_hyp == n_pairs:  # full ordered pair set: enforce the bounds
        assert k_hyp - 1e-9 <= value <= k_hyp**2 + 1e-9, f"kappa {value} outside [{k_hyp}, {k_hyp**2}]"
    return value


def _kappa_fast(w_eff: np.ndarray, x_mat: np.ndarray, p: np.ndarray, tau: float) -> float:
    """kappa over all ordered pairs using the (K, n_r) response stack."""
    resp = (x_mat * p[None, :]) @ w_eff.T  # (K, n_r)
    mi, ni = pair_indices(x_mat.shape[0])
    delta = resp[mi] - resp[ni]
    dist_sq = np.sum(np.abs(delta) ** 2, axis=1)
    with np.errstate(under="ignore"):
        return float(np.sum(np.exp(-tau * dist_sq)))


def approx_secrecy_rate(
    cfg: SystemConfig,
    wch: WhitenedChannels,
    v: np.ndarray,
    p: HybridPrecoder | np.ndarray,
    cons: Constellation | None = None,
) -> RateReport:
    """Cut-off rates for Bob and Eve and their difference.

    ``r_approx`` may be negative when Eve holds the better link; no clamping
    is applied.
    """
    cons = cons if cons is not None else Constellation.psk(cfg.m_ary)
    hyps = enumerate_hypotheses(cfg, cons)
    x_mat = hypothesis_matrix(hyps)
    w_b, w_e = effective_whitened(wch, v)
    pvec = _as_vector(p)
    kb = _kappa_fast(w_b, x_mat, pvec, cfg.tau)
    ke = _kappa_fast(w_e, x_mat, pvec, cfg.tau)
    k_hyp = cfg.n_hyp
    assert k_hyp - 1e-9 <= kb <= k_hyp**2 + 1e-9
    assert k_hyp - 1e-9 <= ke <= k_hyp**2 + 1e-9
    log2k = np.log2(k_hyp)
    i0_bob = 2.0 * log2k - np.log2(kb)
    i0_eve = 2.0 * log2k - np.log2(ke)
    return RateReport(
        i0_bob=float(i0_bob),
        i0_eve=float(i0_eve),
        r_approx=float(i0_bob - i0_eve),
        kappa_b=kb,
        kappa_e=ke,
    )


def secrecy_rate_value(
    cfg: SystemConfig,
    wch: WhitenedChannels,
    v: np.ndarray,
    p: HybridPrecoder | np.ndarray,
    cons: Constellation | None = None,
) -> float:
    return approx_secrecy_rate(cfg, wch, v, p, cons).r_approx


def _mc_mi_one_receiver(
    f_pairs: np.ndarray,  # (K, K, n_r) whitened pairwise signal differences
    n_samples: int,
    rng: np.random.Generator,
    chunk: int = 256,
) -> tuple[float, float]:
    """Sample-mean MI (bits) and its standard error, unit-variance noise.

    Uses exp(-||f + w||^2 + ||w||^2) = exp(-||f||^2 - 2 Re<f, w>) so only the
    cross term needs fresh draws.  Noise draws are shared across the outer
    hypothesis index, which leaves the estimate unbiased and makes the
    per-draw aggregate the natural unit for the standard error.
    """
    k_hyp, _, n_r = f_pairs.shape
    norm_sq = np.sum(np.abs(f_pairs) ** 2, axis=2)  # (K, K)
    per_draw = np.empty(n_samples)
    done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        w = (rng.standard_normal((size, n_r)) + 1j * rng.standard_normal((size, n_r))) / np.sqrt(2.0)
        cross = 2.0 * np.real(np.einsum("mnr,sr->mns", np.conj(f_pairs), w))
        expo = -norm_sq[:, :, None] - cross  # (K, K, S)
        lse = logsumexp(expo, axis=1) / LN2  # log2 sum_n, shape (K, S)
        per_draw[done : done + size] = np.mean(lse, axis=0)
        done += size
    mi = np.log2(k_hyp) - float(np.mean(per_draw))
    se = float(np.std(per_draw, ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return mi, se


def mc_mutual_information(
    cfg: SystemConfig,
    wch: WhitenedChannels,
    v: np.ndarray,
    p: HybridPrecoder | np.ndarray,
    n_noise_samples: int,
    seed: int,
    cons: Constellation | None = None,
) -> tuple[float, float, tuple[float, float]]:
    """Monte Carlo mutual information (bits) at Bob and Eve.

    The expectation over whitened noise is replaced by a sample mean over
    ``n_noise_samples`` draws from counter-based streams, so the result is
    deterministic per seed.  Returns (mi_bob, mi_eve, (se_bob, se_eve)).
    """
    if n_noise_samples < 100:
        raise ValueError("n_noise_samples must be >= 100")
    cons = cons if cons is not None else Constellation.psk(cfg.m_ary)
    hyps = enumerate_hypotheses(cfg, cons)
    x_mat = hypothesis_matrix(hyps)
    pvec = _as_vector(p)
    scale = np.sqrt(cfg.beta * cfg.p_total)
    ss = np.random.SeedSequence(entropy=seed)
    stream_b, stream_e = ss.spawn(2)
    results = []
    for w_eff, stream in zip(effective_whitened(wch, v), (stream_b, stream_e)):
        resp = scale * ((x_mat * pvec[None, :]) @ w_eff.T)  # (K, n_r)
        f_pairs = resp[:, None, :] - resp[None, :, :]
        rng = np.random.Generator(np.random.Philox(stream))
        results.append(_mc_mi_one_receiver(f_pairs, n_noise_samples, rng))
    (mi_b, se_b), (mi_e, se_e) = results
    return mi_b, mi_e, (se_b, se_e)
