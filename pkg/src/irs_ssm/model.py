"""System model for an IRS-aided hybrid secure spatial-modulation link.

The transmitter (Alice) drives ``n_rf`` RF chains, each feeding a subarray of
``n_k`` antennas through a constant-modulus analog precoder.  Spatial bits
select the active subarray, an M-ary symbol rides on it, and artificial noise
(AN) fills the remaining power budget.  Bob and Eve receive a superposition of
the direct path and the path reflected by an IRS with ``n_irs`` unit-modulus
elements.  This module holds the configuration and channel containers, the
transmit-hypothesis enumeration, AN projection, interference-plus-noise
whitening, and ML detection.  Everything downstream (cut-off rates, the IRS
and precoder optimizers, the experiment harness) is built on these pieces.

All powers are linear milliwatts; dB/dBm conversions happen at config load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOG2E = math.log2(math.e)

AN_STRATEGIES = ("null_space", "random_unitary", "identity")


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class Geometry:
    """3-D coordinates (meters) of the four terminals."""

    alice: tuple[float, float, float] = (10.0, 0.0, 2.0)
    irs: tuple[float, float, float] = (0.0, 45.0, 2.0)
    bob: tuple[float, float, float] = (10.0, 45.0, 0.0)
    eve: tuple[float, float, float] = (10.0, 35.0, 0.0)

    def distance(self, a: str, b: str) -> float:
        pa = np.asarray(getattr(self, a), dtype=float)
        pb = np.asarray(getattr(self, b), dtype=float)
        return float(np.linalg.norm(pa - pb))


@dataclass(frozen=True)
class SystemConfig:
    """Scalar system parameters.

    ``p_total``, ``sigma_b2`` and ``sigma_e2`` are linear milliwatts.  ``beta``
    splits transmit power between the confidential message (``beta * p_total``)
    and AN (``(1 - beta) * p_total``).
    """

    n_rf: int = 4
    n_k: int = 2
    n_b: int = 2
    n_e: int = 2
    n_irs: int = 16
    m_ary: int = 4
    p_total: float = 1000.0
    beta: float = 0.35
    sigma_b2: float = db_to_linear(-55.0)
    sigma_e2: float = db_to_linear(-55.0)
    geometry: Geometry = field(default_factory=Geometry)
    alpha_ai: float = 2.2
    alpha_ab: float = 2.7
    alpha_ib: float = 2.5
    pl0_db: float = -30.0

    def __post_init__(self) -> None:
        if self.n_rf < 1 or self.n_k < 1 or self.n_irs < 1:
            raise ValueError("n_rf, n_k and n_irs must all be >= 1")
        if self.n_b < 1 or self.n_e < 1:
            raise ValueError("receive antenna counts must be >= 1")
        m = self.m_ary
        if m < 2 or (m & (m - 1)) != 0:
            raise ValueError(f"m_ary must be a power of two >= 2, got {m}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.p_total <= 0.0:
            raise ValueError("p_total must be positive")
        if self.sigma_b2 <= 0.0 or self.sigma_e2 <= 0.0:
            raise ValueError("noise variances must be positive")

    @property
    def n_tx(self) -> int:
        return self.n_rf * self.n_k

    @property
    def n_hyp(self) -> int:
        return self.n_rf * self.m_ary

    @property
    def tau(self) -> float:
        """Exponent scale beta * p_total / 4 of the pairwise cut-off terms."""
        return self.beta * self.p_total / 4.0


@dataclass(frozen=True)
class ChannelSet:
    """The five complex channel matrices of one fading realization.

    h: Alice->Bob (n_b x n_tx), q: Alice->Eve (n_e x n_tx),
    f: Alice->IRS (n_irs x n_tx), g: IRS->Bob (n_b x n_irs),
    m: IRS->Eve (n_e x n_irs).
    """

    h: np.ndarray
    q: np.ndarray
    f: np.ndarray
    g: np.ndarray
    m: np.ndarray

    def validate(self, cfg: SystemConfig) -> None:
        shapes = {
            "h": (cfg.n_b, cfg.n_tx),
            "q": (cfg.n_e, cfg.n_tx),
            "f": (cfg.n_irs, cfg.n_tx),
            "g": (cfg.n_b, cfg.n_irs),
            "m": (cfg.n_e, cfg.n_irs),
        }
        for name, want in shapes.items():
            got = getattr(self, name).shape
            if got != want:
                raise ValueError(f"channel {name} has shape {got}, expected {want}")
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"channel {name} contains non-finite entries")


@dataclass(frozen=True)
class Constellation:
    """M-ary constellation with unit average symbol energy."""

    symbols: np.ndarray

    def __post_init__(self) -> None:
        energy = float(np.mean(np.abs(self.symbols) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"mean symbol energy {energy} != 1")

    @classmethod
    def psk(cls, m: int) -> "Constellation":
        """Unit-energy M-PSK (Gray labeling is implicit in the index order)."""
        k = np.arange(m)
        return cls(np.exp(2j * np.pi * k / m))

    @property
    def order(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class TransmitHypothesis:
    """One of the n_rf * m_ary transmit possibilities (subarray i, symbol j).

    ``x_vec`` is the diagonal of the selection operator scaled by the symbol:
    b_j on the entries of block i, zero elsewhere.  Applying the hypothesis to
    a stacked precoder is the elementwise product ``x_vec * p``.
    """

    subarray: int  # 1-based
    symbol_index: int  # 1-based
    symbol: complex
    x_vec: np.ndarray
    index: int  # 0-based position in enumeration order

    def apply(self, p: np.ndarray) -> np.ndarray:
        n_k = _block_len(self)
        out = np.zeros_like(p)
        lo = (self.subarray - 1) * n_k
        out[lo : lo + n_k] = self.symbol * p[lo : lo + n_k]
        return out


@dataclass(frozen=True)
class DifferencePair:
    """Ordered hypothesis difference D = X_m - X_n, kept in sparse block form."""

    m: TransmitHypothesis
    n: TransmitHypothesis

    @property
    def is_zero(self) -> bool:
        return self.m.index == self.n.index

    def apply(self, p: np.ndarray) -> np.ndarray:
        """D @ p touching at most two blocks (O(n_k) work)."""
        out = np.zeros_like(p)
        if self.is_zero:
            return out
        n_k = _block_len(self.m)
        lo_m = (self.m.subarray - 1) * n_k
        lo_n = (self.n.subarray - 1) * n_k
        out[lo_m : lo_m + n_k] += self.m.symbol * p[lo_m : lo_m + n_k]
        out[lo_n : lo_n + n_k] -= self.n.symbol * p[lo_n : lo_n + n_k]
        return out

    def d_vec(self) -> np.ndarray:
        """Diagonal of D as a dense vector."""
        return self.m.x_vec - self.n.x_vec


def _block_len(hyp: TransmitHypothesis) -> int:
    nz = int(np.count_nonzero(hyp.x_vec))
    return nz if nz else len(hyp.x_vec)


def enumerate_hypotheses(cfg: SystemConfig, cons: Constellation) -> list[TransmitHypothesis]:
    """All n_rf * m_ary transmit hypotheses, ordered by (subarray, symbol)."""
    if cons.order != cfg.m_ary:
        raise ValueError(f"constellation order {cons.order} != m_ary {cfg.m_ary}")
    hyps = []
    idx = 0
    for i in range(1, cfg.n_rf + 1):
        lo = (i - 1) * cfg.n_k
        for j in range(1, cfg.m_ary + 1):
            b = complex(cons.symbols[j - 1])
            x = np.zeros(cfg.n_tx, dtype=complex)
            x[lo : lo + cfg.n_k] = b
            hyps.append(TransmitHypothesis(i, j, b, x, idx))
            idx += 1
    return hyps


def difference_operators(hyps: list[TransmitHypothesis]) -> list[DifferencePair]:
    """All (n_rf * m_ary)^2 ordered pairs, m-major order."""
    return [DifferencePair(hm, hn) for hm in hyps for hn in hyps]


def hypothesis_matrix(hyps: list[TransmitHypothesis]) -> np.ndarray:
    """Stack of x_vec rows, shape (n_hyp, n_tx)."""
    return np.array([h.x_vec for h in hyps])


def pair_indices(n_hyp: int) -> tuple[np.ndarray, np.ndarray]:
    """Flat (m, n) index arrays matching difference_operators order."""
    mi, ni = np.meshgrid(np.arange(n_hyp), np.arange(n_hyp), indexing="ij")
    return mi.ravel(), ni.ravel()


@dataclass(frozen=True)
class HybridPrecoder:
    """Stacked precoding vector with optional analog/digital factorization.

    ``p`` has length n_rf * n_k and is partitioned into n_rf blocks; block i is
    the analog vector of subarray i scaled by its digital gain.  The power
    constraint is ||p|| <= n_rf.  When the factorization is present,
    ``f_blocks[i] * d_gains[i]`` reconstructs block i except for blocks listed
    in ``infeasible_blocks`` (not constant-modulus) or ``skipped_blocks``
    (zero blocks).
    """

    p: np.ndarray
    n_rf: int
    f_blocks: np.ndarray | None = None  # (n_rf, n_k), entries of modulus 1/sqrt(n_k)
    d_gains: np.ndarray | None = None  # (n_rf,) complex digital gains
    recon_errors: np.ndarray | None = None  # per-block absolute residual norms
    infeasible_blocks: tuple[int, ...] = ()
    skipped_blocks: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(self.p) % self.n_rf != 0:
            raise ValueError("precoder length must be a multiple of n_rf")
        norm = float(np.linalg.norm(self.p))
        if norm > self.n_rf + 1e-9:
            raise ValueError(f"||p|| = {norm} exceeds the power budget {self.n_rf}")
        if self.f_blocks is not None:
            if self.d_gains is None:
                raise ValueError("factorization requires both f_blocks and d_gains")
            n_k = self.n_k
            mods = np.abs(self.f_blocks)
            checked = [i for i in range(self.n_rf) if i not in self.skipped_blocks]
            if checked and np.max(np.abs(mods[checked] - 1.0 / np.sqrt(n_k))) > 1e-9:
                raise ValueError("analog entries must have modulus 1/sqrt(n_k)")
            for i in checked:
                block = self.blocks[i]
                err = np.linalg.norm(block - self.f_blocks[i] * self.d_gains[i])
                if i not in self.infeasible_blocks and err > 1e-9 * max(1.0, np.linalg.norm(block)):
                    raise ValueError(f"block {i} factorization does not reconstruct p")

    @property
    def n_k(self) -> int:
        return len(self.p) // self.n_rf

    @property
    def blocks(self) -> np.ndarray:
        return self.p.reshape(self.n_rf, self.n_k)

    @classmethod
    def default_init(cls, cfg: SystemConfig) -> "HybridPrecoder":
        """Equal-power constant-modulus blocks at the full power budget."""
        raw = np.full(cfg.n_tx, 1.0 / np.sqrt(cfg.n_k), dtype=complex)
        p = raw * (cfg.n_rf / np.linalg.norm(raw))
        return cls(p=p, n_rf=cfg.n_rf)


def default_analog_blocks(cfg: SystemConfig) -> np.ndarray:
    """Zero-phase analog vectors, one row per subarray."""
    return np.full((cfg.n_rf, cfg.n_k), 1.0 / np.sqrt(cfg.n_k), dtype=complex)


def assemble_analog_matrix(fa_blocks: np.ndarray) -> np.ndarray:
    """Block-diagonal analog precoding matrix, shape (n_rf*n_k, n_rf)."""
    n_rf, n_k = fa_blocks.shape
    fa = np.zeros((n_rf * n_k, n_rf), dtype=complex)
    for i in range(n_rf):
        fa[i * n_k : (i + 1) * n_k, i] = fa_blocks[i]
    return fa


@dataclass(frozen=True)
class AnProjection:
    """AN shaping matrix plus its cached covariance contributions.

    ``t_an`` is n_rf x n_rf with ||t_an||_F^2 = n_rf so the total AN power is
    independent of the strategy.  ``effective_an_cov_b/e`` cache
    (ch F_A T) (ch F_A T)^H for the Bob and Eve effective channels.
    """

    t_an: np.ndarray
    effective_an_cov_b: np.ndarray
    effective_an_cov_e: np.ndarray
    strategy_used: str
    degenerate: bool = False

    def __post_init__(self) -> None:
        fro2 = float(np.linalg.norm(self.t_an, "fro") ** 2)
        n_rf = self.t_an.shape[0]
        if abs(fro2 - n_rf) > 1e-9 * max(1.0, n_rf):
            raise ValueError(f"||t_an||_F^2 = {fro2}, expected {n_rf}")


def effective_channels(ch: ChannelSet, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(H + G V F, Q + M V F) for the reflection vector v."""
    vf = v[:, None] * ch.f
    return ch.h + ch.g @ vf, ch.q + ch.m @ vf


def _random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    qmat, r = np.linalg.qr(z)
    # fix the phase ambiguity so the draw is a Haar sample
    return qmat * (np.diag(r) / np.abs(np.diag(r)))


def build_an_projection(
    cfg: SystemConfig,
    ch: ChannelSet,
    v: np.ndarray,
    fa_blocks: np.ndarray,
    strategy: str = "null_space",
    rng: np.random.Generator | None = None,
) -> AnProjection:
    """Construct the AN shaping matrix for the current reflection state.

    The default strategy projects onto the null space of the effective Bob
    channel times the analog precoder, (H + GVF) F_A, which exists whenever
    n_rf > n_b; otherwise a random unitary is used.  A rank-zero effective
    channel falls back to the identity and sets the ``degenerate`` flag.
    """
    if strategy not in AN_STRATEGIES:
        raise ValueError(f"unknown AN strategy {strategy!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    fa = assemble_analog_matrix(fa_blocks)
    eff_b, eff_e = effective_channels(ch, v)
    xb = eff_b @ fa  # n_b x n_rf
    n_rf = cfg.n_rf
    degenerate = False

    if strategy == "identity":
        t_an = np.eye(n_rf, dtype=complex)
        used = "identity"
    elif strategy == "random_unitary" or n_rf <= cfg.n_b:
        t_an = _random_unitary(n_rf, rng)
        used = "random_unitary"
    else:
        _, s, vh = np.linalg.svd(xb)
        smax = s[0] if len(s) else 0.0
        rank = int(np.sum(s > 1e-12 * max(smax, 1e-300)))
        if rank == 0:
            t_an = np.eye(n_rf, dtype=complex)
            used = "identity"
            degenerate = True
        else:
            null_basis = vh[rank:].conj().T  # n_rf x (n_rf - rank)
            proj = null_basis @ null_basis.conj().T
            t_an = proj * np.sqrt(n_rf / (n_rf - rank))
            used = "null_space"

    yb = xb @ t_an
    ye = (eff_e @ fa) @ t_an
    cov_b = yb @ yb.conj().T
    cov_e = ye @ ye.conj().T
    return AnProjection(
        t_an=t_an,
        effective_an_cov_b=0.5 * (cov_b + cov_b.conj().T),
        effective_an_cov_e=0.5 * (cov_e + cov_e.conj().T),
        strategy_used=used,
        degenerate=degenerate,
    )


def interference_covariances(
    cfg: SystemConfig,
    ch: ChannelSet,
    v: np.ndarray,
    an: AnProjection,
) -> tuple[np.ndarray, np.ndarray]:
    """Interference-plus-noise covariances at Bob and Eve.

    Omega = (1 - beta) p_total C + sigma^2 I with C the cached AN covariance
    contribution; the projection must have been built for the same v.
    """
    an_power = (1.0 - cfg.beta) * cfg.p_total
    omega_b = an_power * an.effective_an_cov_b + cfg.sigma_b2 * np.eye(cfg.n_b)
    omega_e = an_power * an.effective_an_cov_e + cfg.sigma_e2 * np.eye(cfg.n_e)
    omega_b = 0.5 * (omega_b + omega_b.conj().T)
    omega_e = 0.5 * (omega_e + omega_e.conj().T)
    for name, omega in (("omega_b", omega_b), ("omega_e", omega_e)):
        lam_min = float(np.linalg.eigvalsh(omega)[0])
        if lam_min <= 0.0:
            raise ValueError(f"{name} is not positive definite (smallest eigenvalue {lam_min:.6e})")
    return omega_b, omega_e


@dataclass(frozen=True)
class WhitenedChannels:
    """Channels premultiplied by the inverse square root of their covariance.

    ``f`` is the raw Alice->IRS channel carried along so downstream code can
    assemble the whitened effective channels H~ + G~ V F and Q~ + M~ V F.
    """

    h_tilde: np.ndarray
    g_tilde: np.ndarray
    q_tilde: np.ndarray
    m_tilde: np.ndarray
    f: np.ndarray


def inv_sqrt_hermitian(omega: np.ndarray, cond_tol: float = 1e-12) -> np.ndarray:
    """Omega^{-1/2} via Hermitian eigendecomposition; errors when ill-conditioned."""
    lam, u = np.linalg.eigh(omega)
    if lam[0] < cond_tol * lam[-1]:
        raise ValueError(
            f"whitener is ill-conditioned (eigenvalue {lam[0]:.3e} below "
            f"{cond_tol:.0e} * {lam[-1]:.3e})"
        )
    return (u * (1.0 / np.sqrt(lam))) @ u.conj().T


def whiten(ch: ChannelSet, omega_b: np.ndarray, omega_e: np.ndarray) -> WhitenedChannels:
    """Premultiply the Bob channels by Omega_B^{-1/2} and the Eve channels by Omega_E^{-1/2}."""
    wb = inv_sqrt_hermitian(omega_b)
    we = inv_sqrt_hermitian(omega_e)
    return WhitenedChannels(
        h_tilde=wb @ ch.h,
        g_tilde=wb @ ch.g,
        q_tilde=we @ ch.q,
        m_tilde=we @ ch.m,
        f=ch.f,
    )


def ml_detect(
    cfg: SystemConfig,
    ch: ChannelSet,
    v: np.ndarray,
    p: HybridPrecoder | np.ndarray,
    cons: Constellation,
    y: np.ndarray,
) -> tuple[int, int]:
    """Maximum-likelihood detection of (subarray, symbol) from a Bob observation.

    Ties resolve to the smallest (i, j) in lexicographic order.
    """
    pvec = p.p if isinstance(p, HybridPrecoder) else np.asarray(p)
    eff_b, _ = effective_channels(ch, v)
    hyps = enumerate_hypotheses(cfg, cons)
    xp = hypothesis_matrix(hyps) * pvec[None, :]
    signals = np.sqrt(cfg.beta * cfg.p_total) * (xp @ eff_b.T)  # (n_hyp, n_b)
    dists = np.sum(np.abs(y[None, :] - signals) ** 2, axis=1)
    k = int(np.argmin(dists))  # first minimum = smallest (i, j)
    return hyps[k].subarray, hyps[k].symbol_index


def link_state(
    cfg: SystemConfig,
    ch: ChannelSet,
    v: np.ndarray,
    fa_blocks: np.ndarray | None = None,
    strategy: str = "null_space",
    rng: np.random.Generator | None = None,
) -> tuple[AnProjection, np.ndarray, np.ndarray, WhitenedChannels]:
    """AN projection, covariances and whitened channels for one reflection state."""
    fa = fa_blocks if fa_blocks is not None else default_analog_blocks(cfg)
    an = build_an_projection(cfg, ch, v, fa, strategy=strategy, rng=rng)
    omega_b, omega_e = interference_covariances(cfg, ch, v, an)
    return an, omega_b, omega_e, whiten(ch, omega_b, omega_e)
