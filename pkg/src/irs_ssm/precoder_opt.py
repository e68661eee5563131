"""Hybrid-precoder optimizers under the stacked-vector power constraint.

With the reflection vector fixed, every pairwise exponent is a Hermitian
quadratic p^H B p (Bob) or p^H E p (Eve) in the stacked precoder, and the
secrecy objective is a difference of log-sum-exp terms over those quadratics.
Two maximizers over ||p|| <= n_rf live here: a successive convex approximation
that pairs a concave lower bound on the Eve rate with a convex upper bound on
the Bob rate (both tight at the expansion point, so outer steps ascend), and
a direct gradient ascent on the cut-off-rate objective with backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .model import (
    Constellation,
    HybridPrecoder,
    SystemConfig,
    WhitenedChannels,
    enumerate_hypotheses,
    hypothesis_matrix,
    pair_indices,
)

LN2 = float(np.log(2.0))


def _log2_sum_exp(x: np.ndarray) -> float:
    """log2 sum exp with the max-shift trick (1-D input)."""
    m = float(np.max(x))
    with np.errstate(under="ignore"):
        return (m + float(np.log(np.sum(np.exp(x - m))))) / LN2


@dataclass(frozen=True)
class PrecoderQuadratics:
    """Pairwise quadratic forms in the stacked precoder for both receivers.

    The dense per-pair matrices are Gram products of the whitened effective
    channel with the sparse diagonal difference operator, so each has support
    on at most a 2 n_k x 2 n_k block; values and gradients are evaluated
    through the factored form rather than the dense stacks.
    """

    tau: float
    n_rf: int
    w_b: np.ndarray  # whitened effective Bob channel (n_b, n_tx)
    w_e: np.ndarray  # whitened effective Eve channel (n_e, n_tx)
    x_mat: np.ndarray  # (K, n_tx) hypothesis diagonals
    mi: np.ndarray
    ni: np.ndarray
    d_vecs: np.ndarray  # (P, n_tx) pair diagonal differences

    @property
    def n_pairs(self) -> int:
        return len(self.mi)

    @cached_property
    def b_mats(self) -> np.ndarray:
        """Dense Bob pair matrices (P, n_tx, n_tx); test/inspection path."""
        gram = self.w_b.conj().T @ self.w_b
        return gram[None, :, :] * (self.d_vecs.conj()[:, :, None] * self.d_vecs[:, None, :])

    @cached_property
    def e_mats(self) -> np.ndarray:
        gram = self.w_e.conj().T @ self.w_e
        return gram[None, :, :] * (self.d_vecs.conj()[:, :, None] * self.d_vecs[:, None, :])

    def _pair_responses(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        resp_b = (self.x_mat * p[None, :]) @ self.w_b.T  # (K, n_b)
        resp_e = (self.x_mat * p[None, :]) @ self.w_e.T
        return resp_b[self.mi] - resp_b[self.ni], resp_e[self.mi] - resp_e[self.ni]

    def pair_values(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(p^H B_k p, p^H E_k p) for every ordered pair."""
        diff_b, diff_e = self._pair_responses(p)
        return (
            np.sum(np.abs(diff_b) ** 2, axis=1),
            np.sum(np.abs(diff_e) ** 2, axis=1),
        )

    def kappas(self, p: np.ndarray) -> tuple[float, float]:
        qb, qe = self.pair_values(p)
        with np.errstate(under="ignore"):
            return float(np.sum(np.exp(-self.tau * qb))), float(np.sum(np.exp(-self.tau * qe)))

    def secrecy_rate(self, p: HybridPrecoder | np.ndarray) -> float:
        pvec = p.p if isinstance(p, HybridPrecoder) else np.asarray(p)
        kb, ke = self.kappas(pvec)
        return float(np.log2(ke) - np.log2(kb))

    def gradient(self, p: np.ndarray) -> np.ndarray:
        """Gradient of the secrecy objective with respect to p.

        tau/ln2 * [sum chi_B (B + B^H) p / kappa_B - sum chi_E (E + E^H) p / kappa_E],
        with chi the per-pair exponentials.  Real directional derivative along
        a direction d is Re{g^H d}.  Exactly zero at p = 0.
        """
        diff_b, diff_e = self._pair_responses(p)
        qb = np.sum(np.abs(diff_b) ** 2, axis=1)
        qe = np.sum(np.abs(diff_e) ** 2, axis=1)
        with np.errstate(under="ignore"):
            chi_b = np.exp(-self.tau * qb)
            chi_e = np.exp(-self.tau * qe)
        bp = self.d_vecs.conj() * (diff_b @ np.conj(self.w_b))  # rows B_k p
        ep = self.d_vecs.conj() * (diff_e @ np.conj(self.w_e))
        g = 2.0 * (chi_b @ bp) / np.sum(chi_b) - 2.0 * (chi_e @ ep) / np.sum(chi_e)
        return (self.tau / LN2) * g


def build_precoder_quadratics(
    cfg: SystemConfig,
    wch: WhitenedChannels,
    v: np.ndarray,
    cons: Constellation | None = None,
) -> PrecoderQuadratics:
    """Assemble the pairwise precoder quadratics for a fixed reflection vector."""
    cons = cons if cons is not None else Constellation.psk(cfg.m_ary)
    hyps = enumerate_hypotheses(cfg, cons)
    x_mat = hypothesis_matrix(hyps)
    vf = v[:, None] * wch.f
    w_b = wch.h_tilde + wch.g_tilde @ vf
    w_e = wch.q_tilde + wch.m_tilde @ vf
    mi, ni = pair_indices(cfg.n_hyp)
    return PrecoderQuadratics(
        tau=cfg.tau,
        n_rf=cfg.n_rf,
        w_b=w_b,
        w_e=w_e,
        x_mat=x_mat,
        mi=mi,
        ni=ni,
        d_vecs=x_mat[mi] - x_mat[ni],
    )


@dataclass
class PrecoderResult:
    p: HybridPrecoder
    converged: bool
    iterations: int
    secrecy_rate: float
    trace: list[float]
    extras: dict = field(default_factory=dict)


def project_ball(p: np.ndarray, radius: float) -> np.ndarray:
    nrm = float(np.linalg.norm(p))
    return p if nrm <= radius else p * (radius / nrm)


class ScaSubproblem:
    """Surrogate R_E^l - R_B^u expanded at a fixed point p0.

    R_E^l lower-bounds the Eve rate through exp(x) >= exp(x0)(1 + x - x0) per
    pair; R_B^u upper-bounds the Bob rate by linearizing the convex quadratics
    inside the exponents.  Both are tight at p0, R_E^l is concave, R_B^u is
    convex, so the surrogate is concave and globally lower-bounds the true
    objective.  Outside the (open) region where the Eve-bound sum stays
    positive the value is -inf.
    """

    def __init__(self, pq: PrecoderQuadratics, p0: np.ndarray):
        self.pq = pq
        self.tau = pq.tau
        qb0, qe0 = pq.pair_values(p0)
        with np.errstate(under="ignore"):
            self.c_eve = np.exp(-self.tau * qe0)  # per-pair weights, Eve expansion
        self.qe0 = qe0
        self.qb0 = qb0
        # Bob linearization vectors W_k = B_k p0
        diff0_b, _ = pq._pair_responses(p0)
        self.w_lin = pq.d_vecs.conj() * (diff0_b @ np.conj(pq.w_b))  # (P, n_tx)

    def eve_sum(self, p: np.ndarray) -> float:
        _, qe = self.pq.pair_values(p)
        return float(np.sum(self.c_eve * (1.0 + self.tau * self.qe0 - self.tau * qe)))

    def _bob_exponents(self, p: np.ndarray) -> np.ndarray:
        lin = np.real(np.conj(self.w_lin) @ p)  # Re{p0^H B_k p}
        return self.tau * self.qb0 - 2.0 * self.tau * lin

    def value(self, p: np.ndarray) -> float:
        s = self.eve_sum(p)
        if s <= 0.0:
            return -np.inf
        return float(np.log2(s)) - _log2_sum_exp(self._bob_exponents(p))

    def eve_lower(self, p: np.ndarray) -> float:
        s = self.eve_sum(p)
        return float(np.log2(s)) if s > 0.0 else -np.inf

    def bob_upper(self, p: np.ndarray) -> float:
        return _log2_sum_exp(self._bob_exponents(p))

    def gradient(self, p: np.ndarray) -> np.ndarray:
        s = self.eve_sum(p)
        _, diff_e = self.pq._pair_responses(p)
        ep = self.pq.d_vecs.conj() * (diff_e @ np.conj(self.pq.w_e))  # rows E_k p
        g_eve = (-2.0 * self.tau / (s * LN2)) * (self.c_eve @ ep)
        h = self._bob_exponents(p)
        weights = np.exp(h - np.max(h))
        weights /= np.sum(weights)
        g_bob_upper = (-2.0 * self.tau / LN2) * (weights @ self.w_lin)
        return g_eve - g_bob_upper


def _projected_gradient_max(
    value_fn,
    grad_fn,
    p0: np.ndarray,
    radius: float,
    grad_tol: float = 1e-8,
    max_iters: int = 300,
) -> tuple[np.ndarray, float, int]:
    """Projected gradient ascent with Armijo backtracking on the norm ball."""
    p = project_ball(p0.copy(), radius)
    f = value_fn(p)
    t = 1.0
    it = 0
    for it in range(1, max_iters + 1):
        g = grad_fn(p)
        accepted = False
        while t >= 1e-18:
            p_new = project_ball(p + t * g, radius)
            f_new = value_fn(p_new)
            gain = np.real(np.vdot(g, p_new - p))
            if np.isfinite(f_new) and f_new >= f + 1e-4 * gain:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        gmap = float(np.linalg.norm(p_new - p) / t)
        p, f = p_new, f_new
        t = min(t * 2.0, 1e6)
        if gmap <= grad_tol:
            break
    return p, f, it


def asr_sca(
    pq: PrecoderQuadratics,
    p0: HybridPrecoder | np.ndarray,
    tol: float = 0.01,
    max_iters: int = 50,
    inner_grad_tol: float = 1e-8,
    inner_max_iters: int = 300,
) -> PrecoderResult:
    """Successive convex approximation of the secrecy objective.

    Each outer step expands the bounds at the current iterate and maximizes
    the concave surrogate over the power ball with an inner projected-gradient
    solver.  Because the surrogate is a tight global lower bound, the true
    objective is non-decreasing across outer steps.  Stops when
    ||p_k - p_{k-1}|| <= tol.
    """
    pvec = (p0.p if isinstance(p0, HybridPrecoder) else np.asarray(p0)).astype(complex)
    radius = float(pq.n_rf)
    if np.linalg.norm(pvec) > radius + 1e-9:
        raise ValueError("p0 violates the power constraint")
    rate = pq.secrecy_rate(pvec)
    trace = [rate]
    converged = False
    outer = 0
    inner_total = 0
    for outer in range(1, max_iters + 1):
        sub = ScaSubproblem(pq, pvec)
        start_val = sub.value(pvec)
        p_new, end_val, inner_iters = _projected_gradient_max(
            sub.value, sub.gradient, pvec, radius, grad_tol=inner_grad_tol, max_iters=inner_max_iters
        )
        inner_total += inner_iters
        if end_val < start_val - 1e-9 * max(1.0, abs(start_val)):
            raise RuntimeError(
                f"inner solver lost ground on the concave surrogate "
                f"({start_val} -> {end_val}); sign or convexity bug"
            )
        step = float(np.linalg.norm(p_new - pvec))
        pvec = p_new
        rate = pq.secrecy_rate(pvec)
        trace.append(rate)
        if step <= tol:
            converged = True
            break
    best = HybridPrecoder(p=pvec, n_rf=pq.n_rf)
    return PrecoderResult(
        p=best,
        converged=converged,
        iterations=outer,
        secrecy_rate=rate,
        trace=trace,
        extras={"inner_iterations": inner_total},
    )


def cor_ga(
    pq: PrecoderQuadratics,
    p0: HybridPrecoder | np.ndarray,
    mu0: float | None = None,
    tol: float = 1e-6,
    max_iters: int = 500,
) -> PrecoderResult:
    """Gradient ascent on the cut-off-rate objective with step backtracking.

    Steps p + mu * grad are radially projected onto the power ball; a step
    that lowers the objective is rejected and mu halves, five consecutive
    acceptances double mu back up to its initial value.  Stops when an
    accepted step improves the objective by at most tol.
    """
    pvec = (p0.p if isinstance(p0, HybridPrecoder) else np.asarray(p0)).astype(complex)
    radius = float(pq.n_rf)
    if np.linalg.norm(pvec) > radius + 1e-9:
        raise ValueError("p0 violates the power constraint")
    rate = pq.secrecy_rate(pvec)
    trace = [rate]
    g = pq.gradient(pvec)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite gradient at the starting point")
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return PrecoderResult(
            p=HybridPrecoder(p=pvec, n_rf=pq.n_rf),
            converged=True,
            iterations=0,
            secrecy_rate=rate,
            trace=trace,
            extras={"stationary": True},
        )
    mu0 = mu0 if mu0 is not None else 0.1 * pq.n_rf / gnorm
    if mu0 <= 0.0:
        raise ValueError("mu0 must be positive")
    mu = mu0
    streak = 0
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        p_cand = project_ball(pvec + mu * g, radius)
        r_cand = pq.secrecy_rate(p_cand)
        if r_cand >= rate:
            gain = r_cand - rate
            pvec, rate = p_cand, r_cand
            trace.append(rate)
            streak += 1
            if streak >= 5:
                mu = min(2.0 * mu, mu0)
                streak = 0
            if gain <= tol:
                converged = True
                break
            g = pq.gradient(pvec)
            if not np.all(np.isfinite(g)):
                raise FloatingPointError("non-finite gradient during ascent")
        else:
            mu *= 0.5
            streak = 0
            if mu < 1e-14 * mu0:
                converged = True  # no ascent direction left at float resolution
                break
    return PrecoderResult(
        p=HybridPrecoder(p=pvec, n_rf=pq.n_rf),
        converged=converged,
        iterations=it,
        secrecy_rate=rate,
        trace=trace,
        extras={"mu_final": mu},
    )


def factorize_hybrid(p: HybridPrecoder | np.ndarray, cfg: SystemConfig) -> HybridPrecoder:
    """Recover per-block analog phases and digital gains from a stacked precoder.

    Block i factorizes as f_i d_i with f_i the elementwise phase of the block
    scaled by 1/sqrt(n_k) and d_i its least-squares gain f_i^H block.  Blocks
    whose relative residual exceeds 1e-6 are flagged infeasible (the block is
    not constant-modulus); zero blocks are skipped.
    """
    pvec = (p.p if isinstance(p, HybridPrecoder) else np.asarray(p)).astype(complex)
    blocks = pvec.reshape(cfg.n_rf, cfg.n_k)
    f_blocks = np.full((cfg.n_rf, cfg.n_k), 1.0 / np.sqrt(cfg.n_k), dtype=complex)
    d_gains = np.zeros(cfg.n_rf, dtype=complex)
    errors = np.zeros(cfg.n_rf)
    skipped: list[int] = []
    infeasible: list[int] = []
    for i, block in enumerate(blocks):
        nrm = float(np.linalg.norm(block))
        if nrm == 0.0:
            skipped.append(i)
            continue
        f_blocks[i] = np.exp(1j * np.angle(block)) / np.sqrt(cfg.n_k)
        d_gains[i] = np.vdot(f_blocks[i], block)  # least-squares scalar, ||f_i|| = 1
        errors[i] = float(np.linalg.norm(block - f_blocks[i] * d_gains[i]))
        if errors[i] > 1e-6 * nrm:
            infeasible.append(i)
    return HybridPrecoder(
        p=pvec,
        n_rf=cfg.n_rf,
        f_blocks=f_blocks,
        d_gains=d_gains,
        recon_errors=errors,
        infeasible_blocks=tuple(infeasible),
        skipped_blocks=tuple(skipped),
    )
