"""IRS phase-shift optimizers for the secrecy-rate surrogate.

With the precoder held fixed, every pairwise exponent term is a quadratic in
the reflection vector v,

    ||W D p||^2 = v^H B v + 2 Re{A^H C v} + ||A||^2,

so the Jensen-style surrogate of the secrecy objective collapses to

    v^H (Phi_B - Phi_E) v + 2 Re{(D - D') v} + C

with Phi_B, Phi_E positive semidefinite Gram aggregates.  Three maximizers of
that surrogate over the unit-modulus constraint set live here: a DC-linearized
ADMM, a cyclic per-element block coordinate ascent with a closed-form update,
and a semidefinite relaxation with Gaussian randomization rounding backed by
an in-house unit-diagonal SDP solver (low-rank factorized ascent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import (
    LOG2E,
    Constellation,
    HybridPrecoder,
    SystemConfig,
    WhitenedChannels,
    enumerate_hypotheses,
    hypothesis_matrix,
    pair_indices,
)


@dataclass(frozen=True)
class IrsPhaseVector:
    """N unit-modulus reflection coefficients."""

    v: np.ndarray

    def __post_init__(self) -> None:
        if np.max(np.abs(np.abs(self.v) - 1.0)) > 1e-9:
            raise ValueError("reflection coefficients must have unit modulus")

    def __len__(self) -> int:
        return len(self.v)

    @classmethod
    def ones(cls, n: int) -> "IrsPhaseVector":
        return cls(np.ones(n, dtype=complex))

    @classmethod
    def from_phases(cls, theta: np.ndarray) -> "IrsPhaseVector":
        return cls(np.exp(1j * np.asarray(theta, dtype=float)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "IrsPhaseVector":
        return cls.from_phases(rng.uniform(0.0, 2.0 * np.pi, size=n))


def as_phase_array(v: IrsPhaseVector | np.ndarray) -> np.ndarray:
    return v.v if isinstance(v, IrsPhaseVector) else np.asarray(v)


@dataclass(frozen=True)
class SurrogateObjective:
    """Quadratic surrogate v^H phi v + 2 Re{delta v} + constant."""

    phi: np.ndarray  # Hermitian, Phi_B - Phi_E
    delta: np.ndarray  # row vector D - D'
    constant: float

    def value(self, v: IrsPhaseVector | np.ndarray) -> float:
        vv = as_phase_array(v)
        quad = np.vdot(vv, self.phi @ vv).real
        lin = 2.0 * np.real(np.dot(self.delta, vv))
        return float(quad + lin + self.constant)

    def values(self, v_batch: np.ndarray) -> np.ndarray:
        quad = np.einsum("si,ij,sj->s", np.conj(v_batch), self.phi, v_batch).real
        lin = 2.0 * np.real(v_batch @ self.delta)
        return quad + lin + self.constant


@dataclass(frozen=True)
class QuadraticForms:
    """Quadratic-form reduction of the secrecy objective in v, for a fixed p.

    Aggregates (phi_b, phi_e, d_row, d_prime_row, c_const) define the
    surrogate; the per-pair caches keep the exact pairwise geometry around so
    the true cut-off-rate objective stays evaluable from the same object.
    """

    phi_b: np.ndarray
    phi_e: np.ndarray
    d_row: np.ndarray
    d_prime_row: np.ndarray
    c_const: float
    tau: float
    n_irs: int
    n_hyp: int
    ds: np.ndarray  # (P, N) per-pair incident-response diagonal differences
    a_diff_b: np.ndarray  # (P, n_b) per-pair direct-response differences, Bob
    a_diff_e: np.ndarray  # (P, n_e), Eve
    g_mat: np.ndarray  # whitened IRS->Bob channel (n_b, N)
    m_mat: np.ndarray  # whitened IRS->Eve channel (n_e, N)
    s_hyp: np.ndarray = field(repr=False, default=None)  # (K, N) per-hypothesis s_ij
    a_hyp_b: np.ndarray = field(repr=False, default=None)
    a_hyp_e: np.ndarray = field(repr=False, default=None)

    def surrogate(self) -> SurrogateObjective:
        return SurrogateObjective(
            phi=self.phi_b - self.phi_e,
            delta=self.d_row - self.d_prime_row,
            constant=self.c_const,
        )

    def surrogate_value(self, v: IrsPhaseVector | np.ndarray) -> float:
        return self.surrogate().value(v)

    def pair_quadratics(self, v: IrsPhaseVector | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Exact per-pair exponents ||A + C v||^2 for Bob and Eve."""
        vv = as_phase_array(v)
        dsv = self.ds * vv[None, :]
        qb = np.sum(np.abs(self.a_diff_b + dsv @ self.g_mat.T) ** 2, axis=1)
        qe = np.sum(np.abs(self.a_diff_e + dsv @ self.m_mat.T) ** 2, axis=1)
        return qb, qe

    def secrecy_rate(self, v: IrsPhaseVector | np.ndarray) -> float:
        """True approximate secrecy rate log2 kappa_E - log2 kappa_B at this p."""
        qb, qe = self.pair_quadratics(v)
        with np.errstate(under="ignore"):
            kb = float(np.sum(np.exp(-self.tau * qb)))
            ke = float(np.sum(np.exp(-self.tau * qe)))
        return float(np.log2(ke) - np.log2(kb))

    def pair_coupling(self, k: int, receiver: str = "bob") -> np.ndarray:
        """Linear map C of pair k: receiver channel times the diagonal difference."""
        mat = self.g_mat if receiver == "bob" else self.m_mat
        return mat * self.ds[k][None, :]

    def pair_gram(self, k: int, receiver: str = "bob") -> np.ndarray:
        c = self.pair_coupling(k, receiver)
        return c.conj().T @ c


def build_quadratic_forms(
    cfg: SystemConfig,
    wch: WhitenedChannels,
    p: HybridPrecoder | np.ndarray,
    cons: Constellation | None = None,
) -> QuadraticForms:
    """Assemble the per-pair and aggregate quadratic forms in v.

    For hypothesis (i, j): s_ij is the p-weighted IRS-incident response,
    a_ij the p-weighted whitened direct response.  Diagonal pairs (m == n)
    contribute nothing to the aggregates.
    """
    cons = cons if cons is not None else Constellation.psk(cfg.m_ary)
    hyps = enumerate_hypotheses(cfg, cons)
    x_mat = hypothesis_matrix(hyps)
    pvec = p.p if isinstance(p, HybridPrecoder) else np.asarray(p)
    xp = x_mat * pvec[None, :]  # (K, n_tx)

    s_hyp = xp @ wch.f.T  # (K, N)
    a_hyp_b = xp @ wch.h_tilde.T  # (K, n_b)
    a_hyp_e = xp @ wch.q_tilde.T  # (K, n_e)

    mi, ni = pair_indices(cfg.n_hyp)
    ds = s_hyp[mi] - s_hyp[ni]
    a_diff_b = a_hyp_b[mi] - a_hyp_b[ni]
    a_diff_e = a_hyp_e[mi] - a_hyp_e[ni]

    scale = cfg.tau * LOG2E
    ds_gram = ds.conj().T @ ds  # sum_p conj(ds_p) ds_p^T
    phi_b = scale * ((wch.g_tilde.conj().T @ wch.g_tilde) * ds_gram)
    phi_e = scale * ((wch.m_tilde.conj().T @ wch.m_tilde) * ds_gram)
    phi_b = 0.5 * (phi_b + phi_b.conj().T)
    phi_e = 0.5 * (phi_e + phi_e.conj().T)

    d_row = scale * np.einsum("pn,pn->n", a_diff_b.conj() @ wch.g_tilde, ds)
    d_prime_row = scale * np.einsum("pn,pn->n", a_diff_e.conj() @ wch.m_tilde, ds)
    c_const = scale * float(np.sum(np.abs(a_diff_b) ** 2) - np.sum(np.abs(a_diff_e) ** 2))

    return QuadraticForms(
        phi_b=phi_b,
        phi_e=phi_e,
        d_row=d_row,
        d_prime_row=d_prime_row,
        c_const=c_const,
        tau=cfg.tau,
        n_irs=cfg.n_irs,
        n_hyp=cfg.n_hyp,
        ds=ds,
        a_diff_b=a_diff_b,
        a_diff_e=a_diff_e,
        g_mat=wch.g_tilde,
        m_mat=wch.m_tilde,
        s_hyp=s_hyp,
        a_hyp_b=a_hyp_b,
        a_hyp_e=a_hyp_e,
    )


@dataclass
class BeamformerResult:
    """Outcome of one IRS solver run."""

    v: IrsPhaseVector
    converged: bool
    iterations: int
    surrogate_value: float
    secrecy_rate: float
    trace: list[float]
    extras: dict = field(default_factory=dict)


def project_unit_modulus(z: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Elementwise z / |z|, keeping the previous phase where z is exactly zero."""
    mag = np.abs(z)
    out = keep.copy()
    nz = mag > 0.0
    out[nz] = z[nz] / mag[nz]
    return out


def irs_bca(
    qf: QuadraticForms,
    v0: IrsPhaseVector | np.ndarray | None = None,
    tol: float = 1e-7,
    max_sweeps: int = 100,
    trace_elements: bool = False,
) -> BeamformerResult:
    """Cyclic block coordinate ascent with the closed-form per-element update.

    Element n maximizes its own term exactly, so the surrogate never decreases
    across updates.  A zero update numerator keeps the previous phase.  Stops
    when a full sweep improves the surrogate by at most tol * max(1, |value|).
    """
    sur = qf.surrogate()
    phi, delta = sur.phi, sur.delta
    n = qf.n_irs
    v = as_phase_array(v0).copy() if v0 is not None else np.ones(n, dtype=complex)
    w = phi @ v
    value = sur.value(v)
    trace = [value]
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        prev = value
        for idx in range(n):
            c = w[idx] - phi[idx, idx] * v[idx] + np.conj(delta[idx])
            mag = abs(c)
            if mag == 0.0:
                if trace_elements:
                    trace.append(sur.value(v))
                continue
            new = c / mag
            if new != v[idx]:
                w += phi[:, idx] * (new - v[idx])
                v[idx] = new
            if trace_elements:
                trace.append(sur.value(v))
        value = sur.value(v)
        if not trace_elements:
            trace.append(value)
        if value - prev <= tol * max(1.0, abs(value)):
            converged = True
            break
    return BeamformerResult(
        v=IrsPhaseVector(v),
        converged=converged,
        iterations=sweeps,
        surrogate_value=value,
        secrecy_rate=qf.secrecy_rate(v),
        trace=trace,
    )


def default_admm_rho(qf: QuadraticForms) -> float:
    """Scale-aware penalty default, 2 tr(Phi_E)/N + 1."""
    return 2.0 * float(np.trace(qf.phi_e).real) / qf.n_irs + 1.0


def irs_admm(
    qf: QuadraticForms,
    v0: IrsPhaseVector | np.ndarray | None = None,
    rho: float | None = None,
    tol: float = 0.01,
    max_iters: int = 50,
    inner_max: int = 100,
) -> BeamformerResult:
    """DC-linearized ADMM over the unit-modulus set.

    The outer loop re-linearizes the convex Bob term at the current iterate;
    the inner ADMM alternates a linear solve for the slack u, the unit-modulus
    projection for v (keeping the previous phase at exact zeros), and the dual
    update.  Inner stop: ||v_k - v_{k-1}|| <= tol.  Outer stop: the change of
    the true secrecy-rate objective is <= tol.  Returns the best-surrogate
    iterate seen, so the result never falls below the starting point.
    """
    sur = qf.surrogate()
    n = qf.n_irs
    v = as_phase_array(v0).copy() if v0 is not None else np.ones(n, dtype=complex)
    rho = rho if rho is not None else default_admm_rho(qf)
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    lin = 2.0 * (np.conj(qf.d_row) - np.conj(qf.d_prime_row))  # 2 D^H - 2 D'^H
    system = cho_factor(2.0 * qf.phi_e + rho * np.eye(n))
    u = v.copy()
    lam = np.zeros(n, dtype=complex)

    best_v = v.copy()
    best_s = sur.value(v)
    trace = [best_s]
    rate_prev = qf.secrecy_rate(v)
    converged = False
    outer = 0
    for outer in range(1, max_iters + 1):
        u_o = v.copy()
        rhs_const = 2.0 * (qf.phi_b.conj().T @ u_o) + lin
        for _ in range(inner_max):
            u = cho_solve(system, rhs_const + lam + rho * v)
            v_new = project_unit_modulus(u - lam / rho, v)
            lam = lam - rho * (u - v_new)
            dv = float(np.linalg.norm(v_new - v))
            v = v_new
            if dv <= tol:
                break
        s = sur.value(v)
        trace.append(s)
        if s > best_s:
            best_s, best_v = s, v.copy()
        rate = qf.secrecy_rate(v)
        if abs(rate - rate_prev) <= tol:
            converged = True
        rate_prev = rate
        if converged:
            break
    primal = float(np.linalg.norm(u - v))
    converged = converged and primal <= tol
    return BeamformerResult(
        v=IrsPhaseVector(best_v),
        converged=converged,
        iterations=outer,
        surrogate_value=best_s,
        secrecy_rate=qf.secrecy_rate(best_v),
        trace=trace,
        extras={"primal_residual": primal, "rho": rho},
    )


class SdpNonConvergence(RuntimeError):
    """Raised when no restart meets the stationarity residual; carries the best iterate."""

    def __init__(self, message: str, q: np.ndarray, value: float, residual: float):
        super().__init__(message)
        self.q = q
        self.value = value
        self.residual = residual


@dataclass
class SdpSolution:
    q: np.ndarray
    value: float
    factor: np.ndarray  # Y with Q = Y Y^H, unit-norm rows
    residual: float
    certified: bool
    restarts_used: int


def _row_normalize(y: np.ndarray) -> np.ndarray:
    return y / np.linalg.norm(y, axis=1, keepdims=True)


def _bm_ascent(
    psi: np.ndarray, y: np.ndarray, tol_abs: float, max_sweeps: int
) -> tuple[np.ndarray, float, float]:
    """Row-coordinate maximization of tr(Y^H psi Y) over unit-norm rows.

    Fixing every row but k, the objective is 2 Re{y_k^H c_k} + const with
    c_k = (psi Y)_k - psi_kk y_k, maximized by aligning y_k with c_k.  Each
    sweep is monotone and costs O(K^2 r); the Riemannian gradient norm is the
    stationarity measure.
    """
    k_dim = psi.shape[0]
    g = psi @ y
    for _ in range(max_sweeps):
        for k in range(k_dim):
            c = g[k] - psi[k, k] * y[k]
            nc = float(np.linalg.norm(c))
            if nc == 0.0:
                continue
            new_row = c / nc
            delta = new_row - y[k]
            if np.any(delta):
                g += np.outer(psi[:, k], delta)
                y[k] = new_row
        inner = np.real(np.sum(np.conj(y) * g, axis=1))
        rnorm = float(np.linalg.norm(g - inner[:, None] * y))
        if rnorm <= tol_abs:
            break
    f = float(np.sum(np.conj(y) * g).real)
    inner = np.real(np.sum(np.conj(y) * g, axis=1))
    rnorm = float(np.linalg.norm(g - inner[:, None] * y))
    return y, f, rnorm


def sdp_unit_diag(
    psi: np.ndarray,
    tol: float = 1e-6,
    n_restarts: int = 5,
    max_iters: int = 5000,
    seed: int = 0,
) -> SdpSolution:
    """Maximize tr(psi Q) over Hermitian Q >= 0 with unit diagonal.

    Solved through the low-rank factorization Q = Y Y^H with rank
    ceil(sqrt(2K)) and unit-norm rows, driven to a stationary point by
    monotone row-coordinate sweeps; random restarts guard against spurious
    stationary points and a dual certificate (Diag(mu) - psi >= 0 at
    mu = Re diag(psi Q)) ends the restart loop early when global optimality
    is confirmed.
    """
    psi = np.asarray(psi)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise ValueError("psi must be square")
    if np.max(np.abs(psi - psi.conj().T)) > 1e-10 * max(1.0, float(np.abs(psi).max())):
        raise ValueError("psi must be Hermitian")
    k = psi.shape[0]
    scale = float(np.linalg.norm(psi, "fro"))
    if scale == 0.0:
        eye = np.eye(k, dtype=complex)
        return SdpSolution(q=eye, value=0.0, factor=eye, residual=0.0, certified=True, restarts_used=0)

    rank = math.ceil(math.sqrt(2 * k))
    tol_abs = tol * max(1.0, scale)
    best: tuple[float, np.ndarray, float] | None = None  # (value, Y, residual)
    certified = False
    restarts = 0
    for restart in range(n_restarts):
        restarts = restart + 1
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, restart))))
        y0 = _row_normalize(rng.standard_normal((k, rank)) + 1j * rng.standard_normal((k, rank)))
        y, value, residual = _bm_ascent(psi, y0, tol_abs, max_iters)
        if best is None or value > best[0]:
            best = (value, y, residual)
        if residual <= tol_abs:
            mu = np.real(np.sum(np.conj(y) * (psi @ y), axis=1))  # Re diag(psi Q)
            dual_gap = float(np.linalg.eigvalsh(np.diag(mu) - psi)[0])
            if dual_gap >= -tol_abs:
                certified = True
                best = (value, y, residual)
                break
    value, y, residual = best
    if residual > tol_abs:
        q = y @ y.conj().T
        raise SdpNonConvergence(
            f"stationarity residual {residual:.3e} above {tol_abs:.3e} after {restarts} restarts",
            q=q,
            value=value,
            residual=residual,
        )
    q = y @ y.conj().T
    return SdpSolution(
        q=0.5 * (q + q.conj().T),
        value=value,
        factor=y,
        residual=residual,
        certified=certified,
        restarts_used=restarts,
    )


def irs_sdr(
    qf: QuadraticForms,
    n_randomizations: int = 200,
    seed: int = 0,
    sdp_tol: float = 1e-6,
) -> BeamformerResult:
    """Semidefinite relaxation with Gaussian randomization rounding.

    Lifts the surrogate to a homogeneous quadratic in (v, t), solves the
    unit-diagonal SDP, then rounds: each Gaussian sample from the optimal Q is
    projected elementwise to unit modulus and de-homogenized by the phase of
    its last coordinate; the best-surrogate sample wins.
    """
    if n_randomizations < 1:
        raise ValueError("n_randomizations must be >= 1")
    sur = qf.surrogate()
    n = qf.n_irs
    psi = np.zeros((n + 1, n + 1), dtype=complex)
    psi[:n, :n] = sur.phi
    psi[:n, n] = np.conj(sur.delta)
    psi[n, :n] = sur.delta
    psi = 0.5 * (psi + psi.conj().T)

    sol = sdp_unit_diag(psi, tol=sdp_tol)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 0xC0FFEE))))
    rank = sol.factor.shape[1]
    w = (rng.standard_normal((n_randomizations, rank)) + 1j * rng.standard_normal((n_randomizations, rank))) / np.sqrt(2.0)
    xi = w @ sol.factor.T  # samples with covariance Q
    mag = np.abs(xi)
    unit = np.where(mag > 0.0, xi / np.where(mag > 0.0, mag, 1.0), 1.0)
    v_cands = unit[:, :n] * np.conj(unit[:, n])[:, None]
    values = sur.values(v_cands)
    best = int(np.argmax(values))
    v_best = v_cands[best]
    return BeamformerResult(
        v=IrsPhaseVector(v_best),
        converged=True,
        iterations=1,
        surrogate_value=float(values[best]),
        secrecy_rate=qf.secrecy_rate(v_best),
        trace=[float(values[best])],
        extras={
            "sdp_value": sol.value,
            "sdp_bound": sol.value + qf.c_const,
            "sdp_residual": sol.residual,
            "sdp_certified": sol.certified,
        },
    )
