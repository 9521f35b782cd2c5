"""Reduced models: rational moment-matched kernels and their Markovian embedding.

An order-``n`` fit approximates the resolvent in ``lam = 1/s`` by

    R(lam) = [I - lam B_0 - ... - lam^n B_{n-1}]^{-1} [lam A_0 + ... + lam^n A_{n-1}]

matching ``lim_{lam -> inf}`` (the BD mobility ``chi_inf``) and the first
``2n - 1`` Taylor coefficients at ``lam = 0``.  In the time domain the
fitted kernel is ``chi_n(t) = (0 ... 0 I) exp(D t) (A_{n-1}; ...; A_0)``
with the companion drift ``D``; auxiliary variables ``(z_{n-1}, ..., z_1, z)``
obey

    dz_j = (z_{j+1} + B_j z + A_j f) dt + dxi_j,    z_n = 0, z_0 = z,

and the white noises are chosen so that the colored noise seen by the
coordinate has covariance ``kBT chi_n``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import expm

from .errors import (FDTConstructionError, FitDegeneracyError, StabilityError,
                     ValidationError)
from .kernels import KernelSpec, kernel_moments
from .laplace import KernelCurve, chi_infinity

__all__ = [
    "RationalApproximation",
    "ExtendedSystem",
    "FDTReport",
    "fit_order",
    "companion_drift",
    "build_extended_system",
    "approx_kernel_eval",
    "approx_kernel_curve",
    "verify_fdt",
    "delta_kernel_curve",
    "rational_taylor",
]

log = logging.getLogger(__name__)

_MAX_ORDER = 3


@dataclass(frozen=True, eq=False)
class RationalApproximation:
    """Order-``n`` rational approximation of ``X(lam)``."""

    order: int
    A: tuple          # A_0 .. A_{n-1}, each (d, d)
    B: tuple          # B_0 .. B_{n-1}
    moments: tuple    # M_0 .. M_{2n-2}
    chi_inf: np.ndarray
    kernel: Optional[KernelSpec] = None

    @property
    def d(self) -> int:
        return self.chi_inf.shape[0]

    @property
    def drift(self) -> np.ndarray:
        return companion_drift(self.B)

    @property
    def input_stack(self) -> np.ndarray:
        """``(A_{n-1}; ...; A_0)`` as an ``(n d, d)`` array."""
        return np.vstack(list(reversed(self.A)))

    def as_dict(self) -> dict:
        return {"order": self.order,
                "A": [a.tolist() for a in self.A],
                "B": [b.tolist() for b in self.B],
                "moments": [m.tolist() for m in self.moments],
                "chi_inf": self.chi_inf.tolist()}


def companion_drift(B: Sequence[np.ndarray]) -> np.ndarray:
    """Block companion matrix acting on ``(z_{n-1}, ..., z_1, z)``.

    For ``n = 2`` this is ``[[0, B_1], [I, B_0]]``.
    """
    n = len(B)
    d = np.atleast_2d(B[0]).shape[0]
    D = np.zeros((n * d, n * d))
    for j in range(n):
        row = n - 1 - j
        D[row * d:(row + 1) * d, (n - 1) * d:] = B[j]
        if j <= n - 2:
            col = n - 2 - j
            D[row * d:(row + 1) * d, col * d:(col + 1) * d] = np.eye(d)
    return D


def rational_taylor(A: Sequence[np.ndarray], B: Sequence[np.ndarray], count: int) -> list:
    """First ``count`` Taylor coefficients of ``R(lam)/lam`` at ``lam = 0``."""
    n = len(B)
    d = np.atleast_2d(A[0]).shape[0]
    r = []
    for k in range(count):
        acc = A[k].copy() if k < n else np.zeros((d, d))
        for j in range(n):
            if k - 1 - j >= 0:
                acc = acc + B[j] @ r[k - 1 - j]
        r.append(acc)
    return r


def _solve_right(lhs: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    """Solve ``X @ lhs = rhs`` for ``X``."""
    if np.linalg.cond(lhs) > 1e12:
        raise FitDegeneracyError(f"{what} is singular (cond = {np.linalg.cond(lhs):.3g})")
    return np.linalg.solve(lhs.T, rhs.T).T


def _fit_general(M: list, chi_inf: np.ndarray, n: int):
    d = chi_inf.shape[0]
    big = np.zeros((n * d, n * d))
    rhs = np.zeros((d, n * d))
    for r, k in enumerate(range(n - 1, 2 * n - 1)):
        rhs[:, r * d:(r + 1) * d] = M[k]
        for j in range(n):
            blk = np.zeros((d, d))
            if k - 1 - j >= 0:
                blk = blk + M[k - 1 - j]
            if k == n - 1 and j == n - 1:
                blk = blk - chi_inf
            big[j * d:(j + 1) * d, r * d:(r + 1) * d] = blk
    row = _solve_right(big, rhs, f"order-{n} moment system")
    B = [row[:, j * d:(j + 1) * d] for j in range(n)]
    A = []
    for k in range(n):
        acc = M[k].copy()
        for j in range(n):
            if k - 1 - j >= 0:
                acc = acc - B[j] @ M[k - 1 - j]
        A.append(acc)
    return A, B


def fit_order(kernel: KernelSpec, n: int, moments: Optional[Sequence[np.ndarray]] = None,
              tol: float = 1e-10) -> RationalApproximation:
    """Moment-matched rational approximation of order ``n`` (1, 2 or 3).

    Raises
    ------
    FitDegeneracyError
        The matching equations are singular or the solution fails
        re-verification.
    StabilityError
        The companion drift has an eigenvalue with nonnegative real part.
    """
    if n not in (1, 2, 3):
        raise ValidationError(f"order must be 1, 2 or 3 (got {n}); use chi_infinity for order 0")
    d = kernel.d
    chi_inf = chi_infinity(kernel)
    G = kernel.gamma + kernel.m_infinity
    M = list(moments) if moments is not None else kernel_moments(kernel, n)
    if len(M) < 2 * n - 1:
        raise ValidationError(f"order {n} needs {2 * n - 1} moments, got {len(M)}")
    M = [np.asarray(m, dtype=float).reshape(d, d) for m in M[:2 * n - 1]]
    I = np.eye(d)
    if n == 1:
        A, B = [I.copy()], [-G]
    elif n == 2:
        A0 = M[0]
        B0 = _solve_right(M[1] + G, M[2] + M[1] @ G, "M1 + gamma + M_inf")
        A1 = M[1] - B0
        B1 = -A1 @ G
        A, B = [A0, A1], [B0, B1]
    else:
        A, B = _fit_general(M, chi_inf, n)
    fit = RationalApproximation(order=n, A=tuple(A), B=tuple(B), moments=tuple(M),
                                chi_inf=chi_inf, kernel=kernel)
    _verify_fit(fit, tol)
    eig = np.linalg.eigvals(fit.drift)
    bad = eig[eig.real >= 0]
    if len(bad):
        raise StabilityError(f"order-{n} fit is unstable: drift eigenvalue {bad[0]:.6g}")
    return fit


def _verify_fit(fit: RationalApproximation, tol: float) -> None:
    Bl, Al = fit.B[-1], fit.A[-1]
    try:
        lim = -np.linalg.solve(Bl, Al)
    except np.linalg.LinAlgError as exc:
        raise FitDegeneracyError("leading denominator coefficient is singular") from exc
    scale = max(1.0, float(np.max(np.abs(fit.chi_inf))))
    if np.max(np.abs(lim - fit.chi_inf)) > tol * scale:
        raise FitDegeneracyError("fit does not reproduce chi_inf at lam -> infinity")
    r = rational_taylor(fit.A, fit.B, len(fit.moments))
    for k, (rk, mk) in enumerate(zip(r, fit.moments)):
        sc = max(1.0, float(np.max(np.abs(mk))))
        if np.max(np.abs(rk - mk)) > tol * sc:
            raise FitDegeneracyError(f"fit does not reproduce moment M{k}")


# ---------------------------------------------------------------------------
# Extended (embedded) system
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExtendedSystem:
    """Linear SDE for the auxiliary variables ``y = (z_{n-1}, ..., z_1, z)``.

    ``dy = (D y + stack f(x)) dt + dxi`` with ``<dxi dxi^T> = Sigma dt`` and
    ``y(0) ~ N(0, Q)``; the coordinate follows ``dx = z dt``.
    """

    order: int
    D: np.ndarray
    stack: np.ndarray
    Sigma: np.ndarray
    Q: np.ndarray
    kBT: float
    fit: RationalApproximation
    noise_block_diagonal: bool = True
    experimental: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.stack.shape[1]

    @property
    def readout(self) -> np.ndarray:
        """``(0 ... 0 I)``, shape ``(d, n d)``."""
        n, d = self.order, self.d
        c = np.zeros((d, n * d))
        c[:, (n - 1) * d:] = np.eye(d)
        return c

    def noise_factor(self, clip: float = 1e-12) -> np.ndarray:
        """``L`` with ``L L^T = Sigma`` (eigenvalues above ``-clip`` clipped to 0)."""
        return _psd_factor(self.Sigma, clip, "Sigma")

    def initial_factor(self, clip: float = 1e-12) -> np.ndarray:
        return _psd_factor(self.Q, clip, "Q")

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.D)

    def as_dict(self) -> dict:
        ev = self.eigenvalues()
        return {"order": self.order, "kBT": self.kBT,
                "Q": self.Q.tolist(), "Sigma": self.Sigma.tolist(),
                "D": self.D.tolist(),
                "drift_eigenvalues": [[float(e.real), float(e.imag)] for e in ev],
                "noise_block_diagonal": self.noise_block_diagonal,
                "experimental": self.experimental}


def _psd_factor(mat: np.ndarray, clip: float, name: str) -> np.ndarray:
    sym = 0.5 * (mat + mat.T)
    w, v = np.linalg.eigh(sym)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w.min() < -clip * scale:
        raise FDTConstructionError(f"{name} is not PSD: eigenvalue {w.min():.3g}")
    return v * np.sqrt(np.clip(w, 0.0, None))[None, :]


def _lyap_sigma(D: np.ndarray, Q: np.ndarray) -> np.ndarray:
    S = -(D @ Q + Q @ D.T)
    return 0.5 * (S + S.T)


def _off_block_max(S: np.ndarray, n: int, d: int) -> float:
    m = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                m = max(m, float(np.max(np.abs(S[i * d:(i + 1) * d, j * d:(j + 1) * d]))))
    return m


def _free_index(n: int, d: int):
    """Upper-triangle entries of Q not fixed by the last block column."""
    free_dim = (n - 1) * d
    return [(i, j) for i in range(free_dim) for j in range(i, free_dim)]


def _complete_zero_cross(D, fixed_col, n, d):
    """Fill the free part of Q so that all off-diagonal blocks of Sigma vanish."""
    N = n * d
    free = _free_index(n, d)

    def assemble(vals):
        Q = np.zeros((N, N))
        Q[:, (n - 1) * d:] = fixed_col
        Q[(n - 1) * d:, :] = fixed_col.T
        for (i, j), v in zip(free, vals):
            Q[i, j] = Q[j, i] = v
        return Q

    def offdiag(S):
        out = []
        for bi in range(n):
            for bj in range(bi + 1, n):
                out.append(S[bi * d:(bi + 1) * d, bj * d:(bj + 1) * d].ravel())
        return np.concatenate(out)

    base = offdiag(_lyap_sigma(D, assemble(np.zeros(len(free)))))
    cols = []
    for k in range(len(free)):
        e = np.zeros(len(free))
        e[k] = 1.0
        cols.append(offdiag(_lyap_sigma(D, assemble(e))) - base)
    mat = np.column_stack(cols)
    sol, *_ = np.linalg.lstsq(mat, -base, rcond=None)
    Q = assemble(sol)
    resid = float(np.max(np.abs(mat @ sol + base))) if len(base) else 0.0
    return Q, resid


def _complete_sdp(D, fixed_col, n, d):
    """Some PSD completion with PSD Sigma, as far inside the cone as possible."""
    import cvxpy as cp

    N = n * d
    Q = cp.Variable((N, N), symmetric=True)
    margin = cp.Variable()
    S = -(D @ Q + Q @ D.T)
    S = 0.5 * (S + S.T)
    cons = [Q[:, (n - 1) * d:] == fixed_col,
            Q - margin * np.eye(N) >> 0,
            S - margin * np.eye(N) >> 0,
            margin <= 1.0]
    prob = cp.Problem(cp.Maximize(margin), cons)
    try:
        prob.solve(solver="CLARABEL")
    except Exception as exc:  # solver failures surface as FDT errors
        raise FDTConstructionError(f"PSD completion failed: {exc}") from exc
    if prob.status not in ("optimal", "optimal_inaccurate") or margin.value is None:
        raise FDTConstructionError(f"no PSD completion exists (solver status {prob.status})")
    if margin.value < -1e-9:
        raise FDTConstructionError(
            f"no PSD completion exists: best eigenvalue margin {float(margin.value):.3g}")
    Qv = np.array(Q.value)
    Qv = 0.5 * (Qv + Qv.T)
    Qv[:, (n - 1) * d:] = fixed_col
    Qv[(n - 1) * d:, :] = fixed_col.T
    return Qv


def build_extended_system(fit: RationalApproximation, kBT: float = 1.0,
                          tol: float = 1e-12) -> ExtendedSystem:
    """Noise covariance and initial covariance that make the embedded noise FDT-exact.

    The last block column of ``Q`` is ``kBT * (A_{n-1}; ...; A_0)``.  For
    ``n = 1`` ``Q = kBT I``; for ``n = 2`` the remaining block is
    ``Q_1 = -(Q_2^T B_1^T + B_0 Q_12^T)`` so that the two white noises are
    uncorrelated.  For ``n = 3`` the free blocks are chosen to zero every
    off-diagonal block of ``Sigma``; if that fails a PSD completion is found
    by semidefinite programming and the noise is sampled jointly.
    ``Sigma = -(D Q + Q D^T)`` in every case.
    """
    if kBT <= 0:
        raise ValidationError("kBT must be positive")
    n, d = fit.order, fit.d
    D = fit.drift
    eig = np.linalg.eigvals(D)
    if np.any(eig.real >= 0):
        raise StabilityError(f"drift eigenvalue {eig[eig.real >= 0][0]:.6g} is not stable")
    stack = fit.input_stack
    fixed = kBT * stack
    block_diag = True
    experimental = n >= 3
    if n == 1:
        Q = kBT * np.eye(d)
    elif n == 2:
        A0, A1 = fit.A
        B0, B1 = fit.B
        Q12, Q2 = kBT * A1, kBT * A0
        Q1 = -(Q2.T @ B1.T + B0 @ Q12.T)
        if np.max(np.abs(Q1 - Q1.T)) > 1e-10 * max(1.0, float(np.max(np.abs(Q1)))):
            Q, resid = _complete_zero_cross(D, fixed, n, d)
            block_diag = resid <= 1e-10
        else:
            Q1 = 0.5 * (Q1 + Q1.T)
            Q = np.block([[Q1, Q12], [Q12.T, Q2]])
    else:
        Q, resid = _complete_zero_cross(D, fixed, n, d)
        block_diag = resid <= 1e-10
    Sigma = _lyap_sigma(D, Q)
    if not _is_psd(Q, tol) or not _is_psd(Sigma, tol):
        if n == 1:
            raise FDTConstructionError(
                f"Sigma not PSD: eigenvalue {np.linalg.eigvalsh(Sigma).min():.3g}")
        log.info("zero-cross completion not PSD for order %d; using SDP completion", n)
        Q = _complete_sdp(D, fixed, n, d)
        Sigma = _lyap_sigma(D, Q)
        block_diag = _off_block_max(Sigma, n, d) <= 1e-10
    for name, mat in (("Q", Q), ("Sigma", Sigma)):
        w = np.linalg.eigvalsh(0.5 * (mat + mat.T))
        if w.min() < -tol * max(1.0, float(np.max(np.abs(w)))):
            raise FDTConstructionError(f"{name} is not PSD: eigenvalue {w.min():.3g}")
    return ExtendedSystem(order=n, D=D, stack=stack, Sigma=Sigma, Q=Q, kBT=float(kBT),
                          fit=fit, noise_block_diagonal=block_diag, experimental=experimental)


def _is_psd(mat: np.ndarray, tol: float) -> bool:
    w = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    return bool(w.min() >= -tol * max(1.0, float(np.max(np.abs(w)))))


# ---------------------------------------------------------------------------
# Kernel evaluation and FDT checks
# ---------------------------------------------------------------------------

_Approx = Union[ExtendedSystem, RationalApproximation]


def _drift_and_stack(obj: _Approx):
    if isinstance(obj, ExtendedSystem):
        return obj.D, obj.stack, obj.order, obj.d
    return obj.drift, obj.input_stack, obj.order, obj.d


def approx_kernel_eval(system: _Approx, t: float) -> np.ndarray:
    """``chi_n(t) = (0 ... 0 I) exp(D t) stack`` as a ``(d, d)`` matrix."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    D, stack, n, d = _drift_and_stack(system)
    return (expm(D * t) @ stack)[(n - 1) * d:]


def approx_kernel_curve(system: _Approx, t) -> KernelCurve:
    """``chi_n`` on a grid, tagged ``rational-order-n``."""
    grid = np.asarray(t, dtype=float)
    if np.any(grid < 0):
        raise ValidationError("t must be nonnegative")
    D, stack, n, d = _drift_and_stack(system)
    vals = np.empty((len(grid), d, d))
    steps = np.diff(grid)
    uniform = len(grid) > 64 and np.allclose(steps, steps[0], rtol=1e-12, atol=0)
    if uniform:
        # propagate with a one-step propagator; re-anchor to limit drift
        prop = expm(D * steps[0])
        cur = None
        for i, ti in enumerate(grid):
            if i % 512 == 0:
                cur = expm(D * ti) @ stack
            else:
                cur = prop @ cur
            vals[i] = cur[(n - 1) * d:]
    else:
        for i, ti in enumerate(grid):
            vals[i] = (expm(D * ti) @ stack)[(n - 1) * d:]
    fit = system.fit if isinstance(system, ExtendedSystem) else system
    return KernelCurve(t=grid, values=vals, provenance=f"rational-order-{n}",
                       kernel=fit.kernel)


@dataclass(frozen=True)
class FDTReport:
    lyapunov_residual: float
    q_min_eigenvalue: float
    sigma_min_eigenvalue: float
    last_column_mismatch: float
    cross_block_residual: float
    kernel_identity_residual: float
    consistency_residual: Optional[float] = None

    def ok(self, tol: float = 1e-10) -> bool:
        vals = [self.lyapunov_residual, self.last_column_mismatch,
                self.kernel_identity_residual]
        return all(v <= tol for v in vals) and self.q_min_eigenvalue >= -tol \
            and self.sigma_min_eigenvalue >= -tol

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_fdt(system: ExtendedSystem, n_lags: int = 20, t_max: float = 10.0) -> FDTReport:
    """Residuals of every identity the embedded noise must satisfy.

    The kernel identity compares ``(0..I) exp(D tau) Q (0..I)^T`` with
    ``kBT chi_n(tau)`` at ``n_lags`` lags in ``[0, t_max]``.  The
    consistency residual (order 2 only) is ``|Q_2^T B_1^T + Q_1 + B_0 Q_12^T|``.
    """
    n, d = system.order, system.d
    D, Q, S = system.D, system.Q, system.Sigma
    lyap = float(np.max(np.abs(D @ Q + Q @ D.T + S)))
    q_min = float(np.linalg.eigvalsh(0.5 * (Q + Q.T)).min())
    s_min = float(np.linalg.eigvalsh(0.5 * (S + S.T)).min())
    c = system.readout
    col = Q @ c.T
    mismatch = float(np.max(np.abs(col - system.kBT * system.stack)))
    cross = _off_block_max(S, n, d)
    ident = 0.0
    for tau in np.linspace(0.0, t_max, n_lags):
        E = expm(D * tau)
        lhs = c @ E @ Q @ c.T
        rhs = system.kBT * (E @ system.stack)[(n - 1) * d:]
        ident = max(ident, float(np.max(np.abs(lhs - rhs))))
    consistency = None
    if n == 2:
        B0, B1 = system.fit.B
        Q1, Q12, Q2 = Q[:d, :d], Q[:d, d:], Q[d:, d:]
        consistency = float(np.max(np.abs(Q2.T @ B1.T + Q1 + B0 @ Q12.T)))
    return FDTReport(lyapunov_residual=lyap, q_min_eigenvalue=q_min,
                     sigma_min_eigenvalue=s_min, last_column_mismatch=mismatch,
                     cross_block_residual=cross, kernel_identity_residual=ident,
                     consistency_residual=consistency)


def delta_kernel_curve(chi_inf, dt: float, n: int) -> KernelCurve:
    """Grid version of ``2 chi_inf delta(t)``: ``2 chi_inf / dt`` at lag 0, zero elsewhere."""
    ci = np.atleast_2d(np.asarray(chi_inf, dtype=float))
    vals = np.zeros((n, ci.shape[0], ci.shape[0]))
    vals[0] = 2.0 * ci / dt
    return KernelCurve(t=dt * np.arange(n), values=vals, provenance="bd-delta",
                       meta={"chi_inf": ci.tolist()})


def with_Q(system: ExtendedSystem, Q: np.ndarray) -> ExtendedSystem:
    """Copy of ``system`` with a replaced initial covariance (no re-validation)."""
    return replace(system, Q=np.asarray(Q, dtype=float))
