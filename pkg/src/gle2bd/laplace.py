"""Resolvent of the memory kernel and numerical Laplace inversion.

The reference ("exact") fundamental kernel chi(t) is obtained by inverting
``X(s) = [sI + gamma + Theta(s)]^{-1}`` with the Euler algorithm: a
trapezoidal discretisation of the Bromwich integral whose alternating tail
is accelerated by binomial (Euler) averaging of the last partial sums.  A
second, independent route (Gauss-Legendre quadrature along a vertical
contour after subtracting the small-t Taylor behaviour) is provided for
cross-validation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InversionError, NoBDLimitError, ValidationError
from .kernels import KernelSpec, kernel_moments

__all__ = [
    "InversionConfig",
    "KernelCurve",
    "chi_laplace",
    "chi_infinity",
    "invert_laplace",
    "exact_chi_curve",
    "closed_form_chi_curve",
    "bromwich_invert",
    "bromwich_chi",
]

PROVENANCES = ("exact-euler", "closed-form", "rational-order-1", "rational-order-2",
               "rational-order-3", "bd-delta", "bromwich-gl", "tabulated")


@dataclass(frozen=True)
class InversionConfig:
    """Parameters of the Euler inversion.

    ``n_terms`` partial sums are formed before averaging; ``n_average`` + 1
    consecutive partial sums ``S_n .. S_{n+m}`` are combined with binomial
    weights.  ``shift`` (the usual ``A``) sets the discretisation error to
    roughly ``exp(-A)``; rounding error grows like ``exp(A/2) * eps``.
    """

    t: tuple = ()
    n_terms: int = 32
    n_average: int = 15
    shift: float = 25.0

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).ravel()
        object.__setattr__(self, "t", tuple(t.tolist()))
        if self.n_terms < self.n_average + 1:
            raise ValidationError("n_terms must be at least n_average + 1")
        if self.n_average < 0 or self.shift <= 0:
            raise ValidationError("n_average must be >= 0 and shift > 0")
        if len(t) and (np.any(t < 0) or np.any(np.diff(t) <= 0)):
            raise ValidationError("inversion grid must be strictly increasing and nonnegative")

    @property
    def grid(self) -> np.ndarray:
        return np.asarray(self.t, dtype=float)

    @classmethod
    def uniform(cls, t_max: float, n: int, **kw) -> "InversionConfig":
        return cls(t=tuple(np.linspace(0.0, t_max, n)), **kw)


@dataclass(frozen=True, eq=False)
class KernelCurve:
    """A matrix-valued kernel sampled on a time grid."""

    t: np.ndarray
    values: np.ndarray  # (len(t), d, d)
    provenance: str
    kernel: Optional[KernelSpec] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None, None]
        if v.ndim != 3 or v.shape[0] != t.shape[0] or v.shape[1] != v.shape[2]:
            raise ValidationError(f"curve values must have shape (len(t), d, d), got {v.shape}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def scalar(self) -> np.ndarray:
        """Values of a 1x1 curve as a flat array."""
        if self.d != 1:
            raise ValidationError("curve is matrix valued")
        return self.values[:, 0, 0]

    @property
    def dt(self) -> float:
        steps = np.diff(self.t)
        if len(steps) == 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValidationError("curve grid is not uniform")
        return float(steps[0])


def _identity_like(kernel: KernelSpec) -> np.ndarray:
    return np.eye(kernel.d)


def chi_laplace(kernel: KernelSpec, s) -> np.ndarray:
    """Resolvent ``X(s) = [sI + gamma + Theta(s)]^{-1}``.

    Vectorised: ``s`` may be an array (real or complex); the result has
    shape ``s.shape + (d, d)``.
    """
    s_arr = np.asarray(s)
    if np.iscomplexobj(s_arr) and not kernel.complex_ok:
        raise InversionError(f"kernel {kernel.name!r} cannot be evaluated at complex s")
    d = kernel.d
    th = np.asarray(kernel.theta(s_arr)).reshape(s_arr.shape + (d, d))
    mat = s_arr[..., None, None] * np.eye(d) + kernel.gamma + th
    try:
        with np.errstate(all="raise"):
            out = np.linalg.inv(mat)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        raise InversionError(f"sI + gamma + Theta(s) is singular at s = {s!r}") from exc
    if not np.all(np.isfinite(out)):
        raise InversionError(f"resolvent not finite at s = {s!r}")
    return out


def chi_infinity(kernel: KernelSpec) -> np.ndarray:
    """``(gamma + M_inf)^{-1}``, the time integral of chi."""
    mat = kernel.gamma + kernel.m_infinity
    if np.linalg.cond(mat) > 1e14:
        raise NoBDLimitError("gamma + M_inf is singular: no Brownian-dynamics limit exists")
    return np.linalg.inv(mat)


def _euler_weights(m: int) -> np.ndarray:
    return np.array([math.comb(m, j) for j in range(m + 1)], dtype=float) / 2.0 ** m


def _euler_sum(F: Callable, t: np.ndarray, cfg: InversionConfig) -> np.ndarray:
    n, m, A = cfg.n_terms, cfg.n_average, cfg.shift
    k = np.arange(n + m + 1)
    s = (A + 2j * math.pi * k[None, :]) / (2.0 * t[:, None])
    vals = np.asarray(F(s))
    if vals.ndim == 2:
        vals = vals[..., None, None]
    re = vals.real
    signs = (-1.0) ** k
    terms = signs[None, :, None, None] * re
    terms[:, 0] *= 0.5
    partial = np.cumsum(terms, axis=1) * (math.exp(A / 2.0) / t)[:, None, None, None]
    w = _euler_weights(m)
    out = np.einsum("j,tjab->tab", w, partial[:, n:n + m + 1])
    if not np.all(np.isfinite(out)):
        raise InversionError("non-finite Euler sums; use a smaller shift or fewer terms "
                             "(higher working precision would be needed)")
    return out


def invert_laplace(F: Callable, config: InversionConfig, at_zero=None,
                   provenance: str = "exact-euler", kernel: Optional[KernelSpec] = None,
                   chunk: int = 2048) -> KernelCurve:
    """Invert a (matrix-valued) Laplace transform on ``config.grid``.

    ``F`` maps an array of complex ``s`` to ``s.shape + (d, d)`` (scalar
    transforms may return ``s.shape``).  The value at ``t = 0`` is not
    obtained by inversion; pass it as ``at_zero`` when the grid contains 0.
    """
    t = config.grid
    if len(t) == 0:
        raise ValidationError("empty inversion grid")
    pos = t > 0
    if not np.all(pos) and at_zero is None:
        raise ValidationError("grid contains t = 0; supply the boundary value via at_zero")
    tp = t[pos]
    parts = [_euler_sum(F, tp[i:i + chunk], config) for i in range(0, len(tp), chunk)]
    inner = np.concatenate(parts, axis=0) if parts else np.zeros((0, 1, 1))
    d = inner.shape[1] if len(inner) else np.atleast_2d(at_zero).shape[0]
    values = np.empty((len(t), d, d))
    values[pos] = inner
    if not np.all(pos):
        values[~pos] = np.atleast_2d(np.asarray(at_zero, dtype=float))
    return KernelCurve(t=t, values=values, provenance=provenance, kernel=kernel,
                       meta={"n_terms": config.n_terms, "n_average": config.n_average,
                             "shift": config.shift})


def exact_chi_curve(kernel: KernelSpec, t, config: Optional[InversionConfig] = None) -> KernelCurve:
    """Reference chi(t) by Euler inversion, with ``chi(0) = I`` stored exactly."""
    grid = np.asarray(t, dtype=float)
    if config is None:
        cfg = InversionConfig(t=tuple(grid))
    else:
        cfg = InversionConfig(t=tuple(grid), n_terms=config.n_terms,
                              n_average=config.n_average, shift=config.shift)
    return invert_laplace(lambda s: chi_laplace(kernel, s), cfg,
                          at_zero=_identity_like(kernel), kernel=kernel)


def closed_form_chi_curve(kernel: KernelSpec, t) -> KernelCurve:
    if kernel.chi_closed_form is None:
        raise ValidationError(f"kernel {kernel.name!r} has no closed-form chi")
    grid = np.asarray(t, dtype=float)
    vals = np.asarray(kernel.chi_closed_form(grid)).reshape(len(grid), kernel.d, kernel.d)
    return KernelCurve(t=grid, values=vals, provenance="closed-form", kernel=kernel)


# ---------------------------------------------------------------------------
# Independent route: Gauss-Legendre quadrature of the Bromwich integral
# ---------------------------------------------------------------------------

def _shifted_pole_coeffs(moments, a: float) -> list:
    """Coefficients c_j with sum_j c_j/(s+a)^{j+1} = sum_k M_k/s^{k+1} + O(s^{-p-1})."""
    p = len(moments)
    c = []
    for k in range(p):
        # coefficient of s^{-(k+1)} in sum_{j<=k} c_j (s+a)^{-(j+1)}
        acc = np.array(moments[k], dtype=float)
        for j in range(k):
            m = k - j
            acc = acc - c[j] * math.comb(j + m, m) * (-a) ** m
        c.append(acc)
    return c


def bromwich_invert(F: Callable, t, moments, contour_shift: float = 1.0,
                    pole: float = 1.0, omega_max: float = 400.0,
                    nodes: int = 16) -> np.ndarray:
    """Invert ``F`` at ``t > 0`` by quadrature along ``Re s = contour_shift``.

    ``moments`` are the leading coefficients of ``F`` in powers of ``1/s``;
    they are subtracted in the form ``sum c_j / (s + pole)^{j+1}`` (whose
    inverse is known in closed form) so that the remaining integrand decays
    like ``omega^{-len(moments)-1}`` and can be truncated at ``omega_max``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise ValidationError("bromwich_invert needs t > 0")
    coeffs = _shifted_pole_coeffs(moments, pole)
    d = np.atleast_2d(coeffs[0]).shape[0]
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    out = np.empty((len(t), d, d))
    c = contour_shift
    for i, ti in enumerate(t):
        width = min(0.5, math.pi / (2.0 * ti))
        npan = int(math.ceil(omega_max / width))
        edges = np.linspace(0.0, omega_max, npan + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        om = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        wts = (half[:, None] * gw[None, :]).ravel()
        s = c + 1j * om
        val = np.asarray(F(s)).reshape(len(s), d, d).astype(complex)
        for j, cj in enumerate(coeffs):
            val = val - cj / (s + pole)[:, None, None] ** (j + 1)
        integrand = (val * np.exp(1j * om * ti)[:, None, None]).real
        integral = np.einsum("n,nab->ab", wts, integrand)
        smooth = sum(cj * ti ** j / math.factorial(j) for j, cj in enumerate(coeffs))
        out[i] = math.exp(c * ti) / math.pi * integral + math.exp(-pole * ti) * smooth
    return out


def bromwich_chi(kernel: KernelSpec, t, n_moments: int = 5, **kw) -> KernelCurve:
    """chi(t) from the quadrature route; ``chi(0) = I`` stored exactly."""
    grid = np.asarray(t, dtype=float)
    order = (n_moments + 2) // 2
    moments = kernel_moments(kernel, order)[:n_moments]
    vals = np.empty((len(grid), kernel.d, kernel.d))
    pos = grid > 0
    vals[~pos] = np.eye(kernel.d)
    if np.any(pos):
        vals[pos] = bromwich_invert(lambda s: chi_laplace(kernel, s), grid[pos], moments, **kw)
    return KernelCurve(t=grid, values=vals, provenance="bromwich-gl", kernel=kernel)
