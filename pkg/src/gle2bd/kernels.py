"""Memory kernels, their Laplace transforms and moment expansions.

All kernels are matrix valued: ``gamma`` and ``Theta(s)`` are ``(d, d)``
arrays even in the scalar case.  Two Laplace-domain variables appear:
``s`` and ``lam = 1/s``.  ``M_inf`` is the ``s -> 0`` limit of ``Theta``;
the moments ``M_k`` are Taylor coefficients of

    X(lam) = [I + lam*gamma + lam*Theta(lam)]^{-1} lam = sum_k M_k lam^{k+1}

at ``lam = 0``, i.e. ``M_k`` is the k-th time derivative of the
fundamental kernel ``chi`` at ``t = 0``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, MomentPrecisionError, ValidationError

__all__ = [
    "KernelSpec",
    "ForceField",
    "bessel_j1",
    "theta_time",
    "theta_laplace_ad",
    "theta_laplace_chain",
    "chi_closed_form",
    "ad_kernel",
    "langevin_kernel",
    "tabulated_kernel",
    "block_diag_kernel",
    "kernel_from_name",
    "kernel_moments",
    "morse_potential",
    "morse_force",
    "morse_field",
    "linear_field",
    "zero_field",
]


# ---------------------------------------------------------------------------
# Bessel J1
# ---------------------------------------------------------------------------

_SERIES_MAX = 8.0
_MILLER_MAX = 25.0
_MILLER_START = 80


def _hankel_coeffs(nterms: int) -> np.ndarray:
    mu = 4.0
    a = np.empty(nterms)
    a[0] = 1.0
    for k in range(1, nterms):
        a[k] = a[k - 1] * (mu - (2 * k - 1) ** 2) / (k * 8.0)
    return a


_HANKEL = _hankel_coeffs(24)


def _j1_series(x: np.ndarray) -> np.ndarray:
    h = 0.5 * x
    h2 = h * h
    term = h.copy()
    total = h.copy()
    for k in range(1, 40):
        term = term * (-h2) / (k * (k + 1))
        total = total + term
    return total


def _j1_miller(x: np.ndarray) -> np.ndarray:
    # Backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalised with
    # J_0 + 2 * sum_k J_{2k} = 1.
    jp1 = np.zeros_like(x)
    jk = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j1 = np.zeros_like(x)
    for k in range(_MILLER_START, 0, -1):
        jm1 = (2.0 * k / x) * jk - jp1
        jp1, jk = jk, jm1
        if (k - 1) == 1:
            j1 = jk.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm = norm + 2.0 * jk
        big = np.abs(jk) > 1e200
        if np.any(big):
            scale = np.where(big, 1e-200, 1.0)
            jk, jp1, norm, j1 = jk * scale, jp1 * scale, norm * scale, j1 * scale
    norm = norm + jk  # jk now holds J_0
    return j1 / norm


def _j1_asymptotic(x: np.ndarray) -> np.ndarray:
    inv = 1.0 / x
    pw = np.ones_like(x)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for k in range(len(_HANKEL)):
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p = p + sign * _HANKEL[k] * pw
        else:
            q = q + sign * _HANKEL[k] * pw
        pw = pw * inv
    chi = x - 0.75 * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j1(x):
    """Bessel function of the first kind of order one.

    Ascending series for ``|x| <= 8``, Miller backward recurrence for
    ``8 < |x| <= 25`` and the Hankel asymptotic expansion beyond.  Absolute
    error is below 1e-10 for ``|x| <= 1e4``.  Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("bessel_j1: non-finite argument")
    ax = np.abs(arr)
    out = np.empty_like(ax)
    m1 = ax <= _SERIES_MAX
    m2 = (ax > _SERIES_MAX) & (ax <= _MILLER_MAX)
    m3 = ax > _MILLER_MAX
    if np.any(m1):
        out[m1] = _j1_series(ax[m1])
    if np.any(m2):
        out[m2] = _j1_miller(ax[m2])
    if np.any(m3):
        out[m3] = _j1_asymptotic(ax[m3])
    out = np.where(arr < 0, -out, out)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Adelman-Doll kernel in closed form
# ---------------------------------------------------------------------------

def theta_time(t, omega0: float):
    """Time-domain kernel ``omega0 * J1(2 omega0 t) / t``; equals ``omega0**2`` at 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("theta_time: t must be nonnegative")
    if omega0 < 0:
        raise DomainError("theta_time: omega0 must be nonnegative")
    safe = np.where(t > 0, t, 1.0)
    val = np.where(t > 0, omega0 * np.asarray(bessel_j1(2.0 * omega0 * safe)) / safe,
                   omega0 * omega0)
    return float(val) if val.ndim == 0 else val


def theta_laplace_chain(s, m: float, K: float):
    """Laplace transform of the kernel of a semi-infinite harmonic chain.

    ``(m/2) sqrt(s^2 + 4K/m) - (m/2) s`` written as ``2K / (sqrt(s^2+4K/m) + s)``
    to avoid cancellation.  Works for complex ``s`` with ``Re s > 0``.
    """
    if m <= 0 or K <= 0:
        raise DomainError("theta_laplace_chain: m and K must be positive")
    s_arr = np.asarray(s)
    if not np.iscomplexobj(s_arr) and np.any(s_arr < 0):
        raise DomainError("theta_laplace_chain: s must be nonnegative")
    val = 2.0 * K / (np.sqrt(s_arr * s_arr + 4.0 * K / m) + s_arr)
    return val.item() if val.ndim == 0 else val


def theta_laplace_ad(s, omega0: float):
    """Laplace transform ``sqrt(s^2 + 4 omega0^2)/2 - s/2`` of the Adelman-Doll kernel."""
    if omega0 <= 0:
        raise DomainError("theta_laplace_ad: omega0 must be positive")
    return theta_laplace_chain(s, 1.0, omega0 * omega0)


def chi_closed_form(t, omega0: float):
    """Fundamental kernel for ``gamma = 0``: ``J1(2 omega0 t) / (omega0 t)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("chi_closed_form: t must be nonnegative")
    safe = np.where(t > 0, t, 1.0)
    val = np.where(t > 0, np.asarray(bessel_j1(2.0 * omega0 * safe)) / (omega0 * safe), 1.0)
    return float(val) if val.ndim == 0 else val


def _catalan(j: int) -> int:
    return math.comb(2 * j, j) // (j + 1)


# ---------------------------------------------------------------------------
# KernelSpec
# ---------------------------------------------------------------------------

def _as_matrix(value, d: Optional[int] = None) -> np.ndarray:
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1) if d is None else a * np.eye(d)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    return a


def _is_symmetric(a: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.allclose(a, a.T, atol=tol, rtol=0.0))


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A memory kernel of a generalized Langevin equation.

    Parameters
    ----------
    gamma : (d, d) array
        Instantaneous friction (symmetric).
    theta_laplace : callable
        ``s -> Theta(s)``; vectorised over arrays of real or complex ``s``,
        returning ``s.shape + (d, d)``.
    m_infinity : (d, d) array
        ``lim_{s -> 0+} Theta(s)``.
    theta_time : callable, optional
        ``t -> theta(t)``, same shape convention.
    chi_closed_form : callable, optional
        Closed-form fundamental kernel, when known.
    theta_series : callable, optional
        ``n -> [c_0, ..., c_{n-1}]``, Taylor coefficients of ``Theta`` in
        ``lam = 1/s`` at ``lam = 0``.
    theta_lambda : callable, optional
        ``lam -> Theta`` valid on a real neighbourhood of ``lam = 0``
        (negative values included).  Enables central differences.
    """

    gamma: np.ndarray
    theta_laplace: Callable
    m_infinity: np.ndarray
    theta_time: Optional[Callable] = None
    chi_closed_form: Optional[Callable] = None
    theta_series: Optional[Callable[[int], list]] = None
    theta_lambda: Optional[Callable] = None
    complex_ok: bool = True
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        g = _as_matrix(self.gamma)
        minf = _as_matrix(self.m_infinity, g.shape[0])
        if minf.shape != g.shape:
            raise ValidationError("gamma and m_infinity must have the same shape")
        if not _is_symmetric(g):
            raise ValidationError("gamma must be symmetric")
        if not np.all(np.isfinite(minf)) or not _is_symmetric(minf, 1e-10):
            raise ValidationError("m_infinity must be finite and symmetric")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "m_infinity", minf)

    @property
    def d(self) -> int:
        return self.gamma.shape[0]

    @property
    def omega0(self) -> Optional[float]:
        return self.params.get("omega0")

    def theta(self, s) -> np.ndarray:
        """``Theta(s)`` with shape ``s.shape + (d, d)``."""
        return np.asarray(self.theta_laplace(np.asarray(s)))

    def describe(self) -> dict:
        return {"name": self.name, "d": self.d, "gamma": self.gamma.tolist(),
                "m_infinity": self.m_infinity.tolist(), **self.params}


def _scalar_kernel_fn(fn: Callable) -> Callable:
    def wrapped(s):
        v = np.asarray(fn(s))
        return v[..., None, None]
    return wrapped


def ad_kernel(gamma: float, K: float) -> KernelSpec:
    """Adelman-Doll kernel of a semi-infinite chain with unit atom mass."""
    if K <= 0:
        raise DomainError("ad_kernel: K must be positive")
    if gamma < 0:
        raise DomainError("ad_kernel: gamma must be nonnegative")
    omega0 = math.sqrt(K)

    def series(n):
        out = []
        for k in range(n):
            c = 0.0
            if k % 2 == 1:
                j = (k - 1) // 2
                c = (-1) ** j * _catalan(j) * K ** (j + 1)
            out.append(np.array([[c]]))
        return out

    def theta_lam(lam):
        lam = np.asarray(lam)
        return (2.0 * K * lam / (np.sqrt(1.0 + 4.0 * K * lam * lam) + 1.0))[..., None, None]

    return KernelSpec(
        gamma=np.array([[float(gamma)]]),
        theta_laplace=_scalar_kernel_fn(lambda s: 2.0 * K / (np.sqrt(s * s + 4.0 * K) + s)),
        m_infinity=np.array([[omega0]]),
        theta_time=_scalar_kernel_fn(lambda t: theta_time(t, omega0)),
        chi_closed_form=(_scalar_kernel_fn(lambda t: chi_closed_form(t, omega0))
                         if gamma == 0 else None),
        theta_series=series,
        theta_lambda=theta_lam,
        name="ad",
        params={"gamma": float(gamma), "K": float(K), "omega0": omega0, "m": 1.0},
    )


def langevin_kernel(gamma) -> KernelSpec:
    """Memoryless kernel (``Theta = 0``), i.e. plain Langevin friction."""
    g = _as_matrix(gamma)
    d = g.shape[0]
    zero = np.zeros((d, d))

    def theta(s):
        s = np.asarray(s)
        return np.broadcast_to(zero, s.shape + (d, d)).astype(np.result_type(s, float))

    def decay(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(zero, t.shape + (d, d)).copy()

    return KernelSpec(
        gamma=g,
        theta_laplace=theta,
        m_infinity=zero,
        theta_time=decay,
        theta_series=lambda n: [zero.copy() for _ in range(n)],
        theta_lambda=theta,
        name="langevin",
        params={"gamma": g.tolist() if d > 1 else float(g[0, 0])},
    )


def tabulated_kernel(source, gamma: float, m_infinity: float) -> KernelSpec:
    """Scalar kernel from a table of ``(s, Theta(s))`` pairs.

    ``source`` is a path to a two-column CSV (an optional header row is
    skipped) or an ``(n, 2)`` array.  Values are linearly interpolated;
    outside the table the end values are held.  Only real ``s`` is
    supported, so such kernels cannot be fed to the Laplace inverter.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        rows = []
        with open(source, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    if rows:
                        raise ValidationError(f"bad row in kernel table: {row}")
        table = np.array(rows, dtype=float)
    else:
        table = np.asarray(source, dtype=float)
    if table.ndim != 2 or table.shape[1] != 2 or len(table) < 2:
        raise ValidationError("kernel table must have two columns and at least two rows")
    order = np.argsort(table[:, 0])
    s_tab, v_tab = table[order, 0], table[order, 1]
    if np.any(np.diff(s_tab) <= 0) or s_tab[0] < 0:
        raise ValidationError("kernel table s values must be distinct and nonnegative")

    def theta(s):
        s = np.asarray(s)
        if np.iscomplexobj(s):
            raise DomainError("tabulated kernels are only defined for real s")
        return np.interp(s, s_tab, v_tab)[..., None, None]

    def theta_lam(lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise DomainError("tabulated kernels: lambda must be positive")
        return theta(1.0 / lam)

    return KernelSpec(
        gamma=np.array([[float(gamma)]]),
        theta_laplace=theta,
        m_infinity=np.array([[float(m_infinity)]]),
        complex_ok=False,
        name="table",
        params={"gamma": float(gamma), "s_max": float(s_tab[-1]), "rows": int(len(s_tab))},
    )


def block_diag_kernel(*kernels: KernelSpec) -> KernelSpec:
    """Block-diagonal combination of independent kernels."""
    if not kernels:
        raise ValidationError("block_diag_kernel needs at least one kernel")
    sizes = [k.d for k in kernels]
    d = sum(sizes)
    offs = np.cumsum([0] + sizes)

    def combine(fns):
        def f(x):
            x = np.asarray(x)
            parts = [fn(x) for fn in fns]
            dtype = np.result_type(*parts)
            out = np.zeros(x.shape + (d, d), dtype=dtype)
            for i, p in enumerate(parts):
                out[..., offs[i]:offs[i + 1], offs[i]:offs[i + 1]] = p
            return out
        return f

    def block(mats):
        out = np.zeros((d, d))
        for i, m in enumerate(mats):
            out[offs[i]:offs[i + 1], offs[i]:offs[i + 1]] = m
        return out

    series = None
    if all(k.theta_series is not None for k in kernels):
        def series(n):
            cols = [k.theta_series(n) for k in kernels]
            return [block([c[i] for c in cols]) for i in range(n)]

    def optional(attr):
        fns = [getattr(k, attr) for k in kernels]
        return combine(fns) if all(f is not None for f in fns) else None

    return KernelSpec(
        gamma=block([k.gamma for k in kernels]),
        theta_laplace=combine([k.theta_laplace for k in kernels]),
        m_infinity=block([k.m_infinity for k in kernels]),
        theta_time=optional("theta_time"),
        chi_closed_form=optional("chi_closed_form"),
        theta_series=series,
        theta_lambda=optional("theta_lambda"),
        complex_ok=all(k.complex_ok for k in kernels),
        name="block(" + ",".join(k.name for k in kernels) + ")",
        params={"blocks": [k.describe() for k in kernels]},
    )


def kernel_from_name(name: str, gamma: float, K: Optional[float] = None,
                     table: Optional[str] = None, m_infinity: Optional[float] = None) -> KernelSpec:
    """Resolve the kernel presets used on the command line."""
    if name == "ad":
        if K is None:
            raise ValidationError("kernel 'ad' needs K")
        return ad_kernel(gamma, K)
    if name == "langevin":
        return langevin_kernel(gamma)
    if name == "table":
        if table is None or m_infinity is None:
            raise ValidationError("kernel 'table' needs a CSV path and m_infinity")
        return tabulated_kernel(table, gamma, m_infinity)
    raise ValidationError(f"unknown kernel preset {name!r}")


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

def _series_inverse(h: Sequence[np.ndarray], count: int) -> list:
    """Taylor coefficients of ``H(lam)^{-1}`` where ``H = sum h_k lam^k`` and ``h_0 = I``."""
    d = h[0].shape[0]
    g = [np.eye(d)]
    for k in range(1, count):
        acc = np.zeros((d, d))
        for j in range(1, k + 1):
            acc = acc + h[j] @ g[k - j]
        g.append(-acc)
    return g


def _moments_series(kernel: KernelSpec, count: int) -> list:
    d = kernel.d
    c = [np.asarray(m, dtype=float).reshape(d, d) for m in kernel.theta_series(count)]
    h = [np.eye(d), kernel.gamma + c[0]] + [c[k - 1] for k in range(2, count)]
    return _series_inverse(h[:max(count, 1)], count)


def _fd_weights(nodes: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights at 0 for derivatives 0..order (Fornberg)."""
    n = len(nodes)
    c = np.zeros((order + 1, n))
    c1 = 1.0
    c4 = nodes[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i]
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _resolvent_lambda(kernel: KernelSpec, lam: np.ndarray, theta_lam: Callable) -> np.ndarray:
    d = kernel.d
    th = np.asarray(theta_lam(lam), dtype=float).reshape(lam.shape + (d, d))
    mat = np.eye(d) + lam[:, None, None] * (kernel.gamma + th)
    return np.linalg.inv(mat)


_ROUNDOFF = 8 * np.finfo(float).eps


def _moments_fd(kernel: KernelSpec, count: int, steps: Sequence[float],
                tol: float) -> list:
    d = kernel.d
    if kernel.theta_lambda is not None:
        theta_lam = kernel.theta_lambda
        half = count // 2 + 3
        base = np.arange(-half, half + 1, dtype=float)
        acc_step = 2
    else:
        def theta_lam(lam):
            return kernel.theta(1.0 / lam)
        base = np.arange(1, count + 6, dtype=float)
        acc_step = 1
    estimates, noise = [], []
    for h in steps:
        nodes = base * h
        w = _fd_weights(nodes, count - 1)
        vals = _resolvent_lambda(kernel, nodes, theta_lam)
        if kernel.theta_lambda is None:
            # one-sided: g(0) = I is known exactly, add it as a node
            nodes = np.concatenate([[0.0], nodes])
            w = _fd_weights(nodes, count - 1)
            vals = np.concatenate([np.eye(d)[None], vals])
        derivs = np.einsum("kn,nij->kij", w, vals)
        estimates.append([derivs[k] / math.factorial(k) for k in range(count)])
        # rounding in the stencil sum, a few ulps per resolvent evaluation
        mag = float(np.max(np.abs(vals)))
        noise.append([_ROUNDOFF * mag * np.sum(np.abs(w[k])) / math.factorial(k)
                      for k in range(count)])
    # Richardson extrapolation in h; leading error exponent depends on k.
    npts = len(base) + (0 if kernel.theta_lambda is not None else 1)
    out = [np.eye(d)]
    for k in range(1, count):
        p0 = npts - k
        if acc_step == 2 and p0 % 2:
            p0 += 1
        table = [estimates[i][k] for i in range(len(steps))]
        gain = [np.abs(c) for c in np.eye(len(steps))]    # |weights| of each estimate
        prev = None
        level = 0
        while len(table) > 1:
            expo = p0 + acc_step * level
            nxt, ngain = [], []
            for i in range(len(table) - 1):
                r = (steps[i] / steps[i + 1]) ** expo
                nxt.append((r * table[i + 1] - table[i]) / (r - 1.0))
                ngain.append((r * gain[i + 1] + gain[i]) / (r - 1.0))
            prev = table
            table, gain = nxt, ngain
            level += 1
        best = table[0]
        rounding = float(sum(g * noise[i][k] for i, g in enumerate(gain[0])))
        err = max(float(np.max(np.abs(best - prev[-1]))), rounding)
        scale = max(1.0, float(np.max(np.abs(best))))
        if not np.isfinite(err) or err > tol * scale:
            raise MomentPrecisionError(
                f"moment M{k}: finite-difference error estimate {err:.3g} exceeds "
                f"tolerance {tol:.1g}; supply a closed-form Theta series or lower the order")
        out.append(best)
    return out


def kernel_moments(kernel: KernelSpec, order: int, method: str = "auto",
                   steps: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
                   tol: float = 1e-8) -> list:
    """Moments ``[M_0, ..., M_{2n-2}]`` needed for an order-``n`` rational fit.

    ``method`` is ``"series"`` (closed-form Taylor coefficients of Theta in
    ``lam``), ``"fd"`` (Richardson-extrapolated finite differences of the
    resolvent around ``lam = 0``) or ``"auto"`` (series when available).
    The finite-difference route raises :class:`MomentPrecisionError` when
    its own error estimate exceeds ``tol`` (relative to ``max(1, |M_k|)``).
    """
    if int(order) != order or order < 1:
        raise ValidationError("order must be a positive integer")
    count = 2 * int(order) - 1
    if method == "auto":
        method = "series" if kernel.theta_series is not None else "fd"
    if method == "series":
        if kernel.theta_series is None:
            raise MomentPrecisionError(f"kernel {kernel.name!r} has no closed-form series")
        return _moments_series(kernel, count)
    if method == "fd":
        if count == 1:
            return [np.eye(kernel.d)]
        return _moments_fd(kernel, count, tuple(steps), tol)
    raise ValidationError(f"unknown moment method {method!r}")


# ---------------------------------------------------------------------------
# Force fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ForceField:
    """Potential of mean force acting on the coordinate.

    ``stiffness`` is the curvature of the potential at its minimum (used to
    draw linearised equilibrium initial conditions); ``0`` means no
    confinement.
    """

    potential: Callable
    force: Callable
    stiffness: float = 0.0
    a: Optional[float] = None
    name: str = "custom"
    is_zero: bool = False

    def __call__(self, x):
        return self.force(x)


def morse_potential(u, a: float = 1.0):
    """``(exp(-a u) - 1)**2``."""
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore"):
        val = (np.exp(-a * u) - 1.0) ** 2
    return float(val) if val.ndim == 0 else val


def morse_force(x, a: float = 1.0):
    """Morse force ``-phi'(x) = 2a exp(-ax) (exp(-ax) - 1)``.

    Raises :class:`~gle2bd.errors.SimulationError` instead of returning
    inf/NaN when ``exp(-ax)`` overflows.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        e = np.exp(-a * x)
        f = 2.0 * a * e * (e - 1.0)
    if not np.all(np.isfinite(f)):
        from .errors import SimulationError
        raise SimulationError("Morse force overflow: coordinate far inside the repulsive wall")
    return float(f) if f.ndim == 0 else f


def morse_field(a: float = 1.0) -> ForceField:
    return ForceField(potential=lambda u: morse_potential(u, a),
                      force=lambda x: morse_force(x, a),
                      stiffness=2.0 * a * a, a=a, name=f"morse(a={a:g})")


def linear_field(k: float) -> ForceField:
    """Harmonic force ``-k x``."""
    return ForceField(potential=lambda u: 0.5 * k * np.asarray(u) ** 2,
                      force=lambda x: -k * np.asarray(x),
                      stiffness=float(k), name=f"linear(k={k:g})")


def zero_field() -> ForceField:
    return ForceField(potential=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
                      force=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                      stiffness=0.0, name="zero", is_zero=True)
