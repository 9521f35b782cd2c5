"""Independent reference computations used by the tests.

Nothing here imports the package: values come from mpmath, sympy or
straightforward scipy calls on hand-written formulas.
"""
from functools import lru_cache

import mpmath as mp
import numpy as np
import sympy as sp
from scipy.linalg import expm, solve_continuous_lyapunov

SCENARIOS = [(2.0, 4.0), (2.0, 0.2), (0.0, 4.0), (0.0, 0.2)]


def j1(x):
    return float(mp.besselj(1, x))


def theta_ad(s, omega0):
    s = mp.mpf(s)
    return float(mp.sqrt(s * s + 4 * omega0 ** 2) / 2 - s / 2)


def chi_gamma0(t, omega0):
    """Closed form for gamma = 0: J1(2 w t) / (w t)."""
    if t == 0:
        return 1.0
    return float(mp.besselj(1, 2 * omega0 * t) / (omega0 * t))


_lam = sp.Symbol("lam")


@lru_cache(maxsize=None)
def moments(gamma, K, count):
    """Taylor coefficients of [1 + lam gamma + lam Theta(lam)]^{-1} at lam = 0 (sympy)."""
    g, k = sp.nsimplify(gamma), sp.nsimplify(K)
    theta = (sp.sqrt(1 + 4 * k * _lam ** 2) - 1) / (2 * _lam)
    expr = 1 / (1 + _lam * g + _lam * theta)
    ser = sp.series(expr, _lam, 0, count).removeO()
    return tuple(float(ser.coeff(_lam, i)) for i in range(count))


@lru_cache(maxsize=None)
def rational_fit(gamma, K, n):
    """Solve the matching conditions of an order-n scalar fit with sympy.

    R(lam) = (A0 lam + ... + A_{n-1} lam^n) / (1 - B0 lam - ... - B_{n-1} lam^n);
    R -> chi_inf as lam -> inf and R/lam matches M0..M_{2n-2}.
    """
    A = sp.symbols(f"A0:{n}")
    B = sp.symbols(f"B0:{n}")
    M = moments(gamma, K, 2 * n - 1)
    M = [sp.nsimplify(m) for m in M]
    chi_inf = 1 / (sp.nsimplify(gamma) + sp.sqrt(sp.nsimplify(K)))
    num = sum(A[i] * _lam ** (i + 1) for i in range(n))
    den = 1 - sum(B[i] * _lam ** (i + 1) for i in range(n))
    target = sum(M[i] * _lam ** (i + 1) for i in range(2 * n - 1))
    # num - den * target must vanish through lam^(2n-1)
    poly = sp.expand(num - den * target)
    eqs = [poly.coeff(_lam, i) for i in range(1, 2 * n)]
    eqs.append(A[n - 1] + B[n - 1] * chi_inf)
    sol = sp.solve(eqs, list(A) + list(B), dict=True)
    assert len(sol) == 1
    s = sol[0]
    return [float(s[a]) for a in A], [float(s[b]) for b in B]


def companion(B):
    n = len(B)
    D = np.zeros((n, n))
    for j in range(n):
        D[n - 1 - j, n - 1] = B[j]
        if j <= n - 2:
            D[n - 1 - j, n - 2 - j] = 1.0
    return D


def rational_kernel(A, B, t):
    """(0..1) exp(D t) (A_{n-1}; ..; A0) for a scalar fit."""
    D = companion(B)
    stack = np.array(A[::-1], dtype=float)
    return float((expm(D * t) @ stack)[-1])


def lyapunov_Q(D, Sigma):
    """Stationary covariance Q with D Q + Q D^T + Sigma = 0."""
    return solve_continuous_lyapunov(np.asarray(D, float), -np.asarray(Sigma, float))


def ou_linear_covariance(system_D, stack, k):
    """Stationary covariance of (x, y) for dx = z dt, dy = (D y - k stack x) dt + noise."""
    N = system_D.shape[0]
    big = np.zeros((N + 1, N + 1))
    big[0, N] = 1.0
    big[1:, 0] = -k * stack[:, 0]
    big[1:, 1:] = system_D
    return big


def invert_mp(F, t):
    """Talbot inversion in mpmath for transforms analytic off the negative axis."""
    return float(mp.invertlaplace(F, t, method="talbot"))
