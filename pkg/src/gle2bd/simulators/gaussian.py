"""Exact sampling of stationary Gaussian sequences on a uniform grid."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ..errors import EmbeddingError, ValidationError
from ._common import trajectory_rng

__all__ = ["StationarySampler", "sample_stationary_gaussian"]

_DENSE_MAX = 2000


def _lag_values(cov, n: int, dt: float) -> np.ndarray:
    if callable(cov):
        vals = [np.atleast_2d(np.asarray(cov(k * dt), dtype=float)) for k in range(n)]
        return np.stack(vals)
    arr = np.asarray(cov, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None, None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValidationError("covariance values must have shape (n,) or (n, d, d)")
    if arr.shape[0] < n:
        raise ValidationError(f"need covariance at {n} lags, got {arr.shape[0]}")
    return arr[:n]


@dataclass(eq=False)
class StationarySampler:
    """Factorised covariance of a stationary sequence ``R(k) = cov(k dt)``.

    Built once, then ``draw(rng)`` returns an ``(n, d)`` path.  Uses
    circulant embedding; for grids of at most 2000 points a dense
    eigendecomposition is used if the embedding is not PSD.
    """

    n: int
    d: int
    method: str
    factor: np.ndarray            # circulant: (M, d, d) root spectra; dense: (n d, n d)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        if self.method == "dense":
            z = rng.standard_normal(self.n * self.d)
            return (self.factor @ z).reshape(self.n, self.d)
        M = self.factor.shape[0]
        eps = rng.standard_normal((M, self.d)) + 1j * rng.standard_normal((M, self.d))
        spec = np.einsum("mij,mj->mi", self.factor, eps)
        y = np.fft.fft(spec, axis=0) / np.sqrt(M)
        return y.real[:self.n]

    @classmethod
    def build(cls, cov: Union[Callable, np.ndarray], n: int, dt: float = 1.0,
              neg_tol: float = 1e-6, max_pad: int = 3, dense: Optional[bool] = None
              ) -> "StationarySampler":
        """Factorise the covariance of an ``n``-point sequence.

        ``cov`` is an evaluator ``tau -> (d, d)`` or an array of lag values.
        Embedding spectra with negative parts below ``neg_tol`` times the
        largest eigenvalue are clipped; larger violations trigger padding
        (evaluators, or arrays longer than ``n``), then the dense fallback.
        """
        if n < 1:
            raise ValidationError("grid needs at least one point")
        if dense:
            return cls._dense(_lag_values(cov, n, dt), n)
        avail = None if callable(cov) else np.asarray(cov).shape[0]
        m = n
        worst = None
        for attempt in range(max_pad + 1):
            if avail is not None and m > avail:
                break
            R = _lag_values(cov, m, dt)
            out = cls._circulant(R, n, neg_tol)
            if isinstance(out, cls):
                return out
            worst = out
            m *= 2
        if n <= _DENSE_MAX and dense is None:
            return cls._dense(_lag_values(cov, n, dt), n)
        raise EmbeddingError(
            f"circulant embedding is not PSD (relative eigenvalue {worst:.3g}); "
            "extend the covariance grid, raise neg_tol, or use the dense sampler on a shorter grid")

    @classmethod
    def _circulant(cls, R: np.ndarray, n: int, neg_tol: float):
        m, d = R.shape[0], R.shape[1]
        if m == 1:
            c = R.copy()
        else:
            # first block row of a circulant of size 2(m-1): R(0..m-1), R(m-2..1)^T
            c = np.concatenate([R, np.transpose(R[-2:0:-1], (0, 2, 1))], axis=0)
        lam = np.fft.fft(c, axis=0)
        lam = 0.5 * (lam + np.conj(np.transpose(lam, (0, 2, 1))))
        w, v = np.linalg.eigh(lam)
        top = max(float(np.max(w)), 1e-300)
        low = float(np.min(w)) / top
        if low < -neg_tol:
            return low
        w = np.clip(w, 0.0, None)
        root = v * np.sqrt(w)[:, None, :]
        root = np.einsum("mij,mkj->mik", root, np.conj(v))
        return cls(n=n, d=d, method="circulant", factor=root)

    @classmethod
    def _dense(cls, R: np.ndarray, n: int):
        d = R.shape[1]
        C = np.empty((n * d, n * d))
        for i in range(n):
            for j in range(n):
                blk = R[i - j] if i >= j else R[j - i].T
                C[i * d:(i + 1) * d, j * d:(j + 1) * d] = blk
        C = 0.5 * (C + C.T)
        w, v = np.linalg.eigh(C)
        top = max(float(np.max(w)), 1e-300)
        if w.min() < -1e-8 * top:
            raise EmbeddingError(f"covariance matrix is not PSD (relative eigenvalue {w.min() / top:.3g})")
        return cls(n=n, d=d, method="dense", factor=v * np.sqrt(np.clip(w, 0.0, None)))


def sample_stationary_gaussian(cov, grid, seed: Union[int, np.random.Generator] = 0,
                               size: Optional[int] = None, **kw) -> np.ndarray:
    """Mean-zero stationary Gaussian path(s) with covariance ``cov(tau)``.

    Parameters
    ----------
    cov : callable or array
        ``tau -> (d, d)`` evaluator or lag values on the grid spacing.
    grid : array
        Uniform time grid.
    seed : int or Generator
        Base seed; with ``size`` the ``i``-th path uses stream ``(seed, i)``.
    size : int, optional
        Number of independent paths.

    Returns
    -------
    ndarray
        ``(len(grid), d)``, or ``(size, len(grid), d)`` when ``size`` is given.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 1:
        raise ValidationError("grid must be a nonempty 1-d array")
    dt = float(grid[1] - grid[0]) if len(grid) > 1 else 1.0
    if len(grid) > 2 and not np.allclose(np.diff(grid), dt, rtol=1e-9, atol=1e-12):
        raise ValidationError("grid must be uniform")
    sampler = StationarySampler.build(cov, len(grid), dt, **kw)
    if size is None:
        rng = seed if isinstance(seed, np.random.Generator) else trajectory_rng(seed, 0)
        return sampler.draw(rng)
    if isinstance(seed, np.random.Generator):
        raise ValidationError("pass an integer seed when size is given")
    return np.stack([sampler.draw(trajectory_rng(seed, i)) for i in range(size)])
