"""Correlation estimators, equilibrium statistics and error metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .laplace import KernelCurve
from .simulators import TrajectoryEnsemble

__all__ = [
    "CorrelationSeries",
    "autocorrelation",
    "autocovariance_series",
    "two_time_covariance",
    "TwoTimeCovariance",
    "kernel_error",
    "correlation_error",
    "equilibrium_stats",
]


@dataclass(frozen=True, eq=False)
class CorrelationSeries:
    """Autocovariance estimate at uniformly spaced lags."""

    lags: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n: int
    mean_subtracted: bool = True
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    def normalize(self) -> "CorrelationSeries":
        """Divide by the lag-0 value."""
        c0 = self.values[0]
        if c0 == 0:
            raise ValidationError("lag-0 value is zero; cannot normalize")
        return CorrelationSeries(self.lags, self.values / c0, self.stderr / abs(c0), self.n,
                                 self.mean_subtracted, True, dict(self.meta))

    def at(self, lag: float) -> float:
        return float(np.interp(lag, self.lags, self.values))


def autocovariance_series(x: np.ndarray, n_lags: int, mean_subtract: bool = True) -> np.ndarray:
    """Time-averaged autocovariance of each row of ``x`` at lags ``0..n_lags-1``.

    Uses zero-padded FFTs; lag ``k`` is averaged over ``T - k`` origins.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    T = x.shape[1]
    if mean_subtract:
        x = x - x.mean(axis=1, keepdims=True)
    nfft = 1 << int(np.ceil(np.log2(2 * T - 1)))
    fx = np.fft.rfft(x, nfft, axis=1)
    acov = np.fft.irfft(fx * np.conj(fx), nfft, axis=1)[:, :n_lags]
    return acov / (T - np.arange(n_lags))[None, :]


def autocorrelation(ensemble: TrajectoryEnsemble, max_lag: float, channel: str = "x",
                    component: int = 0, normalize: bool = False, n_blocks: int = 8,
                    mean: str = "ensemble") -> CorrelationSeries:
    """Autocovariance of one channel averaged over time origins and trajectories.

    ``mean="ensemble"`` removes the mean pooled over all trajectories and
    times; ``mean="trajectory"`` removes each trajectory's own mean, which
    biases the estimate by about ``-2 C(0) tau_c / T`` for a run of length
    ``T``.  The standard error is the spread of per-trajectory estimates
    over ``sqrt(ensemble)``; a single trajectory is cut into up to
    ``n_blocks`` blocks for the same purpose.
    """
    if mean not in ("ensemble", "trajectory"):
        raise ValidationError(f"mean must be 'ensemble' or 'trajectory' (got {mean!r})")
    x = ensemble.series(channel, component)
    dt = ensemble.dt
    T = x.shape[1]
    if dt <= 0:
        raise ValidationError("need at least two time points")
    n_lags = int(round(max_lag / dt)) + 1
    if max_lag < 0 or (n_lags - 1) * 5 > T - 1:
        raise ValidationError(f"max_lag {max_lag} exceeds a fifth of the trajectory length "
                              f"{(T - 1) * dt:g}")
    if x.shape[0] == 1:
        nb = min(n_blocks, T // max(5 * (n_lags - 1), 1))
        if nb >= 2:
            L = T // nb
            x = x[0, :nb * L].reshape(nb, L)
    if mean == "ensemble":
        per = autocovariance_series(x - x.mean(), n_lags, mean_subtract=False)
    else:
        per = autocovariance_series(x, n_lags)
    vals = per.mean(axis=0)
    if per.shape[0] > 1:
        err = per.std(axis=0, ddof=1) / np.sqrt(per.shape[0])
    else:
        err = np.full(n_lags, np.nan)
    cs = CorrelationSeries(lags=dt * np.arange(n_lags), values=vals, stderr=err,
                           n=ensemble.size, mean_subtracted=True,
                           meta={"channel": channel, "component": component,
                                 "estimator": f"time-origin average, {mean} mean removed"})
    return cs.normalize() if normalize else cs


@dataclass(frozen=True, eq=False)
class TwoTimeCovariance:
    """Ensemble estimates of ``<a(t0 + tau) a(t0)>`` at fixed origins."""

    origins: np.ndarray
    lags: np.ndarray
    values: np.ndarray   # (len(origins), len(lags))
    stderr: np.ndarray
    n: int


def two_time_covariance(ensemble: TrajectoryEnsemble, origins: Sequence[float],
                        lags: Sequence[float], channel: str = "w", component: int = 0,
                        mean_subtract: bool = False) -> TwoTimeCovariance:
    """Fixed-origin ensemble covariance; no time averaging.

    Suited to processes that should be stationary from ``t = 0``: comparing
    rows for different origins tests shift invariance.
    """
    x = ensemble.series(channel, component)
    if mean_subtract:
        x = x - x.mean(axis=0, keepdims=True)
    dt = ensemble.dt
    oi = np.rint(np.asarray(origins, dtype=float) / dt).astype(int)
    li = np.rint(np.asarray(lags, dtype=float) / dt).astype(int)
    if oi.min() < 0 or li.min() < 0 or oi.max() + li.max() >= x.shape[1]:
        raise ValidationError("origin + lag exceeds the recorded window")
    prod = x[:, oi][:, :, None] * x[:, oi[:, None] + li[None, :]]
    E = x.shape[0]
    vals = prod.mean(axis=0)
    err = prod.std(axis=0, ddof=1) / np.sqrt(E) if E > 1 else np.full(vals.shape, np.nan)
    return TwoTimeCovariance(origins=oi * dt, lags=li * dt, values=vals, stderr=err, n=E)


def _trapz_norm(t: np.ndarray, sq: np.ndarray) -> float:
    return float(np.sqrt(np.trapezoid(sq, t)))


def kernel_error(reference: KernelCurve, candidate: KernelCurve, horizon: float) -> float:
    """Relative L2 error ``||ref - cand|| / ||ref||`` on ``[0, horizon]`` (trapezoid rule)."""
    if reference.values.shape[1:] != candidate.values.shape[1:]:
        raise ValidationError("kernel dimensions differ")
    mask = reference.t <= horizon * (1 + 1e-12)
    cmask = candidate.t <= horizon * (1 + 1e-12)
    if mask.sum() != cmask.sum() or not np.allclose(reference.t[mask], candidate.t[cmask],
                                                    rtol=1e-10, atol=1e-12):
        raise ValidationError("reference and candidate grids differ on [0, horizon]")
    t = reference.t[mask]
    if len(t) < 2:
        raise ValidationError("need at least two grid points within the horizon")
    diff = reference.values[mask] - candidate.values[cmask]
    num = _trapz_norm(t, np.sum(diff ** 2, axis=(1, 2)))
    den = _trapz_norm(t, np.sum(reference.values[mask] ** 2, axis=(1, 2)))
    if den == 0:
        raise ValidationError("reference curve vanishes identically")
    return num / den


def correlation_error(reference: CorrelationSeries, candidate: CorrelationSeries,
                      horizon: Optional[float] = None) -> float:
    """Relative L2 discrepancy between two correlation series on a shared lag grid."""
    n = min(len(reference.lags), len(candidate.lags))
    if not np.allclose(reference.lags[:n], candidate.lags[:n], rtol=1e-9, atol=1e-12):
        raise ValidationError("correlation lag grids differ")
    t = reference.lags[:n]
    mask = t <= (horizon if horizon is not None else t[-1]) * (1 + 1e-12)
    diff = reference.values[:n][mask] - candidate.values[:n][mask]
    num = _trapz_norm(t[mask], diff ** 2)
    den = _trapz_norm(t[mask], reference.values[:n][mask] ** 2)
    if den == 0:
        raise ValidationError("reference correlation vanishes identically")
    return num / den


def equilibrium_stats(ensemble: TrajectoryEnsemble) -> Dict[str, dict]:
    """Per-channel, per-component mean and variance with standard errors.

    Pools all recorded times; standard errors come from the spread of
    per-trajectory values (or blocks of a single trajectory).
    """
    out = {}
    for name, arr in ensemble.channels.items():
        comps = []
        for c in range(arr.shape[2]):
            x = arr[:, :, c]
            if x.shape[0] == 1 and x.shape[1] >= 16:
                L = x.shape[1] // 8
                x = x[0, :8 * L].reshape(8, L)
            means = x.mean(axis=1)
            second = (x * x).mean(axis=1)
            mean = float(means.mean())
            var = max(float(second.mean() - mean ** 2), 0.0)
            k = x.shape[0]
            if k > 1:
                se_m = float(means.std(ddof=1) / np.sqrt(k))
                per_var = second - means ** 2
                se_v = float(per_var.std(ddof=1) / np.sqrt(k))
            else:
                se_m = se_v = float("nan")
            comps.append({"mean": mean, "mean_stderr": se_m, "variance": var,
                          "variance_stderr": se_v, "second_moment": float(second.mean())})
        out[name] = comps[0] if len(comps) == 1 else comps
    return out
