"""Coordinate-only models: plain BD, embedded BD and BD with memory."""
from __future__ import annotations

import numpy as np

from ..errors import TimeStepError, ValidationError
from ..kernels import ForceField, KernelSpec
from ..laplace import KernelCurve, chi_infinity
from ..reduction import ExtendedSystem
from ._common import NoiseStreams, Recorder, SimConfig, TrajectoryEnsemble, check_finite
from .gaussian import StationarySampler

__all__ = ["simulate_bd", "simulate_embedded", "simulate_nonlocal", "embedded_dt_limit",
           "MAX_NONLOCAL_STEPS"]

MAX_NONLOCAL_STEPS = 100_000


def _sym_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    if w.min() < -1e-12 * max(1.0, abs(w).max()):
        raise ValidationError(f"matrix is not PSD (eigenvalue {w.min():.3g})")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _initial_x(force: ForceField, kBT: float, eta: np.ndarray) -> np.ndarray:
    """Draw from the linearised well; start at 0 without confinement."""
    if force.is_zero or force.stiffness <= 0:
        return np.zeros_like(eta)
    return np.sqrt(kBT / force.stiffness) * eta


def _force(force: ForceField, x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x) if force.is_zero else force(x)


def simulate_bd(kernel: KernelSpec, force: ForceField, sim: SimConfig) -> TrajectoryEnsemble:
    """Euler-Maruyama for ``dx = chi_inf f(x) dt + sqrt(2 kBT chi_inf) dW``."""
    chi = chi_infinity(kernel)
    d = chi.shape[0]
    root = _sym_sqrt(2.0 * sim.kBT * chi * sim.dt)
    streams = NoiseStreams(sim.seed, sim.ensemble, d, sim.steps)
    x = _initial_x(force, sim.kBT, streams.initial(d))
    rec = Recorder(sim, sim.ensemble, {"x": d})
    rec.maybe(0, {"x": x})
    drift = chi * sim.dt
    for step in range(1, sim.steps + 1):
        f = _force(force, x)
        x = x + f @ drift.T + streams.next() @ root.T
        if step % 1000 == 0:
            check_finite(x, step)
        rec.maybe(step, {"x": x})
    check_finite(x, sim.steps)
    model = {"model": "bd", "kernel": kernel.describe(), "chi_inf": chi.tolist(),
             "force": force.name, **sim.as_dict()}
    return TrajectoryEnsemble(t=rec.times(), channels=rec.data, seeds=streams.seeds, model=model)


def embedded_dt_limit(system: ExtendedSystem) -> float:
    return 0.1 / float(np.max(np.abs(system.eigenvalues())))


def simulate_embedded(system: ExtendedSystem, force: ForceField, sim: SimConfig) -> TrajectoryEnsemble:
    """Euler-Maruyama on ``dx = z dt``, ``dy = (D y + stack f) dt + dxi``.

    ``y(0) ~ N(0, Q)``.  The ``w`` channel is a noise-only copy of the
    auxiliary state driven by the same increments and started from the same
    ``y(0)``; it is the realised colored noise of the coordinate equation and
    equals ``z`` when ``f = 0``.  Uses ``system.kBT``.
    """
    if sim.dt > embedded_dt_limit(system) * (1 + 1e-12):
        raise TimeStepError(f"dt = {sim.dt} exceeds 0.1/max|eig(D)| = {embedded_dt_limit(system):.4g}")
    n, d = system.order, system.d
    N = n * d
    E, dt = sim.ensemble, sim.dt
    L = system.noise_factor() * np.sqrt(dt)
    Lq = system.initial_factor()
    streams = NoiseStreams(sim.seed, E, N, sim.steps)
    eta0 = streams.initial(N + d)
    y = eta0[:, :N] @ Lq.T
    x = _initial_x(force, system.kBT, eta0[:, N:])
    track_w = "w" in sim.record and not force.is_zero
    u = y.copy() if track_w else None
    A = np.eye(N) + dt * system.D
    S = dt * system.stack
    last = slice((n - 1) * d, N)
    dims = {"x": d, "z": d, "w": d}
    if n >= 2:
        dims["z1"] = d
    rec = Recorder(sim, E, dims)
    values = {"x": lambda: x, "z": lambda: y[:, last],
              "w": lambda: (u if track_w else y)[:, last]}
    if n >= 2:
        values["z1"] = lambda: y[:, (n - 2) * d:(n - 1) * d]
    rec.maybe(0, values)
    for step in range(1, sim.steps + 1):
        xi = streams.next() @ L.T
        z = y[:, last]
        y_new = y @ A.T + xi
        if not force.is_zero:
            y_new += force(x) @ S.T
        x = x + dt * z
        y = y_new
        if track_w:
            u = u @ A.T + xi
        if step % 1000 == 0:
            check_finite(y, step)
        rec.maybe(step, values)
    check_finite(y, sim.steps)
    model = {"model": "embedded", "order": n, "kBT": system.kBT,
             "experimental": system.experimental,
             "noise_block_diagonal": system.noise_block_diagonal,
             "force": force.name, **sim.as_dict()}
    return TrajectoryEnsemble(t=rec.times(), channels=rec.data, seeds=streams.seeds, model=model)


def _trap_weights(i: int, lo: int, hi: int) -> np.ndarray:
    """Endpoint weights for history points ``lo..hi-1`` in the sum for step ``i``."""
    w = np.ones(hi - lo)
    if lo == 0:
        w[0] = 0.5
    if hi - 1 == i:
        w[-1] = 0.5
    return w


def simulate_nonlocal(chi: KernelCurve, force: ForceField, sim: SimConfig,
                      block: int = 128, neg_tol: float = 1e-6) -> TrajectoryEnsemble:
    """Explicit Euler for ``dx/dt = int_0^t chi(t - s) f(x(s)) ds + w(t)``.

    ``chi`` must be sampled at spacing ``sim.dt`` with at least ``steps + 1``
    points; ``w`` is a stationary Gaussian sequence with covariance
    ``kBT chi`` drawn by circulant embedding.  The memory integral is a
    trapezoid sum whose newest point always carries weight 1/2 (so the grid
    delta ``2 chi_inf / dt`` at lag 0 reproduces plain BD exactly).  Cost is
    quadratic in ``steps``, capped at ``MAX_NONLOCAL_STEPS``.
    """
    if sim.steps > MAX_NONLOCAL_STEPS:
        raise ValidationError(f"nonlocal runs are limited to {MAX_NONLOCAL_STEPS} steps "
                              f"(requested {sim.steps}); the memory sum is O(steps^2)")
    n_pts = sim.steps + 1
    if len(chi.t) < n_pts:
        raise ValidationError(f"kernel curve has {len(chi.t)} points, need {n_pts}")
    if len(chi.t) > 1 and abs(chi.dt - sim.dt) > 1e-9 * sim.dt:
        raise ValidationError(f"kernel grid spacing {chi.dt} differs from dt = {sim.dt}")
    d = chi.d
    E, dt, kBT = sim.ensemble, sim.dt, sim.kBT
    c = chi.values
    sampler = StationarySampler.build(kBT * c, n_pts, dt, neg_tol=neg_tol)
    streams = NoiseStreams(sim.seed, E, 0, 1)
    eta0 = streams.initial(d)
    x = _initial_x(force, kBT, eta0)
    W = np.stack([sampler.draw(g) for g in streams.gens], axis=1)  # (n_pts, E, d)
    F = np.zeros((n_pts, E, d))
    rec = Recorder(sim, E, {"x": d, "w": d})
    for b0 in range(0, sim.steps, block):
        b1 = min(b0 + block, sim.steps)
        far = np.zeros((b1 - b0, E, d))
        if b0 > 0:
            # history j < b0 contributes to steps i in [b0, b1)
            for j0 in range(0, b0, 2048):
                j1 = min(j0 + 2048, b0)
                lag = np.subtract.outer(np.arange(b0, b1), np.arange(j0, j1))
                wj = np.ones(j1 - j0)
                if j0 == 0:
                    wj[0] = 0.5
                Fh = F[j0:j1] * wj[:, None, None]
                if d == 1:
                    far[:, :, 0] += c[lag, 0, 0] @ Fh[:, :, 0]
                else:
                    far += np.einsum("ijpq,jeq->iep", c[lag], Fh)
        for i in range(b0, b1):
            rec.maybe(i, {"x": x, "w": W[i]})
            F[i] = _force(force, x)
            js = np.arange(b0, i + 1)
            wj = _trap_weights(i, b0, i + 1)
            near = np.einsum("j,jpq,jeq->ep", wj, c[i - js], F[b0:i + 1])
            mem = dt * (far[i - b0] + near)
            x = x + dt * (mem + W[i])
            if i % 1000 == 0:
                check_finite(x, i)
    rec.maybe(sim.steps, {"x": x, "w": W[sim.steps]})
    check_finite(x, sim.steps)
    model = {"model": "nonlocal", "kernel_provenance": chi.provenance,
             "embedding": sampler.method, "force": force.name, **sim.as_dict()}
    return TrajectoryEnsemble(t=rec.times(), channels=rec.data, seeds=streams.seeds, model=model)
