"""Shared plumbing for the simulators: run configuration, ensembles, RNG streams."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..errors import SimulationError, ValidationError

__all__ = ["SimConfig", "TrajectoryEnsemble", "trajectory_rng", "NoiseStreams"]


@dataclass(frozen=True)
class SimConfig:
    """Time stepping and ensemble settings shared by all simulators.

    ``steps`` counts integration steps from ``t = 0``; samples are recorded
    every ``record_every`` steps from step ``burnin`` on, and recorded time
    is measured from the end of the burn-in.  ``kBT`` is used by the
    coordinate-only models (an embedded system and a chain carry their own).
    """

    dt: float
    steps: int
    burnin: int = 0
    ensemble: int = 1
    seed: int = 0
    record_every: int = 1
    record: Tuple[str, ...] = ("x",)
    kBT: float = 1.0

    def __post_init__(self):
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValidationError("dt must be positive")
        if self.steps < 1:
            raise ValidationError("steps must be >= 1")
        if not 0 <= self.burnin < self.steps:
            raise ValidationError("burn-in must satisfy 0 <= burnin < steps")
        if self.ensemble < 1:
            raise ValidationError("ensemble must be >= 1")
        if self.record_every < 1:
            raise ValidationError("record_every must be >= 1")
        if self.kBT < 0:
            raise ValidationError("kBT must be nonnegative")
        if self.seed < 0:
            raise ValidationError("seed must be a nonnegative integer")
        object.__setattr__(self, "record", tuple(self.record))

    @property
    def n_records(self) -> int:
        return (self.steps - self.burnin) // self.record_every + 1

    def is_record_step(self, step: int) -> bool:
        return step >= self.burnin and (step - self.burnin) % self.record_every == 0

    def record_index(self, step: int) -> int:
        return (step - self.burnin) // self.record_every

    def as_dict(self) -> dict:
        return {"dt": self.dt, "steps": self.steps, "burnin": self.burnin,
                "ensemble": self.ensemble, "seed": self.seed,
                "record_every": self.record_every, "record": list(self.record),
                "kBT": self.kBT}


@dataclass(eq=False)
class TrajectoryEnsemble:
    """Recorded observables of an ensemble of independent trajectories.

    ``channels[name]`` has shape ``(ensemble, len(t), d)``.
    """

    t: np.ndarray
    channels: Dict[str, np.ndarray]
    seeds: Tuple[Tuple[int, int], ...]
    model: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        for name, arr in self.channels.items():
            if arr.ndim != 3 or arr.shape[1] != len(self.t):
                raise ValidationError(f"channel {name!r} has shape {arr.shape}")
        sizes = {arr.shape[0] for arr in self.channels.values()}
        if len(sizes) > 1:
            raise ValidationError("channels disagree on ensemble size")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    @property
    def size(self) -> int:
        return len(self.seeds)

    def series(self, channel: str = "x", component: int = 0) -> np.ndarray:
        """``(ensemble, len(t))`` array of one scalar component."""
        if channel not in self.channels:
            raise ValidationError(f"channel {channel!r} not recorded "
                                  f"(have {sorted(self.channels)})")
        return self.channels[channel][:, :, component]

    def subset(self, indices: Sequence[int]) -> "TrajectoryEnsemble":
        idx = np.asarray(indices)
        return TrajectoryEnsemble(t=self.t, channels={k: v[idx] for k, v in self.channels.items()},
                                  seeds=tuple(self.seeds[i] for i in idx), model=dict(self.model))


def trajectory_rng(base_seed: int, index: int) -> np.random.Generator:
    """Independent generator for trajectory ``index`` of a run seeded ``base_seed``."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


class NoiseStreams:
    """Per-trajectory standard normal draws, consumed in time order.

    Each trajectory owns its generator, so its numbers depend only on
    ``(base_seed, index)`` and not on ensemble size or chunking.
    """

    def __init__(self, base_seed: int, ensemble: int, width: int, steps: int,
                 budget: int = 1 << 22):
        self.gens = [trajectory_rng(base_seed, i) for i in range(ensemble)]
        self.seeds = tuple((int(base_seed), i) for i in range(ensemble))
        self.width = width
        self.chunk = int(max(1, min(steps, budget // max(1, ensemble * max(width, 1)))))
        self._buf: Optional[np.ndarray] = None
        self._pos = 0

    def initial(self, n: int) -> np.ndarray:
        """``(ensemble, n)`` normals drawn before any step noise."""
        return np.stack([g.standard_normal(n) for g in self.gens])

    def next(self) -> np.ndarray:
        """``(ensemble, width)`` normals for the next step."""
        if self._buf is None or self._pos >= self._buf.shape[0]:
            self._buf = np.stack([g.standard_normal((self.chunk, self.width)) for g in self.gens],
                                 axis=1)
            self._pos = 0
        out = self._buf[self._pos]
        self._pos += 1
        return out


def check_finite(arr: np.ndarray, step: int, what: str = "state") -> None:
    if not np.all(np.isfinite(arr)):
        raise SimulationError(f"non-finite {what} at step {step}; reduce dt or check the force")


class Recorder:
    """Collects requested channels at record steps."""

    def __init__(self, sim: SimConfig, ensemble: int, dims: Dict[str, int]):
        self.sim = sim
        missing = [c for c in sim.record if c not in dims]
        if missing:
            raise ValidationError(f"cannot record {missing}; available: {sorted(dims)}")
        self.data = {c: np.empty((ensemble, sim.n_records, dims[c])) for c in sim.record}

    def wants(self, name: str) -> bool:
        return name in self.data

    def maybe(self, step: int, values: Dict[str, np.ndarray]) -> None:
        if not self.sim.is_record_step(step):
            return
        k = self.sim.record_index(step)
        for name, arr in self.data.items():
            arr[:, k, :] = values[name]() if callable(values[name]) else values[name]

    def times(self) -> np.ndarray:
        return self.sim.dt * self.sim.record_every * np.arange(self.sim.n_records)
