"""Full harmonic chain with a Langevin-thermostatted end atom (reference model)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import TimeStepError, ValidationError
from ..kernels import ForceField, morse_field, zero_field
from ._common import NoiseStreams, Recorder, SimConfig, TrajectoryEnsemble, check_finite

__all__ = ["ChainConfig", "simulate_chain", "chain_forces", "chain_energy", "chain_dt_limit"]


@dataclass(frozen=True)
class ChainConfig:
    """Semi-infinite chain truncated at ``N`` atoms with a free far end.

    Atom 0 feels the external force (Morse with parameter ``a``, or none when
    ``a is None``), the spring to atom 1, friction ``gamma`` and white noise;
    atoms ``j >= 1`` are Hamiltonian.  The gas molecule is pinned at 0.
    """

    N: int = 8192
    K: float = 4.0
    m: float = 1.0
    gamma: float = 2.0
    kBT: float = 1.0
    a: Optional[float] = 1.0
    pinned: bool = True
    M: Optional[float] = None

    def __post_init__(self):
        if self.N < 2:
            raise ValidationError("chain needs N >= 2")
        if self.m <= 0 or self.K <= 0:
            raise ValidationError("m and K must be positive")
        if self.gamma < 0:
            raise ValidationError("gamma must be nonnegative")
        if self.kBT < 0:
            raise ValidationError("kBT must be nonnegative")
        if self.a is not None and self.a <= 0:
            raise ValidationError("Morse parameter must be positive")
        if not self.pinned:
            raise ValidationError("only the pinned gas molecule is supported")

    @property
    def force(self) -> ForceField:
        return zero_field() if self.a is None else morse_field(self.a)

    def as_dict(self) -> dict:
        return {"N": self.N, "K": self.K, "m": self.m, "gamma": self.gamma,
                "kBT": self.kBT, "a": self.a, "pinned": self.pinned}


def chain_dt_limit(chain: ChainConfig) -> float:
    """Largest admissible step: a tenth of the inverse top band frequency."""
    return 0.1 / np.sqrt(4.0 * chain.K / chain.m)


def chain_forces(x: np.ndarray, chain: ChainConfig, force: ForceField,
                 out: Optional[np.ndarray] = None) -> np.ndarray:
    """Forces on every atom, ``x`` of shape ``(..., N)``."""
    K = chain.K
    F = np.empty_like(x) if out is None else out
    bond = np.diff(x, axis=-1)              # x_{j+1} - x_j
    F[..., :-1] = K * bond
    F[..., -1] = 0.0
    F[..., 1:] -= K * bond
    if not force.is_zero:
        F[..., 0] += force(x[..., 0])
    return F


def chain_energy(x: np.ndarray, v: np.ndarray, chain: ChainConfig,
                 force: Optional[ForceField] = None) -> np.ndarray:
    """Total energy per trajectory (kinetic + springs + external potential)."""
    force = chain.force if force is None else force
    e = 0.5 * chain.m * np.sum(v * v, axis=-1)
    e = e + 0.5 * chain.K * np.sum(np.diff(x, axis=-1) ** 2, axis=-1)
    if not force.is_zero:
        e = e + force.potential(x[..., 0])
    return e


def _gibbs_initial(chain: ChainConfig, force: ForceField, eta: np.ndarray):
    N, kBT = chain.N, chain.kBT
    v = np.sqrt(kBT / chain.m) * eta[:, :N]
    bonds = np.sqrt(kBT / chain.K) * eta[:, N:2 * N - 1]
    x0 = eta[:, 2 * N - 1]
    x0 = np.sqrt(kBT / force.stiffness) * x0 if force.stiffness > 0 else 0.0 * x0
    x = np.empty_like(v)
    x[:, 0] = x0
    x[:, 1:] = x0[:, None] + np.cumsum(bonds, axis=1)
    return x, v


def simulate_chain(chain: ChainConfig, sim: SimConfig,
                   initial: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> TrajectoryEnsemble:
    """Stochastic velocity Verlet (OBABO) for the full chain.

    Initial displacements and velocities are Gibbs-distributed: independent
    Maxwell velocities, independent bond stretches ``N(0, kBT/K)`` and the
    end atom drawn from the linearised well.  ``initial = (x, v)`` overrides
    this with given arrays of shape ``(N,)`` or ``(ensemble, N)``.

    Recorded channels: ``x`` and ``v`` of atom 0, ``energy`` of the chain.
    """
    if sim.dt > chain_dt_limit(chain) * (1 + 1e-12):
        raise TimeStepError(f"dt = {sim.dt} exceeds 0.1/sqrt(4K/m) = {chain_dt_limit(chain):.4g}")
    force = chain.force
    E, N, dt = sim.ensemble, chain.N, sim.dt
    streams = NoiseStreams(sim.seed, E, 2, sim.steps)
    eta0 = streams.initial(2 * N)
    if initial is not None:
        x = np.broadcast_to(np.asarray(initial[0], dtype=float), (E, N)).copy()
        v = np.broadcast_to(np.asarray(initial[1], dtype=float), (E, N)).copy()
    else:
        x, v = _gibbs_initial(chain, force, eta0)
    c = np.exp(-0.5 * chain.gamma * dt)
    kick = np.sqrt((1.0 - c * c) * chain.kBT / chain.m)
    thermostat = chain.gamma > 0 and chain.kBT > 0
    rec = Recorder(sim, E, {"x": 1, "v": 1, "energy": 1})
    F = chain_forces(x, chain, force)
    half = 0.5 * dt / chain.m
    values = {"x": lambda: x[:, :1], "v": lambda: v[:, :1],
              "energy": lambda: chain_energy(x, v, chain, force)[:, None]}
    rec.maybe(0, values)
    for step in range(1, sim.steps + 1):
        eta = streams.next()
        if chain.gamma > 0:
            v[:, 0] *= c
            if thermostat:
                v[:, 0] += kick * eta[:, 0]
        v += half * F
        x += dt * v
        chain_forces(x, chain, force, out=F)
        v += half * F
        if chain.gamma > 0:
            v[:, 0] *= c
            if thermostat:
                v[:, 0] += kick * eta[:, 1]
        if step % 1000 == 0:
            check_finite(x[:, 0], step)
        rec.maybe(step, values)
    check_finite(x, sim.steps)
    model = {"model": "chain", **chain.as_dict(), **sim.as_dict()}
    return TrajectoryEnsemble(t=rec.times(), channels=rec.data, seeds=streams.seeds, model=model)
