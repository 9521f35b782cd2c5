"""Simulators for the full chain and the coordinate-only models."""
from ._common import SimConfig, TrajectoryEnsemble, trajectory_rng
from .chain import ChainConfig, chain_dt_limit, chain_energy, simulate_chain
from .gaussian import StationarySampler, sample_stationary_gaussian
from .reduced import (MAX_NONLOCAL_STEPS, embedded_dt_limit, simulate_bd, simulate_embedded,
                      simulate_nonlocal)

__all__ = [
    "SimConfig", "TrajectoryEnsemble", "trajectory_rng",
    "ChainConfig", "simulate_chain", "chain_energy", "chain_dt_limit",
    "StationarySampler", "sample_stationary_gaussian",
    "simulate_bd", "simulate_embedded", "simulate_nonlocal", "embedded_dt_limit",
    "MAX_NONLOCAL_STEPS",
]
