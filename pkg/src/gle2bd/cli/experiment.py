"""Experiment configuration, figure presets and the preset pipeline."""
from __future__ import annotations

import dataclasses
import json
import logging
import os
import zlib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .. import __version__
from ..analysis import CorrelationSeries, autocorrelation, correlation_error, kernel_error
from ..errors import ValidationError
from ..io import write_correlation, write_curves, write_json
from ..kernels import ad_kernel, morse_field
from ..laplace import InversionConfig, KernelCurve, chi_infinity, exact_chi_curve
from ..reduction import approx_kernel_curve, build_extended_system, delta_kernel_curve, fit_order
from ..simulators import (ChainConfig, SimConfig, chain_dt_limit, embedded_dt_limit,
                          simulate_bd, simulate_chain, simulate_embedded, simulate_nonlocal)
from ..simulators.reduced import MAX_NONLOCAL_STEPS
from .plot import emit_plot

__all__ = ["ExperimentConfig", "PRESETS", "preset_config", "run_preset", "load_config",
           "parse_overrides", "output_dir", "clear_cache"]

log = logging.getLogger(__name__)

OUTPUT_ENV = "GLE2BD_OUTPUT_DIR"
CORRELATION_MODELS = ("full", "bd", "n1", "n2", "n3", "nonlocal")
KERNEL_MODELS = ("exact", "n1", "n2", "n3")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of one figure experiment.

    ``K_values`` lists the panels.  Correlation experiments simulate the
    listed models (``full`` is the chain) and compare their coordinate
    autocovariances; kernel experiments compare fitted kernels with the
    numerically inverted reference.
    """

    name: str
    kind: str = "correlation"
    gamma: float = 2.0
    K_values: Tuple[float, ...] = (4.0,)
    kBT: float = 0.05
    models: Tuple[str, ...] = ("full", "bd")
    morse_a: float = 1.0
    seed: int = 2024
    chain_N: int = 1024
    chain_m: float = 1.0
    chain_ensemble: int = 256
    chain_dt: float = 0.01
    reduced_ensemble: int = 4096
    bd_dt: float = 0.01
    embedded_dt: float = 0.002
    nonlocal_dt: float = 0.01
    t_burnin: float = 20.0
    t_record: float = 200.0
    reduced_t_record: float = 100.0
    sample_dt: float = 0.05
    max_lag: float = 10.0
    kernel_t_max: float = 10.0
    kernel_points: int = 1001
    output_dir: str = ""

    def __post_init__(self):
        object.__setattr__(self, "K_values", tuple(float(k) for k in self.K_values))
        object.__setattr__(self, "models", tuple(self.models))
        self.validate()

    def validate(self) -> None:
        if self.kind not in ("correlation", "kernel"):
            raise ValidationError(f"kind must be correlation or kernel, got {self.kind!r}")
        allowed = CORRELATION_MODELS if self.kind == "correlation" else KERNEL_MODELS
        bad = [m for m in self.models if m not in allowed]
        if bad or not self.models:
            raise ValidationError(f"unknown models {bad} for {self.kind} experiments; "
                                  f"choose from {allowed}")
        if self.gamma < 0 or self.kBT <= 0 or not self.K_values or min(self.K_values) <= 0:
            raise ValidationError("need gamma >= 0, kBT > 0 and positive K values")
        if self.chain_N < 2 or self.kernel_points < 2:
            raise ValidationError("chain_N and kernel_points must be at least 2")
        if self.chain_ensemble < 1 or self.reduced_ensemble < 1:
            raise ValidationError("ensemble sizes must be positive")
        for name in ("chain_dt", "bd_dt", "embedded_dt", "nonlocal_dt", "sample_dt",
                     "t_record", "reduced_t_record", "max_lag", "kernel_t_max"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.t_burnin < 0:
            raise ValidationError("t_burnin must be nonnegative")
        if self.kind == "correlation":
            for rec in (self.t_record, self.reduced_t_record):
                if 5 * self.max_lag > rec:
                    raise ValidationError("max_lag must not exceed a fifth of the record length")
            for name in ("chain_dt", "bd_dt", "embedded_dt", "nonlocal_dt"):
                _stride(self.sample_dt, getattr(self, name), name)

    def as_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in fields(self)}

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


def _stride(sample_dt: float, dt: float, what: str) -> int:
    r = sample_dt / dt
    k = int(round(r))
    if k < 1 or abs(r - k) > 1e-9 * r:
        raise ValidationError(f"sample_dt = {sample_dt} is not a multiple of {what} = {dt}")
    return k


PRESETS: Dict[str, dict] = {
    "fig1": dict(kind="correlation", gamma=2.0, K_values=(4.0,), models=("full", "bd")),
    "fig2": dict(kind="correlation", gamma=2.0, K_values=(0.2,), models=("full", "bd")),
    "fig3": dict(kind="correlation", gamma=0.0, K_values=(4.0, 0.2), models=("full", "bd")),
    "fig4": dict(kind="kernel", gamma=2.0, K_values=(4.0, 0.2), models=("exact", "n1", "n2")),
    "fig5": dict(kind="kernel", gamma=0.0, K_values=(4.0, 0.2),
                 models=("exact", "n1", "n2", "n3")),
    "fig6": dict(kind="correlation", gamma=2.0, K_values=(4.0, 0.2),
                 models=("full", "bd", "n1", "n2")),
    "fig7": dict(kind="correlation", gamma=0.0, K_values=(4.0, 0.2),
                 models=("full", "bd", "n1", "n2", "n3")),
}


def preset_config(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return ExperimentConfig(name=name, **{**PRESETS[name], **overrides})


# ---------------------------------------------------------------------------
# key=value configuration
# ---------------------------------------------------------------------------

def _convert(name: str, raw: str):
    fmap = {f.name: f for f in fields(ExperimentConfig)}
    if name not in fmap:
        raise ValidationError(f"unknown config key {name!r}")
    default = fmap[name].default
    raw = raw.strip()
    try:
        if name == "K_values":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if name == "models":
            return tuple(v.strip() for v in raw.split(",") if v.strip())
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as exc:
        raise ValidationError(f"bad value for {name}: {raw!r}") from exc
    return raw


def parse_overrides(items) -> dict:
    """``["key=value", ...]`` to typed keyword arguments."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ValidationError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _convert(k.strip(), v)
    return out


def load_config(path) -> dict:
    """Read a flat ``key = value`` file (``#`` starts a comment)."""
    items = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            items.append(line)
    return parse_overrides(items)


def output_dir(cfg: Optional[ExperimentConfig] = None) -> Path:
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV, "gle2bd_output"))


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

_CACHE: Dict[str, CorrelationSeries] = {}


def clear_cache() -> None:
    _CACHE.clear()


def _seed(base: int, model: str, gamma: float, K: float) -> int:
    tag = zlib.crc32(f"{model}:{gamma!r}:{K!r}".encode())
    return int(base) * (1 << 32) + tag


def _panel_label(cfg: ExperimentConfig, K: float) -> str:
    return cfg.name if len(cfg.K_values) == 1 else f"{cfg.name}_K{K:g}"


def _steps(t_total: float, dt: float) -> int:
    return int(round(t_total / dt))


def _plan(cfg: ExperimentConfig, K: float, model: str) -> dict:
    """Run description for one model; doubles as the cache key."""
    kernel = ad_kernel(cfg.gamma, K)
    base = {"model": model, "gamma": cfg.gamma, "K": K, "kBT": cfg.kBT, "morse_a": cfg.morse_a,
            "sample_dt": cfg.sample_dt, "max_lag": cfg.max_lag,
            "seed": _seed(cfg.seed, model, cfg.gamma, K)}
    if model == "full":
        chain = ChainConfig(N=cfg.chain_N, K=K, m=cfg.chain_m, gamma=cfg.gamma, kBT=cfg.kBT,
                            a=cfg.morse_a)
        if cfg.chain_dt > chain_dt_limit(chain):
            raise ValidationError(f"chain_dt {cfg.chain_dt} exceeds the stability limit "
                                  f"{chain_dt_limit(chain):.4g} for K = {K}")
        echo = cfg.chain_N / np.sqrt(K / cfg.chain_m)
        if cfg.t_burnin + cfg.t_record > echo:
            log.warning("run length exceeds the chain echo time %.0f; finite-size effects", echo)
        base.update(N=cfg.chain_N, m=cfg.chain_m, dt=cfg.chain_dt, ensemble=cfg.chain_ensemble,
                    t_burnin=cfg.t_burnin, t_record=cfg.t_record)
        return base
    dt = {"bd": cfg.bd_dt, "nonlocal": cfg.nonlocal_dt}.get(model, cfg.embedded_dt)
    base.update(dt=dt, ensemble=cfg.reduced_ensemble, t_burnin=cfg.t_burnin,
                t_record=cfg.reduced_t_record)
    if model in ("n1", "n2", "n3"):
        system = build_extended_system(fit_order(kernel, int(model[1])), cfg.kBT)
        if dt > embedded_dt_limit(system):
            raise ValidationError(f"embedded_dt {dt} exceeds 0.1/max|eig(D)| = "
                                  f"{embedded_dt_limit(system):.4g} for {model}, K = {K}")
    if model == "nonlocal":
        steps = _steps(cfg.t_burnin + cfg.reduced_t_record, dt)
        if steps > MAX_NONLOCAL_STEPS:
            raise ValidationError(f"nonlocal run needs {steps} steps (> {MAX_NONLOCAL_STEPS})")
    return base


def _simulate(plan: dict) -> CorrelationSeries:
    key = json.dumps(plan, sort_keys=True)
    if key in _CACHE:
        return _CACHE[key]
    model, K, gamma, kBT = plan["model"], plan["K"], plan["gamma"], plan["kBT"]
    dt = plan["dt"]
    stride = _stride(plan["sample_dt"], dt, "dt")
    burnin = _steps(plan["t_burnin"], dt)
    steps = burnin + _steps(plan["t_record"], dt)
    sim = SimConfig(dt=dt, steps=steps, burnin=burnin, ensemble=plan["ensemble"],
                    seed=plan["seed"], record_every=stride, record=("x",), kBT=kBT)
    force = morse_field(plan["morse_a"])
    kernel = ad_kernel(gamma, K)
    log.info("simulating %s (gamma=%g, K=%g, %d steps x %d)", model, gamma, K, steps, sim.ensemble)
    if model == "full":
        chain = ChainConfig(N=plan["N"], K=K, m=plan["m"], gamma=gamma, kBT=kBT, a=plan["morse_a"])
        ens = simulate_chain(chain, sim)
    elif model == "bd":
        ens = simulate_bd(kernel, force, sim)
    elif model == "nonlocal":
        grid = dt * np.arange(steps + 1)
        curve = exact_chi_curve(kernel, grid)
        ens = simulate_nonlocal(curve, force, sim)
    else:
        system = build_extended_system(fit_order(kernel, int(model[1])), kBT)
        ens = simulate_embedded(system, force, sim)
    series = autocorrelation(ens, plan["max_lag"])
    _CACHE[key] = series
    return series


_LABELS = {"full": "full model", "bd": "BD", "n1": "order 1", "n2": "order 2",
           "n3": "order 3", "nonlocal": "BD with memory", "exact": "exact Euler"}


def _run_correlation(cfg: ExperimentConfig, out: Path, meta: dict) -> Tuple[List[Path], dict]:
    files, summary = [], {"kind": "correlation", "panels": {}}
    plans = {(K, m): _plan(cfg, K, m) for K in cfg.K_values for m in cfg.models}
    for K in cfg.K_values:
        label = _panel_label(cfg, K)
        series = {m: _simulate(plans[(K, m)]) for m in cfg.models}
        panel = {"gamma": cfg.gamma, "K": K, "chi_inf": float(chi_infinity(ad_kernel(cfg.gamma, K))[0, 0]),
                 "lag0": {m: float(s.values[0]) for m, s in series.items()},
                 "min_normalized": {m: float(np.min(s.values / s.values[0])) for m, s in series.items()},
                 "significantly_negative": {m: bool(np.any(s.values < -3 * s.stderr))
                                            for m, s in series.items()}}
        for m, s in series.items():
            pm = {**meta, "panel": {"K": K, "model": m}}
            files.append(write_correlation(out / f"{label}_{m}.csv", s, pm))
            files.append(write_correlation(out / f"{label}_{m}_normalized.csv", s.normalize(), pm))
        if "full" in series:
            ref = series["full"]
            panel["error_vs_full"] = {m: correlation_error(ref, s, cfg.max_lag)
                                      for m, s in series.items() if m != "full"}
            panel["error_vs_full_normalized"] = {
                m: correlation_error(ref.normalize(), s.normalize(), cfg.max_lag)
                for m, s in series.items() if m != "full"}
        summary["panels"][f"K{K:g}"] = panel
        files.append(emit_plot([(s.lags, s.values / s.values[0]) for s in series.values()],
                               [_LABELS[m] for m in series], out / f"{label}_overlay.svg",
                               title=f"gamma = {cfg.gamma:g}, K = {K:g}", xlabel="t",
                               ylabel="<x(t), x(0)> / <x(0), x(0)>", meta=meta))
    return files, summary


def _run_kernel(cfg: ExperimentConfig, out: Path, meta: dict) -> Tuple[List[Path], dict]:
    files, summary = [], {"kind": "kernel", "panels": {}}
    t = np.linspace(0.0, cfg.kernel_t_max, cfg.kernel_points)
    for K in cfg.K_values:
        label = _panel_label(cfg, K)
        kernel = ad_kernel(cfg.gamma, K)
        ref = exact_chi_curve(kernel, t, InversionConfig())
        curves: Dict[str, KernelCurve] = {}
        for m in cfg.models:
            curves[m] = ref if m == "exact" else approx_kernel_curve(fit_order(kernel, int(m[1])), t)
        files.append(write_curves(out / f"{label}_kernels.csv", list(curves.values()),
                                  {**meta, "panel": {"K": K}}))
        summary["panels"][f"K{K:g}"] = {
            "gamma": cfg.gamma, "K": K,
            "kernel_error": {m: kernel_error(ref, c, cfg.kernel_t_max)
                             for m, c in curves.items() if m != "exact"}}
        files.append(emit_plot([(c.t, c.values[:, 0, 0]) for c in curves.values()],
                               [_LABELS[m] for m in curves], out / f"{label}_overlay.svg",
                               title=f"gamma = {cfg.gamma:g}, K = {K:g}", xlabel="t",
                               ylabel="chi(t)", meta=meta))
    return files, summary


def run_preset(name_or_cfg, outdir=None, **overrides) -> List[Path]:
    """Run a figure preset and write its CSV, SVG and summary JSON files.

    All preconditions (time-step guards, record lengths, step caps) are
    checked for every run before any simulation starts.
    """
    cfg = name_or_cfg if isinstance(name_or_cfg, ExperimentConfig) else \
        preset_config(name_or_cfg, **overrides)
    if isinstance(name_or_cfg, ExperimentConfig) and overrides:
        cfg = cfg.replace(**overrides)
    out = Path(outdir) if outdir is not None else output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"config": cfg.as_dict(), "version": __version__}
    if cfg.kind == "correlation":
        files, summary = _run_correlation(cfg, out, meta)
    else:
        files, summary = _run_kernel(cfg, out, meta)
    files.append(write_json(out / f"{cfg.name}_summary.json", summary, meta))
    return files
