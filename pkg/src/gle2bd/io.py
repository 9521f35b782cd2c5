"""CSV/JSON emission with metadata headers, and trajectory/curve readers."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .analysis import CorrelationSeries
from .errors import ValidationError
from .laplace import KernelCurve
from .simulators import TrajectoryEnsemble

__all__ = [
    "metadata_lines",
    "read_metadata",
    "write_curves",
    "write_correlation",
    "write_trajectories",
    "read_trajectories",
    "read_curves",
    "read_correlation",
    "write_json",
]

_FMT = "%.17g"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def metadata_lines(meta: dict) -> List[str]:
    """Comment lines ``# gle2bd <version>`` and ``# meta: <json>``."""
    body = json.dumps(_jsonable(meta), sort_keys=True)
    return [f"# gle2bd {__version__}", f"# meta: {body}"]


def read_metadata(path) -> dict:
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if line.startswith("# meta: "):
                return json.loads(line[len("# meta: "):])
    return {}


def _write_table(path, meta: dict, header: Sequence[str], rows: Iterable[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for line in metadata_lines(meta):
            fh.write(line + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(row + "\n")
    return path


def _fmt(values: Iterable[float]) -> str:
    return ",".join(_FMT % v for v in values)


def _chi_names(d: int) -> List[str]:
    return [f"chi[{i}][{j}]" for i in range(d) for j in range(d)]


def write_curves(path, curves: Sequence[KernelCurve], meta: Optional[dict] = None) -> Path:
    """Kernel curves in long format: ``t,chi[i][j]...,provenance``."""
    if not curves:
        raise ValidationError("no curves to write")
    d = curves[0].d
    if any(c.d != d for c in curves):
        raise ValidationError("curves have different dimensions")

    def rows():
        for c in curves:
            flat = c.values.reshape(len(c.t), -1)
            for ti, vals in zip(c.t, flat):
                yield _fmt([ti, *vals]) + "," + c.provenance

    return _write_table(path, meta or {}, ["t", *_chi_names(d), "provenance"], rows())


def read_curves(path) -> List[KernelCurve]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    header = lines[0].split(",")
    nval = len(header) - 2
    d = int(round(np.sqrt(nval)))
    groups: dict = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        groups.setdefault(parts[-1], []).append([float(p) for p in parts[:-1]])
    out = []
    for prov, rows in groups.items():
        arr = np.asarray(rows)
        out.append(KernelCurve(t=arr[:, 0], values=arr[:, 1:].reshape(-1, d, d), provenance=prov))
    return out


def write_correlation(path, series: CorrelationSeries, meta: Optional[dict] = None) -> Path:
    """``lag,value,stderr,n``."""
    m = dict(meta or {})
    m.update({"mean_subtracted": series.mean_subtracted, "normalized": series.normalized})
    rows = (_fmt([lag, v, e]) + f",{series.n}"
            for lag, v, e in zip(series.lags, series.values, series.stderr))
    return _write_table(path, m, ["lag", "value", "stderr", "n"], rows)


def _header_rows(path) -> int:
    """Number of lines up to and including the column-name line."""
    with open(path) as fh:
        for k, line in enumerate(fh):
            if not line.startswith("#"):
                return k + 1
    raise ValidationError(f"{path}: no header line")


def read_correlation(path) -> CorrelationSeries:
    meta = read_metadata(path)
    data = np.loadtxt(path, delimiter=",", skiprows=_header_rows(path), ndmin=2)
    return CorrelationSeries(lags=data[:, 0], values=data[:, 1], stderr=data[:, 2],
                             n=int(data[0, 3]), mean_subtracted=meta.get("mean_subtracted", True),
                             normalized=meta.get("normalized", False))


_CHANNEL_ORDER = ("x", "v", "z", "z1", "w", "energy")


def write_trajectories(path, ensemble: TrajectoryEnsemble, meta: Optional[dict] = None) -> Path:
    """``traj_index,t,x[,z,z1,w]`` (vector channels as ``x[0],x[1],...``)."""
    names = [c for c in _CHANNEL_ORDER if c in ensemble.channels]
    names += sorted(c for c in ensemble.channels if c not in names)
    header = ["traj_index", "t"]
    for c in names:
        d = ensemble.channels[c].shape[2]
        header += [c] if d == 1 else [f"{c}[{k}]" for k in range(d)]
    m = dict(meta or {})
    m.setdefault("model", ensemble.model)
    m["seeds"] = [list(s) for s in ensemble.seeds]

    def rows():
        for i in range(ensemble.size):
            block = np.concatenate([ensemble.channels[c][i] for c in names], axis=1)
            for ti, vals in zip(ensemble.t, block):
                yield f"{i}," + _fmt([ti, *vals])

    return _write_table(path, m, header, rows())


def read_trajectories(path) -> TrajectoryEnsemble:
    meta = read_metadata(path)
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                header = line.strip().split(",")
                break
        else:
            raise ValidationError(f"{path}: no header line")
    if header[:2] != ["traj_index", "t"]:
        raise ValidationError(f"{path}: expected columns traj_index,t,...")
    data = np.loadtxt(path, delimiter=",", skiprows=_header_rows(path), ndmin=2)
    idx = data[:, 0].astype(int)
    trajs = np.unique(idx)
    T = int(np.sum(idx == trajs[0]))
    if len(data) != T * len(trajs):
        raise ValidationError(f"{path}: trajectories have different lengths")
    data = data.reshape(len(trajs), T, -1)
    t = data[0, :, 1]
    channels: dict = {}
    cols: dict = {}
    for k, name in enumerate(header[2:], start=2):
        base = name.split("[")[0]
        cols.setdefault(base, []).append(k)
    for base, ks in cols.items():
        channels[base] = data[:, :, ks]
    seeds = meta.get("seeds") or [[0, int(i)] for i in trajs]
    return TrajectoryEnsemble(t=t, channels=channels, seeds=tuple(tuple(s) for s in seeds),
                              model=meta.get("model", {}))


def write_json(path, payload: dict, meta: Optional[dict] = None) -> Path:
    """JSON document with the metadata stored under ``_meta``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"_meta": {"tool": f"gle2bd {__version__}", **_jsonable(meta or {})},
           **_jsonable(payload)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
