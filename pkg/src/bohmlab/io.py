"""Serialization of scenario reports: JSON record, CSV tables, raw snapshots, manifest.

CSV layout (frozen for 0.x): ``#``-prefixed header lines carrying the series
name, column units, the config hash and an optional note, then one row of
column names, then data.  Numbers use 12 significant digits (``%.12g``) so
the same config and seed give byte-identical files.

Snapshots are raw little-endian complex128 arrays (``snapshot_KKK.bin``) with
a JSON sidecar describing shape, time and grid.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_to_text
from .errors import BohmLabError
from .scenarios import ScenarioConfig, ScenarioReport

FLOAT_FORMAT = "%.12g"


class UnknownSeriesError(BohmLabError, KeyError):
    kind = "unknown-series"


def config_hash(cfg: ScenarioConfig) -> str:
    """sha256 of the canonical config text (provenance tag for exported files)."""
    return hashlib.sha256(config_to_text(cfg).encode()).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def jsonable(value):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, complex):
        return [jsonable(value.real), jsonable(value.imag)]
    return value


def report_record(report: ScenarioReport) -> dict:
    """Machine-readable summary of a report (no bulk arrays).

    Wall-clock metadata is left to the manifest so that reruns of the same
    config give byte-identical records.
    """
    record = report.summary()
    record.pop("runtime", None)
    record["config_sha256"] = config_hash(report.config)
    return jsonable(record)


def _write_csv(path: Path, columns, data, header: dict) -> Path:
    lines = [f"# {k}: {v}" for k, v in header.items() if v not in (None, "")]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
        fh.write(",".join(columns) + "\n")
        if len(data):
            np.savetxt(fh, np.asarray(data, dtype=float), fmt=FLOAT_FORMAT, delimiter=",")
    return path


def export_plot_series(report: ScenarioReport, which: str, out_dir) -> Path:
    """Write ``report.series[which]`` to ``<out_dir>/<which>.csv``."""
    if which not in report.series:
        raise UnknownSeriesError(
            f"series {which!r} not in report; available: {sorted(report.series)}")
    s = report.series[which]
    header = {"series": which, "scenario": report.scenario,
              "units": ",".join(s.units), "config_sha256": config_hash(report.config),
              "note": s.note}
    return _write_csv(Path(out_dir) / f"{which}.csv", s.columns, s.data, header)


def write_scalars(report: ScenarioReport, out_dir) -> Path:
    """name,value rows for every real-valued scalar outcome."""
    path = Path(out_dir) / "scalars.csv"
    lines = [f"# scenario: {report.scenario}",
             f"# config_sha256: {config_hash(report.config)}", "name,value"]
    for name, value in report.scalars.items():
        if isinstance(value, (bool, np.bool_)):
            lines.append(f"{name},{int(value)}")
        elif isinstance(value, (int, float, np.integer, np.floating)):
            lines.append(f"{name},{FLOAT_FORMAT % value}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_table(report: ScenarioReport, out_dir, name: str = "table") -> Path | None:
    if not report.table:
        return None
    cols = list(report.table[0])
    data = [[float(row[c]) for c in cols] for row in report.table]
    header = {"table": name, "scenario": report.scenario,
              "config_sha256": config_hash(report.config)}
    return _write_csv(Path(out_dir) / f"{name}.csv", cols, data, header)


def write_final_positions(report: ScenarioReport, out_dir) -> Path | None:
    """Start and end point and status of every path in the ensemble."""
    ens = report.ensemble
    if ens is None:
        return None
    path = Path(out_dir) / "final_positions.csv"
    pos = ens.positions
    if pos.ndim == 2:
        cols = ["id", "x_start", "x_end", "status"]
        rows = zip(range(len(ens)), pos[:, 0], pos[:, -1], ens.status)
        body = [f"{i},{FLOAT_FORMAT % a},{FLOAT_FORMAT % b},{s}" for i, a, b, s in rows]
    else:
        cols = ["id", "x_start", "X_start", "x_end", "X_end", "status"]
        body = [",".join([str(i)] + [FLOAT_FORMAT % v for v in (*p[0], *p[-1])] + [s])
                for i, (p, s) in enumerate(zip(pos, ens.status))]
    head = [f"# scenario: {report.scenario}",
            f"# config_sha256: {config_hash(report.config)}", ",".join(cols)]
    path.write_text("\n".join(head + body) + "\n")
    return path


def _grid_record(grid) -> dict:
    axes = [grid] if grid.ndim == 1 else [grid.axis_x, grid.axis_X]
    return {"axes": [{"min": a.x_min, "max": a.x_max, "n_points": a.n_points} for a in axes],
            "dt": grid.dt}


def write_snapshots(report: ScenarioReport, out_dir) -> list[Path]:
    paths = []
    for k, snap in enumerate(report.snapshots):
        stem = Path(out_dir) / f"snapshot_{k:03d}"
        raw = np.ascontiguousarray(snap.values, dtype="<c16")
        stem.with_suffix(".bin").write_bytes(raw.tobytes())
        sidecar = {"dtype": "complex128", "byteorder": "little", "order": "C",
                   "shape": list(raw.shape), "time": snap.time, "grid": _grid_record(snap.grid)}
        stem.with_suffix(".json").write_text(json.dumps(jsonable(sidecar), indent=2) + "\n")
        paths += [stem.with_suffix(".bin"), stem.with_suffix(".json")]
    return paths


def read_snapshot(path) -> tuple[np.ndarray, dict]:
    """Load a raw snapshot and its sidecar (``path`` may name either file)."""
    stem = Path(path).with_suffix("")
    meta = json.loads(stem.with_suffix(".json").read_text())
    values = np.fromfile(stem.with_suffix(".bin"), dtype="<c16").reshape(meta["shape"])
    return values, meta


# file names fixed per series so downstream scripts do not depend on scenario
SERIES_FILES = {"pointer_momentum_density": "pointer_momentum",
                "trajectory_bundle": "trajectories"}


def write_outputs(report: ScenarioReport, out_dir) -> list[Path]:
    """Everything except the manifest; returns the files written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    record = out_dir / "report.json"
    record.write_text(json.dumps(report_record(report), indent=2) + "\n")
    files = [record, write_scalars(report, out_dir)]
    for name in report.series:
        path = export_plot_series(report, name, out_dir)
        if name in SERIES_FILES:
            path = path.rename(out_dir / f"{SERIES_FILES[name]}.csv")
        files.append(path)
    for extra in (write_table(report, out_dir, "sweep_table" if report.table else "table"),
                  write_final_positions(report, out_dir)):
        if extra is not None:
            files.append(extra)
    files += write_snapshots(report, out_dir)
    return files


def write_manifest(out_dir, files, cfg: ScenarioConfig, start: str, end: str | None = None,
                   extra: dict | None = None) -> Path:
    """Inventory of ``files`` with sha256 checksums; always written last."""
    out_dir = Path(out_dir)
    entries = [{"file": str(Path(f).relative_to(out_dir)), "bytes": Path(f).stat().st_size,
                "sha256": sha256_file(f)} for f in sorted(files)]
    manifest = {"code_version": __version__, "seed": cfg.seed, "config": asdict(cfg),
                "config_text": config_to_text(cfg), "start": start,
                "end": end or datetime.now(timezone.utc).isoformat(), "files": entries}
    manifest.update(extra or {})
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(jsonable(manifest), indent=2) + "\n")
    return path
