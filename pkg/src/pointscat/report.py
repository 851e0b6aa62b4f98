"""Run artifacts: JSON manifest, CSV tables, and plot-ready data files.

Every table carries a row-count footer so truncated files are detectable,
floats are written with 17 significant digits so round trips are lossless,
and manifests are deterministic apart from the timestamp/timing keys.
"""
from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__

__all__ = [
    "scenario_fingerprint", "new_manifest", "add_timing", "add_result",
    "add_oracle", "manifest_write", "write_csv", "read_csv",
    "write_plot_data",
]


def _canonical(obj):
    if is_dataclass(obj):
        return _canonical(asdict(obj))
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def scenario_fingerprint(scn) -> str:
    """sha256 of the canonical JSON encoding of a scenario."""
    blob = json.dumps(_canonical(scn), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def new_manifest(subcommand: str, scn=None, flags: dict = None) -> dict:
    man = {
        "subcommand": subcommand,
        "scenario": _canonical(scn) if scn is not None else None,
        "scenario_sha256": scenario_fingerprint(scn) if scn is not None else None,
        "flags": _canonical(flags or {}),
        "versions": {
            "package": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "created_unix": time.time(),
        "timings_s": {},
        "oracles": [],
        "results": {},
    }
    return man


def add_timing(man: dict, stage: str, seconds: float) -> None:
    man["timings_s"][stage] = round(float(seconds), 3)


def add_result(man: dict, key: str, value) -> None:
    man["results"][key] = _canonical(value)


def add_oracle(man: dict, name: str, value, provenance: str) -> None:
    """Record an oracle value with its provenance tag."""
    man["oracles"].append({"name": name, "value": _canonical(value),
                           "provenance": provenance})


def manifest_write(man: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    with open(path, "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path, header, rows) -> Path:
    """CSV with the exact header given and a `# rows=` footer."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
            n += 1
        fh.write(f"# rows={n}\n")
    return path


def read_csv(path):
    """Inverse of write_csv: (header, string rows); verifies the footer."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[-1].startswith("# rows="):
        raise ValueError(f"{path}: missing row-count footer")
    n = int(lines[-1].split("=", 1)[1])
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:-1] if not ln.startswith("#")]
    if len(rows) != n:
        raise ValueError(f"{path}: footer says {n} rows, found {len(rows)}")
    return header, rows


def write_plot_data(path, xs, ys) -> Path:
    """Two-column whitespace-separated data file for external plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("columns must have equal length")
    with open(path, "w") as fh:
        for x, y in zip(xs, ys):
            fh.write("%.17g %.17g\n" % (x, y))
    return path
