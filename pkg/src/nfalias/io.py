"""Deterministic CSV/JSON writers and run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

from . import __version__


def fmt(value):
    """Shortest round-trip text for floats; 1/0 for booleans."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def jsonable(obj):
    """Replace non-finite floats by None so output stays strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return jsonable(obj.tolist())
    return obj


def write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(jsonable(payload), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, config_path, command, tolerances, outputs):
    write_json(Path(out_dir) / "manifest.json", {
        "tool": "nfalias",
        "version": __version__,
        "command": command,
        "config": str(config_path),
        "config_sha256": file_sha256(config_path),
        "tolerances": tolerances,
        "outputs": sorted(outputs),
    })
