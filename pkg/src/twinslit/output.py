"""Serialization of run results: CSV data files, JSON reports, manifest.

All numeric output is written with repr-precision so files round-trip exactly
and reruns with identical inputs are byte-identical (the manifest's wall-clock
field is the only exception, and it participates in no checksum).
"""

import dataclasses
import hashlib
import json
import os

import numpy as np

from .errors import IoError


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path, payload):
    try:
        with open(path, "w") as f:
            json.dump(_jsonable(payload), f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def write_csv(path, header, rows):
    """rows: iterable of tuples; numbers formatted round-trip safe."""
    try:
        with open(path, "w") as f:
            f.write(",".join(header) + "\n")
            for row in rows:
                f.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def write_trajectories_csv(path, trajectories):
    rows = (
        (pid, t, y1v, y2v)
        for pid, traj in enumerate(trajectories)
        for t, y1v, y2v in zip(traj.times, traj.y1, traj.y2)
    )
    write_csv(path, ["pair_id", "t", "y1", "y2"], rows)


def write_arrivals_csv(path, arrival_set):
    rows = (
        (pid, r, l, int(r * l > 0))
        for pid, (r, l) in enumerate(arrival_set.pairs)
    )
    write_csv(path, ["pair_id", "right", "left", "same_side"], rows)


def write_histogram_csv(path, hist):
    rows = zip(hist.bin_edges[:-1], hist.counts)
    write_csv(path, ["bin_left_edge", "count"], rows)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir, config_doc, counts, files, wall_clock, version):
    """manifest.json: config echo, stage counts, checksums of emitted files."""
    manifest = {
        "artifact_version": version,
        "config": config_doc,
        "counts": counts,
        "wall_clock_seconds": wall_clock,
        "files": {os.path.basename(p): sha256_file(p) for p in files},
    }
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, manifest)
    return path
