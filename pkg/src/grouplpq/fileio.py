"""Problem and solution files.

A problem is a JSON manifest plus two raw binary files (little-endian
float64, column-major). A solution is a binary vector with a JSON sidecar.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import GroupedVector, GroupPartition, ProblemSpec, format_r, parse_r

_DTYPE = np.dtype("<f8")
MANIFEST_KEYS = ("M", "N", "group_sizes", "alpha", "p", "q", "r", "A_file", "y_file")


def write_array(path, arr) -> None:
    arr = np.asarray(arr, dtype=float)
    Path(path).write_bytes(np.asfortranarray(arr).astype(_DTYPE).tobytes(order="F"))


def read_array(path, shape) -> np.ndarray:
    raw = np.fromfile(path, dtype=_DTYPE)
    expected = int(np.prod(shape))
    if raw.size != expected:
        raise ValueError(f"{path}: expected {expected} float64 values, found {raw.size}")
    return np.ascontiguousarray(raw.reshape(shape, order="F").astype(float))


def save_problem(problem: ProblemSpec, manifest_path, stem=None) -> Path:
    """Write ``<stem>.A.bin``, ``<stem>.y.bin`` next to the manifest."""
    manifest_path = Path(manifest_path)
    stem = stem or manifest_path.stem
    folder = manifest_path.parent
    folder.mkdir(parents=True, exist_ok=True)
    a_name, y_name = f"{stem}.A.bin", f"{stem}.y.bin"
    write_array(folder / a_name, problem.A)
    write_array(folder / y_name, problem.y)
    M, N = problem.A.shape
    manifest = {
        "M": M,
        "N": N,
        "group_sizes": list(problem.partition.group_sizes),
        "alpha": problem.alpha,
        "p": problem.p,
        "q": problem.q,
        "r": format_r(problem.r),
        "A_file": a_name,
        "y_file": y_name,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def load_problem(manifest_path) -> ProblemSpec:
    manifest_path = Path(manifest_path)
    meta = json.loads(manifest_path.read_text())
    missing = [k for k in MANIFEST_KEYS if k not in meta]
    if missing:
        raise ValueError(f"{manifest_path}: manifest lacks {missing}")
    M, N = int(meta["M"]), int(meta["N"])
    folder = manifest_path.parent
    A = read_array(folder / meta["A_file"], (M, N))
    y = read_array(folder / meta["y_file"], (M,))
    part = GroupPartition(tuple(int(k) for k in meta["group_sizes"]))
    return ProblemSpec(A, y, float(meta["alpha"]), float(meta["p"]), float(meta["q"]),
                       parse_r(meta["r"]), part)


def save_solution(x: GroupedVector, path, extra=None) -> Path:
    """Write ``x`` to ``path`` and a sidecar ``path + '.json'``; returns the sidecar path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_array(path, x.values)
    sidecar = path.with_name(path.name + ".json")
    meta = {"N": x.values.size, "group_sizes": list(x.partition.group_sizes), "values_file": path.name}
    if extra:
        meta.update(extra)
    sidecar.write_text(json.dumps(meta, indent=2, default=_jsonable) + "\n")
    return sidecar


def load_solution(path) -> tuple[GroupedVector, dict]:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    part = GroupPartition(tuple(meta["group_sizes"]))
    return GroupedVector(read_array(path, (int(meta["N"]),)), part), meta


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
