"""JSON + little-endian binary container for grids, masks, signals and fields.

A container is a pair of files: ``<stem>.json`` holds the descriptor and
``<stem>.bin`` the raw array in row-major (C) order, little-endian.  The
descriptor records ``kind``, ``dtype``, ``shape`` and the data file name.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1

_DTYPES = {
    "complex128": "<c16",
    "float64": "<f8",
    "uint8": "|u1",
}


def _paths(path) -> tuple[Path, Path]:
    path = Path(path)
    if path.suffix in (".json", ".bin"):
        path = path.with_suffix("")
    return path.with_name(path.name + ".json"), path.with_name(path.name + ".bin")


def write_container(path, kind: str, meta: dict, array: np.ndarray) -> Path:
    """Write ``array`` with descriptor ``meta``; returns the descriptor path."""
    array = np.asarray(array)
    if array.dtype == bool:
        array = array.astype(np.uint8)
    name = array.dtype.name
    if name not in _DTYPES:
        raise TypeError(f"unsupported container dtype {name}")
    code = _DTYPES[name]
    json_path, bin_path = _paths(path)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    bin_path.write_bytes(np.ascontiguousarray(array, dtype=np.dtype(code)).tobytes(order="C"))
    desc = {"format": "wavesieve-container", "version": FORMAT_VERSION, "kind": kind,
            "dtype": code, "shape": list(array.shape), "data": bin_path.name}
    desc.update(meta)
    json_path.write_text(json.dumps(desc, indent=2, sort_keys=True))
    return json_path


def read_container(path, kind: str | None = None) -> tuple[dict, np.ndarray]:
    json_path, _ = _paths(path)
    desc = json.loads(json_path.read_text())
    if desc.get("format") != "wavesieve-container":
        raise ValueError(f"{json_path} is not a wavesieve container")
    if kind is not None and desc.get("kind") != kind:
        raise ValueError(f"{json_path} holds a {desc.get('kind')!r}, expected {kind!r}")
    data = (json_path.parent / desc["data"]).read_bytes()
    arr = np.frombuffer(data, dtype=np.dtype(desc["dtype"])).reshape(desc["shape"])
    return desc, arr.astype(arr.dtype.newbyteorder("="))
