"""Checkpoint directory format: JSON manifest plus a float32 blob.

``manifest.json`` records the format version, hyperparameters, the seed the
run was started with, and the tensor name/shape order; ``params.bin`` holds
the values as little-endian float32 in exactly that order. Values are float64
in memory, so a round trip is exact to float32 rounding (<= 2**-24 relative).
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .model import HyperParams, ModelParams, param_schema

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
BLOB_NAME = "params.bin"


class CheckpointError(Exception):
    pass


class VersionError(CheckpointError):
    pass


class ShapeMismatchError(CheckpointError):
    pass


class BlobError(CheckpointError):
    pass


def save_checkpoint(params: ModelParams, path, seed: int,
                    extra_tensors: dict[str, np.ndarray] | None = None,
                    meta: dict | None = None):
    """Write a checkpoint directory (created if missing)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    extra_tensors = extra_tensors or {}
    names = [name for name, _ in param_schema(params.hyper)]
    arrays = [params[name].data for name in names]
    for name in sorted(extra_tensors):
        names.append(name)
        arrays.append(np.asarray(extra_tensors[name], dtype=np.float64))

    manifest = {
        "format_version": FORMAT_VERSION,
        "hyper": asdict(params.hyper),
        "seed": int(seed),
        "tensors": [{"name": n, "shape": list(a.shape)}
                    for n, a in zip(names, arrays)],
        "meta": meta or {},
    }
    (path / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2))
    with open(path / BLOB_NAME, "wb") as f:
        for a in arrays:
            f.write(a.astype("<f4").tobytes())


def load_checkpoint(path) -> tuple[ModelParams, dict[str, np.ndarray], dict]:
    """Read a checkpoint directory; returns (params, extra tensors, manifest)."""
    path = Path(path)
    manifest_path = path / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"no checkpoint manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text())

    if manifest.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"unsupported checkpoint version "
                           f"{manifest.get('format_version')!r}")
    hyper = HyperParams(**manifest["hyper"])
    schema = param_schema(hyper)
    listed = [(t["name"], tuple(t["shape"])) for t in manifest["tensors"]]
    if listed[:len(schema)] != schema:
        for (got_n, got_s), (want_n, want_s) in zip(listed, schema):
            if (got_n, got_s) != (want_n, want_s):
                raise ShapeMismatchError(
                    f"manifest lists {got_n}{list(got_s)}, model needs "
                    f"{want_n}{list(want_s)}")
        raise ShapeMismatchError("manifest is missing model tensors")

    blob = (path / BLOB_NAME).read_bytes()
    expected = sum(int(np.prod(s)) for _, s in listed) * 4
    if len(blob) < expected:
        raise BlobError(f"short blob: {len(blob)} B of {expected} B")
    if len(blob) > expected:
        raise BlobError(f"oversized blob: {len(blob)} B, expected {expected} B")

    tensors: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in listed:
        count = int(np.prod(shape))
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        tensors[name] = flat.astype(np.float64).reshape(shape)
        offset += count * 4

    params = ModelParams(hyper, {n: tensors[n] for n, _ in schema})
    extras = {n: tensors[n] for n, _ in listed[len(schema):]}
    return params, extras, manifest
