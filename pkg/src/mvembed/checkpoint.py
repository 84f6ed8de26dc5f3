"""Checkpoint serialization: a JSON manifest (hyperparameters, named array
descriptors with shapes/offsets, rng states) followed by the raw
little-endian parameter payload in manifest order. Round-trips are
bit-exact."""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import CorruptCheckpointError
from .model import MultiViewModel, build_model

__all__ = ["save_checkpoint", "load_checkpoint", "read_manifest"]

MAGIC = b"MVCK0001"
VERSION = 1

_DTYPE_CODES = {"float64": "<f8", "float32": "<f4"}


def save_checkpoint(
    model: MultiViewModel,
    path,
    iteration: int,
    seed: int,
    epoch: int = 0,
    rng_states: dict | None = None,
) -> None:
    arrays = []
    payload_parts = []
    offset = 0
    for name, p in model.parameters().items():
        dtype_name = str(p.data.dtype)
        raw = np.ascontiguousarray(p.data).astype(_DTYPE_CODES[dtype_name]).tobytes()
        arrays.append(
            {
                "name": name,
                "shape": list(p.data.shape),
                "dtype": dtype_name,
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        payload_parts.append(raw)
        offset += len(raw)
    manifest = {
        "version": VERSION,
        "view_config": model.view_config,
        "d": model.d,
        "word_dim": model.word_dim,
        "dtype": str(model.dtype),
        "f_last_mode": model.f_last_mode,
        "fix_tau": model.fix_tau,
        "iteration": iteration,
        "epoch": epoch,
        "seed": seed,
        "tau": float(model.tau.data),
        "rng": rng_states or {},
        "arrays": arrays,
        "payload_nbytes": offset,
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for part in payload_parts:
            fh.write(part)


def read_manifest(path) -> dict:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise CorruptCheckpointError(f"bad magic {magic!r}; not a checkpoint file")
        (mlen,) = struct.unpack("<Q", fh.read(8))
        blob = fh.read(mlen)
        if len(blob) != mlen:
            raise CorruptCheckpointError("truncated manifest")
        try:
            manifest = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorruptCheckpointError(f"unreadable manifest: {exc}") from exc
    if manifest.get("version") != VERSION:
        raise CorruptCheckpointError(
            f"unsupported checkpoint version {manifest.get('version')!r} (expected {VERSION})"
        )
    return manifest


def load_checkpoint(path) -> tuple[MultiViewModel, dict]:
    """Rebuild the model bit-exactly; manifest/payload disagreement raises
    a corruption error."""
    manifest = read_manifest(path)
    with open(path, "rb") as fh:
        fh.seek(len(MAGIC))
        (mlen,) = struct.unpack("<Q", fh.read(8))
        fh.seek(len(MAGIC) + 8 + mlen)
        payload = fh.read()
    if len(payload) != manifest["payload_nbytes"]:
        raise CorruptCheckpointError(
            f"payload holds {len(payload)} bytes, manifest declares {manifest['payload_nbytes']}"
        )
    model = build_model(
        manifest["view_config"],
        manifest["d"],
        manifest["word_dim"],
        rng=np.random.default_rng(0),
        dtype=np.dtype(manifest["dtype"]),
        f_last_mode=manifest["f_last_mode"],
        fix_tau=manifest["fix_tau"],
    )
    params = model.parameters()
    seen = set()
    for entry in manifest["arrays"]:
        name = entry["name"]
        if name not in params:
            raise CorruptCheckpointError(f"manifest array {name!r} has no matching parameter")
        shape = tuple(entry["shape"])
        p = params[name]
        if shape != p.data.shape:
            raise CorruptCheckpointError(
                f"array {name!r} shape {shape} != expected {p.data.shape}"
            )
        code = _DTYPE_CODES.get(entry["dtype"])
        if code is None:
            raise CorruptCheckpointError(f"array {name!r} has unknown dtype {entry['dtype']!r}")
        start, nbytes = entry["offset"], entry["nbytes"]
        chunk = payload[start : start + nbytes]
        if len(chunk) != nbytes:
            raise CorruptCheckpointError(f"array {name!r} payload is truncated")
        arr = np.frombuffer(chunk, dtype=code).reshape(shape).astype(entry["dtype"])
        p.data = arr
        seen.add(name)
    missing = set(params) - seen
    if missing:
        raise CorruptCheckpointError(f"checkpoint is missing arrays: {sorted(missing)}")
    return model, manifest
