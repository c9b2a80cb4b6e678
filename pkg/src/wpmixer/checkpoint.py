"""Binary checkpoint container and its text manifest.

Layout (all integers little-endian)::

    b"WPMX"  u32 version
    u32 n    n bytes  config echo (INI text, UTF-8)
    u32 n    n bytes  metadata (JSON, UTF-8)
    u32 count
    count x  [u16 n, name UTF-8, u8 ndim, ndim x u32 extent, f64 LE row-major payload]

The manifest next to it lists one ``name<TAB>shape<TAB>sha256`` line per tensor,
preceded by a ``# file sha256`` line.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .errors import CheckpointError, ConfigError

MAGIC = b"WPMX"
VERSION = 1


@dataclass
class Checkpoint:
    config: RunConfig
    tensors: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)


def _tensor_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def encode(ckpt: Checkpoint) -> bytes:
    parts = [MAGIC, struct.pack("<I", VERSION)]
    for blob in (ckpt.config.to_ini().encode(), json.dumps(ckpt.meta, sort_keys=True).encode()):
        parts += [struct.pack("<I", len(blob)), blob]
    parts.append(struct.pack("<I", len(ckpt.tensors)))
    for name in sorted(ckpt.tensors):
        arr = np.asarray(ckpt.tensors[name], dtype=np.float64)
        key = name.encode()
        parts += [struct.pack("<H", len(key)), key, struct.pack("<B", arr.ndim),
                  struct.pack(f"<{arr.ndim}I", *arr.shape), _tensor_bytes(arr)]
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes, origin: str):
        self.buf, self.pos, self.origin = buf, 0, origin

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError(f"{self.origin}: truncated at byte {self.pos}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode(buf: bytes, origin: str = "checkpoint") -> Checkpoint:
    r = _Reader(buf, origin)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{origin}: not a wpmixer checkpoint (bad magic)")
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise CheckpointError(f"{origin}: unsupported checkpoint version {version}")
    try:
        (n,) = r.unpack("<I")
        config = RunConfig.from_ini(r.take(n).decode(), f"{origin} config echo")
        (n,) = r.unpack("<I")
        meta = json.loads(r.take(n).decode())
    except (UnicodeDecodeError, json.JSONDecodeError, ConfigError) as exc:
        raise CheckpointError(f"{origin}: corrupt header ({exc})") from None
    (count,) = r.unpack("<I")
    tensors = {}
    for _ in range(count):
        (n,) = r.unpack("<H")
        name = r.take(n).decode()
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        size = int(np.prod(shape, dtype=np.int64))
        tensors[name] = np.frombuffer(r.take(8 * size), dtype="<f8").astype(np.float64).reshape(shape)
    if r.pos != len(buf):
        raise CheckpointError(f"{origin}: {len(buf) - r.pos} trailing bytes")
    return Checkpoint(config, tensors, meta)


def manifest(ckpt: Checkpoint, blob: bytes) -> str:
    lines = [f"# {hashlib.sha256(blob).hexdigest()}"]
    for name in sorted(ckpt.tensors):
        arr = np.asarray(ckpt.tensors[name], dtype=np.float64)
        shape = "x".join(str(s) for s in arr.shape)
        lines.append(f"{name}\t{shape}\t{hashlib.sha256(_tensor_bytes(arr)).hexdigest()}")
    return "\n".join(lines) + "\n"


def manifest_path(path: str) -> str:
    return path + ".manifest"


def save(path: str, ckpt: Checkpoint) -> None:
    blob = encode(ckpt)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)
    with open(manifest_path(path), "w") as fh:
        fh.write(manifest(ckpt, blob))


def load(path: str, verify_manifest: bool = True) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc.strerror}") from None
    ckpt = decode(blob, path)
    mpath = manifest_path(path)
    if verify_manifest and os.path.exists(mpath):
        with open(mpath) as fh:
            text = fh.read()
        if text != manifest(ckpt, blob):
            raise CheckpointError(f"{path}: contents do not match {mpath}")
    return ckpt


def config_diff(a: RunConfig, b: RunConfig, sections=("model",)) -> list[str]:
    """``section.key: a != b`` for every differing field of the chosen sections."""
    out = []
    for s in sections:
        pa, pb = getattr(a, s), getattr(b, s)
        for key in pa.__dataclass_fields__:
            va, vb = getattr(pa, key), getattr(pb, key)
            if va != vb:
                out.append(f"{s}.{key}: {va!r} != {vb!r}")
    return out
