"""Weight container: "PMWB" magic, u32 version, u64 header length, a text
manifest of (name dtype shape offset) lines, then raw little-endian
payload in manifest order.  Round trips are bit-exact and the manifest is
diffable with standard tools.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, ManifestError
from .model import ModelConfig, param_spec
from .tensor import Tensor

MAGIC = b"PMWB"
VERSION = 1

_DTYPES = {"f8": np.dtype("<f8"), "f4": np.dtype("<f4")}
_DTYPE_NAMES = {np.dtype(np.float64): "f8", np.dtype(np.float32): "f4"}


def save_weights(params: dict, path) -> None:
    lines = []
    offset = 0
    for name, t in params.items():
        dt = _DTYPE_NAMES[np.dtype(t.dtype)]
        shape = ",".join(str(s) for s in t.shape) or "scalar"
        lines.append(f"{name} {dt} {shape} {offset}")
        offset += t.data.nbytes
    header = ("\n".join(lines) + "\n").encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for t in params.values():
            f.write(np.ascontiguousarray(t.data).astype(t.dtype, copy=False).tobytes())


def _parse_manifest(header: str):
    entries = []
    for lineno, line in enumerate(header.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise FormatError(f"manifest line {lineno} is malformed: {line!r}")
        name, dt, shape_s, off_s = parts
        if dt not in _DTYPES:
            raise FormatError(f"manifest line {lineno}: unknown dtype {dt!r}")
        shape = () if shape_s == "scalar" else tuple(int(s) for s in shape_s.split(","))
        entries.append((name, _DTYPES[dt], shape, int(off_s)))
    return entries


def load_weights(path, config: ModelConfig | None = None) -> dict:
    """Read a weight file; with a config, verify it matches the model."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != VERSION:
        raise FormatError(f"unsupported weight file version {version}")
    (header_len,) = struct.unpack("<Q", blob[8:16])
    header = blob[16 : 16 + header_len].decode()
    payload = blob[16 + header_len :]
    params = {}
    for name, dtype, shape, offset in _parse_manifest(header):
        nbytes = int(np.prod(shape or (1,))) * dtype.itemsize
        if offset + nbytes > len(payload):
            raise FormatError(
                f"payload truncated: tensor {name!r} needs {nbytes} bytes at offset {offset}"
            )
        arr = np.frombuffer(payload, dtype=dtype, count=int(np.prod(shape or (1,))), offset=offset)
        params[name] = Tensor(arr.reshape(shape).copy(), name=name, dtype=dtype)
    if config is not None:
        _diff_against(config, params)
    return params


def _diff_against(config: ModelConfig, params: dict) -> None:
    spec = dict(param_spec(config))
    missing = sorted(set(spec) - set(params))
    extra = sorted(set(params) - set(spec))
    wrong = sorted(
        f"{n}: file {tuple(params[n].shape)} vs model {spec[n]}"
        for n in set(spec) & set(params)
        if tuple(params[n].shape) != spec[n]
    )
    if missing or extra or wrong:
        parts = []
        if missing:
            parts.append("missing: " + ", ".join(missing[:5]))
        if extra:
            parts.append("extra: " + ", ".join(extra[:5]))
        if wrong:
            parts.append("shape conflicts: " + "; ".join(wrong[:5]))
        raise ManifestError("weight file does not match config — " + " | ".join(parts))
