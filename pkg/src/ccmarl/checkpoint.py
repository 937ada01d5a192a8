"""Binary checkpoint format.

Layout::

    b"CCMARLCK"               8-byte magic
    uint32 LE                 format version
    uint32 LE                 header length H
    H bytes                   UTF-8 JSON header (sorted keys, compact)
    payload                   every tensor in header order, float32 LE, C order

The header records the board size, the sharing layout and each tensor's
name and shape, plus a free-form ``meta`` object.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .ppo import PolicySet, Sharing

MAGIC = b"CCMARLCK"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(policy: PolicySet, meta: Optional[dict] = None) -> bytes:
    names = list(policy.params)
    header = {
        "format_version": FORMAT_VERSION,
        "n": policy.n,
        "sharing": policy.sharing.value,
        "tensors": [{"name": k, "shape": list(policy.params[k].shape)} for k in names],
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(hbytes)), hbytes]
    for k in names:
        parts.append(np.ascontiguousarray(policy.params[k], dtype="<f4").tobytes())
    return b"".join(parts)


def loads(data: bytes):
    """Returns ``(policy, meta)``."""
    if data[:8] != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    version, hlen = struct.unpack_from("<II", data, 8)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format version {version}")
    off = 16 + hlen
    header = json.loads(data[16:off].decode())
    params = {}
    for t in header["tensors"]:
        shape = tuple(t["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = off + 4 * count
        if end > len(data):
            raise CheckpointError(f"truncated payload at tensor {t['name']}")
        params[t["name"]] = np.frombuffer(data, dtype="<f4", count=count, offset=off).astype(np.float32).reshape(shape)
        off = end
    if off != len(data):
        raise CheckpointError("trailing bytes after payload")
    policy = PolicySet(int(header["n"]), Sharing(header["sharing"]), params)
    return policy, header.get("meta", {})


def save(path: Union[str, Path], policy: PolicySet, meta: Optional[dict] = None) -> bytes:
    data = dumps(policy, meta)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    return data


def load(path: Union[str, Path]):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint {path} not found")
    return loads(path.read_bytes())
