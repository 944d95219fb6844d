"""Binary state snapshots with bit-exact round trips.

Layout (little-endian): 8-byte magic, u32 version, u32 header length, the
UTF-8 JSON header (kind, dims, t, lambda, params hash), the raw complex128
payload, and a trailing SHA-256 over everything before it.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .errors import SnapshotError
from .state import QuantumState

__all__ = ["snapshot_write", "snapshot_read", "SNAPSHOT_MAGIC", "SNAPSHOT_VERSION"]

SNAPSHOT_MAGIC = b"DKSNAP01"
SNAPSHOT_VERSION = 1


def snapshot_write(state: QuantumState, path, params_hash: str = "") -> None:
    header = {
        "kind": state.kind,
        "spin_dim": int(state.spin_dim),
        "field_dim": int(state.field_dim),
        "t": float(state.t),
        "lambda": float(state.lam),
        "params_hash": params_hash,
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(state.data, dtype="<c16").tobytes()
    body = (
        SNAPSHOT_MAGIC
        + struct.pack("<II", SNAPSHOT_VERSION, len(hbytes))
        + hbytes
        + payload
    )
    digest = hashlib.sha256(body).digest()
    with open(path, "wb") as f:
        f.write(body)
        f.write(digest)


def snapshot_read(path, expect_params_hash: str | None = None) -> QuantumState:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < len(SNAPSHOT_MAGIC) + 8 + 32:
        raise SnapshotError(f"snapshot file {path} is truncated")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise SnapshotError(f"snapshot file {path} failed its checksum")
    if body[: len(SNAPSHOT_MAGIC)] != SNAPSHOT_MAGIC:
        raise SnapshotError(f"snapshot file {path} has a wrong magic tag")
    off = len(SNAPSHOT_MAGIC)
    version, hlen = struct.unpack_from("<II", body, off)
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(
            f"snapshot version {version} is not supported (want {SNAPSHOT_VERSION})"
        )
    off += 8
    try:
        header = json.loads(body[off : off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"snapshot header of {path} is corrupt") from exc
    off += hlen
    if expect_params_hash is not None and header.get("params_hash") != expect_params_hash:
        raise SnapshotError(
            "snapshot belongs to a different configuration "
            f"({header.get('params_hash')!r} != {expect_params_hash!r})"
        )
    dim = header["spin_dim"] * header["field_dim"]
    count = dim if header["kind"] == "pure" else dim * dim
    data = np.frombuffer(body[off:], dtype="<c16")
    if data.size != count:
        raise SnapshotError(
            f"snapshot payload has {data.size} values, expected {count}"
        )
    shape = (dim,) if header["kind"] == "pure" else (dim, dim)
    return QuantumState(
        kind=header["kind"],
        data=data.reshape(shape).astype(np.complex128),
        spin_dim=header["spin_dim"],
        field_dim=header["field_dim"],
        t=header["t"],
        lam=header["lambda"],
    )
