"""Versioned binary snapshot files.

Layout (all integers and floats little-endian):

========  ======================================================
offset    field
========  ======================================================
0         magic ``b"MLDASNAP"`` (8 bytes)
8         format version, u32 (currently 1)
12        task kind, u32 (0 binary, 1 multiclass, 2 multilabel,
          3 regression)
16        K, u32
20        V, u32
24        L, u32
28        seed, i64
36        burn-in iterations, u32
40        hyperparameters, 6 x f64: alpha_k, beta_t, nu2, c,
          ell, epsilon
88        body: topic matrix, K*V f64 row-major, followed by the
          classifier matrix, L*K f64 row-major
88+8KV    (continued)
end-8     checksum, 8 bytes: BLAKE2b-64 digest of the body
========  ======================================================

Numeric fields round-trip bitwise; the fixed layout makes files
portable across platforms.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct

import numpy as np

from .predict import ModelSnapshot
from .topic_state import Hyperparams

__all__ = [
    "SnapshotFormatError",
    "save_snapshot",
    "load_snapshot",
    "save_one_vs_all",
    "load_one_vs_all",
]

MAGIC = b"MLDASNAP"
VERSION = 1
_HEADER = struct.Struct("<IIIIIqI6d")
_TASK_CODES = {"binary": 0, "multiclass": 1, "multilabel": 2, "regression": 3}
_TASK_NAMES = {v: k for k, v in _TASK_CODES.items()}


class SnapshotFormatError(ValueError):
    """Raised for unreadable, corrupt, or wrong-version snapshot files."""


def _checksum(body: bytes) -> bytes:
    return hashlib.blake2b(body, digest_size=8).digest()


def save_snapshot(snapshot: ModelSnapshot, path: str) -> None:
    h = snapshot.hyper
    header = MAGIC + _HEADER.pack(
        VERSION,
        _TASK_CODES[snapshot.task_kind],
        snapshot.K,
        snapshot.V,
        snapshot.L,
        snapshot.seed,
        snapshot.burn_in,
        h.alpha_k,
        h.beta_t,
        h.nu2,
        h.c,
        h.ell,
        h.epsilon,
    )
    body = (
        np.ascontiguousarray(snapshot.phi_hat, dtype="<f8").tobytes()
        + np.ascontiguousarray(snapshot.etas, dtype="<f8").tobytes()
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)
        fh.write(_checksum(body))


def load_snapshot(path: str) -> ModelSnapshot:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + _HEADER.size + 8:
        raise SnapshotFormatError("truncated snapshot file")
    if blob[: len(MAGIC)] != MAGIC:
        raise SnapshotFormatError("not a snapshot file (bad magic bytes)")
    fields = _HEADER.unpack_from(blob, len(MAGIC))
    version, task_code, k, v, n_tasks, seed, burn_in = fields[:7]
    if version != VERSION:
        raise SnapshotFormatError(
            f"unsupported snapshot version {version} (this reader handles {VERSION})"
        )
    if task_code not in _TASK_NAMES:
        raise SnapshotFormatError(f"unknown task code {task_code}")
    alpha_k, beta_t, nu2, c, ell, epsilon = fields[7:]
    body_start = len(MAGIC) + _HEADER.size
    body_len = 8 * (k * v + n_tasks * k)
    if len(blob) != body_start + body_len + 8:
        raise SnapshotFormatError("truncated snapshot file")
    body = blob[body_start : body_start + body_len]
    if _checksum(body) != blob[-8:]:
        raise SnapshotFormatError("checksum mismatch: snapshot body is corrupt")
    phi = np.frombuffer(body[: 8 * k * v], dtype="<f8").reshape(k, v).copy()
    etas = np.frombuffer(body[8 * k * v :], dtype="<f8").reshape(n_tasks, k).copy()
    hyper = Hyperparams(
        K=k, alpha_k=alpha_k, beta_t=beta_t, nu2=nu2, c=c, ell=ell, epsilon=epsilon
    )
    return ModelSnapshot(
        phi_hat=phi,
        etas=etas,
        hyper=hyper,
        task_kind=_TASK_NAMES[task_code],
        seed=seed,
        burn_in=burn_in,
    )


def save_one_vs_all(snapshots, path: str) -> None:
    """Write one snapshot file per task plus a JSON manifest at ``path``."""
    files = []
    for i, snap in enumerate(snapshots):
        task_path = f"{path}.task{i}"
        save_snapshot(snap, task_path)
        files.append(os.path.basename(task_path))
    manifest = {"format": "marginlda-ova", "version": 1, "L": len(files), "files": files}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=0)
        fh.write("\n")


def load_one_vs_all(path: str) -> list[ModelSnapshot]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotFormatError(f"not a one-vs-all manifest: {exc}") from None
    if manifest.get("format") != "marginlda-ova" or manifest.get("version") != 1:
        raise SnapshotFormatError("unknown manifest format or version")
    base = os.path.dirname(os.path.abspath(path))
    return [load_snapshot(os.path.join(base, name)) for name in manifest["files"]]


def is_ova_manifest(path: str) -> bool:
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    return head != MAGIC
