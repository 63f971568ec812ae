"""Snapshot file formats: a small self-describing binary plus CSV.

Binary layout ("SDM1"): 4 magic bytes, little-endian u64 N, u64 M,
f64 t0, f64 dt, then N*M f64 values in column-major order. The CSV
alternative starts with a header row ``# N,M,t0,dt`` and stores one
snapshot per column. Floats round-trip exactly in both directions
(CSV uses shortest round-trip decimal representations).
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .dynamics import EXTERNAL, TrajectoryMatrix
from .errors import SnapshotFormatError

MAGIC = b"SDM1"
_HEADER = struct.Struct("<4sQQdd")

# Refuse to allocate for headers promising more than ~2 GiB of payload.
_MAX_ENTRIES = 1 << 28


def atomic_write_bytes(path, payload: bytes):
    """Write a file via a temp sibling and rename, so readers never see
    a half-written artifact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_snapshots(traj: TrajectoryMatrix, path):
    """Write the binary snapshot format."""
    n, m = traj.states.shape
    header = _HEADER.pack(MAGIC, n, m, traj.t0, traj.dt_sample)
    payload = header + np.asfortranarray(traj.states).tobytes(order="F")
    atomic_write_bytes(path, payload)


def read_snapshots(path, dt_sample=None, t0=None) -> TrajectoryMatrix:
    """Read the binary snapshot format.

    ``dt_sample`` and ``t0`` override the stored metadata when given.
    Parse failures raise SnapshotFormatError naming the byte offset.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(
            f"file too short for a header ({len(raw)} bytes)", offset=len(raw)
        )
    magic, n, m, file_t0, file_dt = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise SnapshotFormatError(
            f"bad magic {magic!r}, expected {MAGIC!r}", offset=0
        )
    if n < 1 or m < 2:
        raise SnapshotFormatError(
            f"header declares N={n}, M={m}; need N >= 1 and M >= 2", offset=4
        )
    if n * m > _MAX_ENTRIES:
        raise SnapshotFormatError(
            f"header declares {n * m} entries, refusing to allocate", offset=4
        )
    expected = _HEADER.size + 8 * n * m
    if len(raw) < expected:
        raise SnapshotFormatError(
            f"truncated payload: expected {expected} bytes, file ends early",
            offset=len(raw),
        )
    if len(raw) > expected:
        raise SnapshotFormatError(
            f"{len(raw) - expected} trailing bytes after the payload",
            offset=expected,
        )
    flat = np.frombuffer(raw, dtype="<f8", count=n * m, offset=_HEADER.size)
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise SnapshotFormatError(
            "non-finite value in payload", offset=_HEADER.size + 8 * int(bad[0])
        )
    states = flat.reshape((n, m), order="F").copy()
    dt = file_dt if dt_sample is None else dt_sample
    start = file_t0 if t0 is None else t0
    if not np.isfinite(dt) or dt <= 0.0:
        raise SnapshotFormatError(f"invalid sampling interval {dt}", offset=20)
    if not np.isfinite(start):
        raise SnapshotFormatError(f"invalid start time {start}", offset=28)
    return TrajectoryMatrix(states, float(start), float(dt), EXTERNAL)


def write_snapshots_csv(traj: TrajectoryMatrix, path):
    """Write the CSV alternative (header row, one snapshot per column)."""
    n, m = traj.states.shape
    lines = [f"# {n},{m},{traj.t0!r},{traj.dt_sample!r}"]
    for i in range(n):
        lines.append(",".join(repr(float(v)) for v in traj.states[i, :]))
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def read_snapshots_csv(path, dt_sample=None, t0=None) -> TrajectoryMatrix:
    """Read the CSV alternative; errors name the offending line number."""
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].lstrip().startswith("#"):
        raise SnapshotFormatError("missing '# N,M,t0,dt' header row", offset=1)
    fields = lines[0].lstrip().lstrip("#").split(",")
    if len(fields) != 4:
        raise SnapshotFormatError(
            f"header has {len(fields)} fields, expected 4 (N,M,t0,dt)", offset=1
        )
    try:
        n, m = int(fields[0]), int(fields[1])
        file_t0, file_dt = float(fields[2]), float(fields[3])
    except ValueError as exc:
        raise SnapshotFormatError(f"unparseable header: {exc}", offset=1) from exc
    if len(lines) - 1 != n:
        raise SnapshotFormatError(
            f"expected {n} data rows, found {len(lines) - 1}", offset=len(lines)
        )
    states = np.empty((n, m))
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != m:
            raise SnapshotFormatError(
                f"row has {len(parts)} values, expected {m}", offset=i
            )
        try:
            states[i - 2, :] = [float(p) for p in parts]
        except ValueError as exc:
            raise SnapshotFormatError(f"unparseable value: {exc}", offset=i) from exc
        if not np.all(np.isfinite(states[i - 2, :])):
            raise SnapshotFormatError("non-finite value in row", offset=i)
    dt = file_dt if dt_sample is None else dt_sample
    start = file_t0 if t0 is None else t0
    if not np.isfinite(dt) or dt <= 0.0:
        raise SnapshotFormatError(f"invalid sampling interval {dt}", offset=1)
    return TrajectoryMatrix(states, float(start), float(dt), EXTERNAL)


def is_csv_path(path) -> bool:
    return Path(path).suffix.lower() == ".csv"


def save_trajectory(traj: TrajectoryMatrix, path):
    """Write binary or CSV depending on the file extension."""
    if is_csv_path(path):
        write_snapshots_csv(traj, path)
    else:
        write_snapshots(traj, path)


def ingest_snapshots(path, dt_sample=None, t0=None) -> TrajectoryMatrix:
    """Read a snapshot file, sniffing the format from its content.

    Binary files are recognized by their magic bytes; anything else is
    parsed as CSV. Optional ``dt_sample``/``t0`` override the stored
    metadata (e.g. for files produced by other tools).
    """
    path = Path(path)
    if not path.exists():
        raise SnapshotFormatError(f"no such file: {path}")
    with open(path, "rb") as handle:
        head = handle.read(4)
    if head == MAGIC:
        return read_snapshots(path, dt_sample=dt_sample, t0=t0)
    return read_snapshots_csv(path, dt_sample=dt_sample, t0=t0)
