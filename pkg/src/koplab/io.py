"""CSV reports and binary field snapshots."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import SizeMismatch
from .spectral import GridSpec, dft_forward

SNAPSHOT_MAGIC = "KOPLAB1"


def write_csv(path, schema, version, header, rows):
    """CSV whose first line is ``# schema: name,version``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: {schema},{version}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def read_csv(path):
    """Return (schema, version, header, rows) with rows as lists of strings."""
    with Path(path).open(newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema:"):
            raise ValueError(f"{path}: missing schema line")
        schema, version = first[len("# schema:"):].strip().split(",")
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return schema, version, header, rows


def write_snapshot(path, field, t):
    """Header line 'KOPLAB1 d n L kind t' then little-endian float64 samples."""
    grid = field.grid
    samples = np.fft.ifftn(field.coeffs, axes=grid.axes, norm="forward").real
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(f"{SNAPSHOT_MAGIC} {grid.d} {grid.n} {grid.L!r} {field.kind} {float(t)!r}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(samples, dtype="<f8").tobytes())
    return path


def read_snapshot(path):
    """Return (field, t)."""
    with Path(path).open("rb") as fh:
        header = fh.readline().decode("ascii").split()
        payload = fh.read()
    if len(header) != 6 or header[0] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a {SNAPSHOT_MAGIC} snapshot")
    d, n, L, kind, t = int(header[1]), int(header[2]), float(header[3]), header[4], float(header[5])
    grid = GridSpec(d, n, L)
    ncomp = {"scalar": 1, "vector": d, "tensor": d * d}[kind]
    data = np.frombuffer(payload, dtype="<f8")
    if data.size != ncomp * grid.size:
        raise SizeMismatch(f"{path}: expected {ncomp * grid.size} samples, found {data.size}")
    samples = data.reshape((ncomp,) + grid.shape)
    return dft_forward(samples, grid, kind), t


MANIFEST_COLUMNS = ("t", "file", "mean_q", "L2_q", "L2_u")


def write_trajectory(directory, traj, prefix="state"):
    """Snapshots of q and u for every recorded time plus a manifest CSV."""
    directory = Path(directory)
    rows = []
    for i, (t, st) in enumerate(zip(traj.times, traj.states)):
        qname = f"{prefix}_{i:05d}_q.bin"
        uname = f"{prefix}_{i:05d}_u.bin"
        write_snapshot(directory / qname, st.q, t)
        write_snapshot(directory / uname, st.u, t)
        rows.append((float(t), f"{qname};{uname}", float(st.q.mean()[0]), st.q.l2_norm(), st.u.l2_norm()))
    return write_csv(directory / f"{prefix}_manifest.csv", "trajectory_manifest", 1, MANIFEST_COLUMNS, rows)
