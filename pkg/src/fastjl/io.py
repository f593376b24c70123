"""Binary and CSV file formats.

FJLM point set (all little-endian)::

    offset  size  field
    0       4     magic b"FJLM"
    4       4     u32 rows (N)
    8       4     u32 cols (p)
    12      4     u32 flags (0: float64 entries; no other value is defined)
    16      8*N*p entries, column-major float64

FJL1 composed transform (all little-endian)::

    0       4     magic b"FJL1"
    4       2     u16 format version (1)
    6       2     u16 length L of the RNG scheme tag
    8       8     u64 seed
    16      8     u64 N_input
    24      8     u64 N_pad
    32      8     u64 n
    40      8     u64 m
    48      L     scheme tag, ASCII
    ..      N_pad int8 xi
    ..      8*n   u64 rows
    ..      m*n   int8 signs of G, column-major

Next to ``path`` the writer puts ``path + ".json"`` holding the dimension plan,
seed and scheme, so a run can be reproduced from the seed and checked against
the stored arrays.

CSV files hold the matrix as laid out in memory: N lines of p comma-separated
values.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from . import rng as _rng
from .errors import DimensionError, FastJLError
from .transforms import ComposedTransform, DenseSignMatrix, DimensionPlan, HadamardStage

POINTSET_MAGIC = b"FJLM"
TRANSFORM_MAGIC = b"FJL1"
FORMAT_VERSION = 1
_POINTSET_HEADER = struct.Struct("<4sIII")
_TRANSFORM_HEADER = struct.Struct("<4sHHQQQQQ")


class FormatError(FastJLError, ValueError):
    """A file does not follow the expected binary layout."""


def write_pointset(path, E) -> None:
    E = np.asarray(E, dtype=np.float64)
    if E.ndim == 1:
        E = E[:, None]
    if E.ndim != 2:
        raise DimensionError("a point set is a 2-D matrix")
    rows, cols = E.shape
    with open(path, "wb") as fh:
        fh.write(_POINTSET_HEADER.pack(POINTSET_MAGIC, rows, cols, 0))
        fh.write(E.astype("<f8").tobytes(order="F"))


def read_pointset(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _POINTSET_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, rows, cols, flags = _POINTSET_HEADER.unpack_from(data)
    if magic != POINTSET_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if flags != 0:
        raise FormatError(f"{path}: unsupported flags {flags}")
    body = data[_POINTSET_HEADER.size:]
    if len(body) != 8 * rows * cols:
        raise FormatError(f"{path}: expected {rows}x{cols} float64 entries")
    return np.frombuffer(body, dtype="<f8").reshape((rows, cols), order="F").astype(np.float64)


def write_csv(path, E) -> None:
    E = np.asarray(E, dtype=np.float64)
    if E.ndim == 1:
        E = E[:, None]
    np.savetxt(path, E, delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)


def load_matrix(path) -> np.ndarray:
    """Read a point set, choosing the format from the file extension."""
    return read_csv(path) if str(path).lower().endswith(".csv") else read_pointset(path)


def save_matrix(path, E) -> None:
    if str(path).lower().endswith(".csv"):
        write_csv(path, E)
    else:
        write_pointset(path, E)


def save_transform(path, T: ComposedTransform) -> None:
    scheme = _rng.SCHEME.encode("ascii")
    header = _TRANSFORM_HEADER.pack(TRANSFORM_MAGIC, FORMAT_VERSION, len(scheme), T.seed,
                                    T.N_input, T.N_pad, T.n, T.m)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(scheme)
        fh.write(T.xi.astype(np.int8).tobytes())
        fh.write(T.rows.astype("<u8").tobytes())
        fh.write(T.G.signs.astype(np.int8).tobytes(order="F"))
    sidecar = {"plan": T.plan.to_dict(), "seed": T.seed, "scheme": _rng.SCHEME}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_transform(path) -> ComposedTransform:
    data = Path(path).read_bytes()
    if len(data) < _TRANSFORM_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, tag_len, seed, N_input, N_pad, n, m = _TRANSFORM_HEADER.unpack_from(data)
    if magic != TRANSFORM_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    off = _TRANSFORM_HEADER.size
    scheme = data[off:off + tag_len].decode("ascii")
    off += tag_len
    expected = off + N_pad + 8 * n + m * n
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    xi = np.frombuffer(data, dtype=np.int8, count=N_pad, offset=off).copy()
    off += N_pad
    rows = np.frombuffer(data, dtype="<u8", count=n, offset=off).astype(np.int64)
    off += 8 * n
    signs = np.frombuffer(data, dtype=np.int8, count=m * n, offset=off).reshape((m, n), order="F").copy()
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    plan = DimensionPlan.from_dict(sidecar["plan"])
    if (plan.m, plan.n, plan.N, plan.N_pad) != (m, n, N_input, N_pad):
        raise FormatError(f"{path}: sidecar plan does not match the binary dimensions")
    if scheme != sidecar.get("scheme", scheme):
        raise FormatError(f"{path}: scheme tag mismatch")
    return ComposedTransform(plan, int(seed), HadamardStage(int(N_input), xi, rows), DenseSignMatrix(signs))
