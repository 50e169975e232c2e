"""Binary array formats and deterministic text/CSV writers.

Binary layouts (all little-endian):

* field file ``HWF1``: magic, uint32 m, uint32 N, uint32 is_complex,
  uint32 location (0 = interior nodes, 1 = edge midpoints), uint64 count,
  then ``count`` float64 or complex128 values.
* centers file ``HWC1``: magic, uint32 J, uint64 M, then M*J complex128
  head coordinates, row-major.
* Taylor archive ``HWT1``: magic, uint32 m, uint32 N, uint32 is_complex,
  uint64 count, then per record a uint32 byte length, the UTF-8
  multi-index string, and N^m values.
"""

from __future__ import annotations

import csv
import hashlib
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

from .errors import FormatError
from .multiidx import MultiIndex
from .pde import Grid

NODES, EDGES = 0, 1


def _dtype(is_complex: bool):
    return np.dtype("<c16") if is_complex else np.dtype("<f8")


def write_field(path, values: np.ndarray, grid: Grid, location: int = NODES) -> None:
    values = np.asarray(values)
    is_complex = bool(np.iscomplexobj(values))
    expected = grid.n_dofs if location == NODES else grid.n_edges
    if values.shape != (expected,):
        raise FormatError(f"expected {expected} values, got shape {values.shape}")
    with open(path, "wb") as fh:
        fh.write(b"HWF1")
        fh.write(struct.pack("<IIIIQ", grid.m, grid.N, int(is_complex), location, values.size))
        fh.write(values.astype(_dtype(is_complex)).tobytes())


def read_field(path) -> tuple[np.ndarray, Grid, int]:
    data = Path(path).read_bytes()
    if data[:4] != b"HWF1":
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    m, N, is_complex, location, count = struct.unpack_from("<IIIIQ", data, 4)
    offset = 4 + struct.calcsize("<IIIIQ")
    values = np.frombuffer(data, dtype=_dtype(bool(is_complex)), count=count, offset=offset).copy()
    return values, Grid(m, N), location


def write_centers(path, coords: np.ndarray) -> None:
    coords = np.atleast_2d(np.asarray(coords, dtype=complex))
    M, J = coords.shape
    with open(path, "wb") as fh:
        fh.write(b"HWC1")
        fh.write(struct.pack("<IQ", J, M))
        fh.write(coords.astype("<c16").tobytes())


def read_centers(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != b"HWC1":
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    J, M = struct.unpack_from("<IQ", data, 4)
    off = 4 + struct.calcsize("<IQ")
    return np.frombuffer(data, dtype="<c16", count=M * J, offset=off).reshape(M, J).copy()


def write_taylor_archive(path, coefficients: dict, grid: Grid) -> None:
    items = sorted(coefficients.items(), key=lambda kv: kv[0].sort_key())
    is_complex = any(np.iscomplexobj(v) for _, v in items)
    dt = _dtype(is_complex)
    with open(path, "wb") as fh:
        fh.write(b"HWT1")
        fh.write(struct.pack("<IIIQ", grid.m, grid.N, int(is_complex), len(items)))
        for nu, v in items:
            key = str(nu).encode()
            fh.write(struct.pack("<I", len(key)))
            fh.write(key)
            fh.write(np.asarray(v).astype(dt).tobytes())


def read_taylor_archive(path) -> tuple[dict, Grid]:
    data = Path(path).read_bytes()
    if data[:4] != b"HWT1":
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    m, N, is_complex, count = struct.unpack_from("<IIIQ", data, 4)
    grid = Grid(m, N)
    dt = _dtype(bool(is_complex))
    off = 4 + struct.calcsize("<IIIQ")
    out = {}
    for _ in range(count):
        (n,) = struct.unpack_from("<I", data, off)
        off += 4
        nu = MultiIndex.parse(data[off:off + n].decode())
        off += n
        out[nu] = np.frombuffer(data, dtype=dt, count=grid.n_dofs, offset=off).copy()
        off += grid.n_dofs * dt.itemsize
    return out, grid


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    return obj


def write_summary(path, data: dict) -> None:
    """Structured-text summary (YAML block style, keys in insertion order)."""
    with open(path, "w") as fh:
        yaml.safe_dump(_plain(data), fh, sort_keys=False, default_flow_style=False)


def read_summary(path) -> dict:
    with open(path) as fh:
        return yaml.safe_load(fh) or {}


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(root) -> Path:
    """``sha256  relative/path`` for every file under ``root`` except the manifest itself."""
    root = Path(root)
    lines = []
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.name != "manifest":
            lines.append(f"{sha256_file(p)}  {p.relative_to(root).as_posix()}")
    out = root / "manifest"
    out.write_text("\n".join(lines) + "\n")
    return out


def write_snapshots(path, params: np.ndarray, fields: np.ndarray, grid: Grid) -> None:
    """Snapshot archive ``HWS1``: magic, uint32 m, uint32 N, uint64 count,
    uint32 J, then count*J float64 parameters and count*N^m float64 fields."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    fields = np.atleast_2d(np.asarray(fields, dtype=float))
    with open(path, "wb") as fh:
        fh.write(b"HWS1")
        fh.write(struct.pack("<IIQI", grid.m, grid.N, fields.shape[0], params.shape[1]))
        fh.write(params.astype("<f8").tobytes())
        fh.write(fields.astype("<f8").tobytes())


def read_snapshots(path) -> tuple[np.ndarray, np.ndarray, Grid]:
    data = Path(path).read_bytes()
    if data[:4] != b"HWS1":
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    m, N, count, J = struct.unpack_from("<IIQI", data, 4)
    grid = Grid(m, N)
    off = 4 + struct.calcsize("<IIQI")
    params = np.frombuffer(data, dtype="<f8", count=count * J, offset=off).reshape(count, J).copy()
    off += count * J * 8
    fields = np.frombuffer(data, dtype="<f8", count=count * grid.n_dofs, offset=off).reshape(count, grid.n_dofs).copy()
    return params, fields, grid
