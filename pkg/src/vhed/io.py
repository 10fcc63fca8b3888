"""Binary array files, PGM images and CSV export.

ArrayFile layout (little-endian)::

    b"VHED"  u16 version  u8 dtype tag  u8 rank
    rank x (u64 length, f64 min, f64 max, u16 name length, name utf-8)
    u32 metadata length, metadata JSON (utf-8)
    payload, row-major

The metadata always carries the transform convention id and the
calibration constant; :func:`read_array` checks them when asked.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import FT_CONVENTION

MAGIC = b"VHED"
VERSION = 1
DTYPES = {1: np.dtype("<c16"), 2: np.dtype("<f8")}
TAGS = {v: k for k, v in DTYPES.items()}


class ArrayFileError(Exception):
    pass


class FormatError(ArrayFileError):
    pass


class VersionError(ArrayFileError):
    pass


class TruncatedError(ArrayFileError):
    pass


class DTypeError(ArrayFileError):
    pass


class ConventionError(ArrayFileError):
    pass


@dataclass
class Axis:
    name: str
    min: float
    max: float


@dataclass
class ArrayFile:
    data: np.ndarray
    axes: list[Axis]
    metadata: dict = field(default_factory=dict)


def _axes_for(data: np.ndarray, axes) -> list[Axis]:
    if axes is None:
        return [Axis(f"axis{i}", 0.0, float(n - 1)) for i, n in enumerate(data.shape)]
    out = [a if isinstance(a, Axis) else Axis(a[0], float(a[1]), float(a[2])) for a in axes]
    if len(out) != data.ndim:
        raise ValueError(f"{len(out)} axes given for rank-{data.ndim} data")
    return out


def write_array(path, data: np.ndarray, axes=None, metadata: dict | None = None,
                calibration: complex | None = None) -> Path:
    """Write ``data`` (complex128 or float64) with axis descriptions and metadata."""
    data = np.asarray(data)
    if data.dtype.kind == "c":
        data = data.astype("<c16")
    elif data.dtype.kind in "fiu":
        data = data.astype("<f8")
    else:
        raise DTypeError(f"unsupported dtype {data.dtype}")
    axes = _axes_for(data, axes)
    meta = dict(metadata or {})
    meta.setdefault("ft_convention", FT_CONVENTION)
    if calibration is not None:
        c = complex(calibration)
        meta["calibration"] = [c.real, c.imag]
    meta.setdefault("calibration", None)
    buf = bytearray(MAGIC)
    buf += struct.pack("<HBB", VERSION, TAGS[data.dtype], data.ndim)
    for n, ax in zip(data.shape, axes):
        name = ax.name.encode()
        buf += struct.pack("<QddH", n, ax.min, ax.max, len(name)) + name
    blob = json.dumps(meta, sort_keys=True).encode()
    buf += struct.pack("<I", len(blob)) + blob
    buf += np.ascontiguousarray(data).tobytes()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(bytes(buf))
    return path


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise TruncatedError(f"file ends at byte {len(self.raw)}, needed {self.pos + n}")
        out = self.raw[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_array(path, expect_dtype=None, expect_calibration: complex | None = None) -> ArrayFile:
    """Read an ArrayFile; distinct errors for bad magic, version, dtype, truncation
    and convention mismatch."""
    r = _Reader(Path(path).read_bytes())
    if len(r.raw) < 4 or r.raw[:4] != MAGIC:
        raise FormatError(f"{path}: not a VHED array file")
    r.take(4)
    version, tag, rank = r.unpack("<HBB")
    if version != VERSION:
        raise VersionError(f"{path}: version {version}, reader supports {VERSION}")
    if tag not in DTYPES:
        raise DTypeError(f"{path}: unknown dtype tag {tag}")
    dtype = DTYPES[tag]
    if expect_dtype is not None and np.dtype(expect_dtype) != dtype:
        raise DTypeError(f"{path}: holds {dtype}, expected {np.dtype(expect_dtype)}")
    shape, axes = [], []
    for _ in range(rank):
        n, lo, hi, ln = r.unpack("<QddH")
        axes.append(Axis(r.take(ln).decode(), lo, hi))
        shape.append(n)
    (ln,) = r.unpack("<I")
    try:
        meta = json.loads(r.take(ln).decode())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: corrupt metadata") from exc
    if meta.get("ft_convention") != FT_CONVENTION:
        raise ConventionError(f"{path}: transform convention {meta.get('ft_convention')!r}")
    if expect_calibration is not None:
        stored = meta.get("calibration")
        if stored is None or complex(*stored) != complex(expect_calibration):
            raise ConventionError(f"{path}: calibration {stored} != {expect_calibration}")
    count = int(np.prod(shape)) if shape else 1
    payload = r.take(count * dtype.itemsize)
    if r.pos != len(r.raw):
        raise FormatError(f"{path}: {len(r.raw) - r.pos} trailing bytes")
    data = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    return ArrayFile(data, axes, meta)


RENDERS = ("real", "abs", "imag")


def _render(values: np.ndarray, render: str) -> np.ndarray:
    if render == "real":
        return np.real(values)
    if render == "abs":
        return np.abs(values)
    if render == "imag":
        return np.imag(values)
    raise ValueError(f"render must be one of {RENDERS}")


def to_gray(values: np.ndarray, render: str = "real", value_range=None) -> tuple[np.ndarray, tuple]:
    """Map a 2-D array linearly to uint8; ``value_range=None`` uses min/max."""
    v = _render(np.asarray(values), render).astype(float)
    if value_range is None:
        lo, hi = float(v.min()), float(v.max())
    else:
        lo, hi = map(float, value_range)
    if hi > lo:
        g = np.clip((v - lo) / (hi - lo), 0.0, 1.0) * 255.0
    else:
        g = np.zeros_like(v)
    return np.round(g).astype(np.uint8), (lo, hi)


def export_image(values: np.ndarray, path, render: str = "real", value_range=None,
                 flip_rows: bool = True) -> Path:
    """Write a binary PGM (P5) and a ``.range`` sidecar with the mapped interval.

    Rows are flipped by default so that ``y`` increases upwards in the image.
    """
    gray, (lo, hi) = to_gray(values, render, value_range)
    if gray.ndim != 2:
        raise ValueError("export_image expects 2-D data")
    if flip_rows:
        gray = gray[::-1]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"P5\n{gray.shape[1]} {gray.shape[0]}\n255\n".encode()
    path.write_bytes(header + gray.tobytes())
    path.with_suffix(path.suffix + ".range").write_text(
        f"render={render}\nmin={lo!r}\nmax={hi!r}\n")
    return path


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def export_csv(path, columns: dict) -> Path:
    """Long-format CSV: header from ``columns`` keys, one row per sample.

    Complex columns are split into ``name_re`` and ``name_im``.
    """
    names, cols = [], []
    for name, c in columns.items():
        c = np.asarray(c).ravel()
        if np.iscomplexobj(c):
            names += [f"{name}_re", f"{name}_im"]
            cols += [c.real, c.imag]
        else:
            names.append(name)
            cols.append(c)
    n = {len(c) for c in cols}
    if len(n) != 1:
        raise ValueError("CSV columns differ in length")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def sinogram_columns(sino) -> dict:
    tt, pp = np.meshgrid(sino.t, sino.phi, indexing="ij")
    return {"t": tt, "phi": pp, "value": sino.values}


def field_columns(field) -> dict:
    z = field.grid.z
    return {"x": z.real, "y": z.imag, "value": field.values}
