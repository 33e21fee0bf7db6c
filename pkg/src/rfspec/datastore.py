"""RFSS spectrum datasets, train/test splits and PGM rendering.

RFSS layout (all little-endian)::

    magic       4 bytes   b"RFSS"
    version     u32       1
    n_az        u32
    n_el        u32
    count       u32
    frequency   f64       Hz
    scene_hash  8 bytes
    count x { position 3 x f64, power n_az*n_el x f32 (azimuth-major) }
"""

from __future__ import annotations

import io
import math
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import (BadMagicError, DatasetFormatError, NonFiniteValueError, ShapeError,
                     TruncatedPayloadError, VersionMismatchError)

MAGIC = b"RFSS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIId8s")


@dataclass(frozen=True, eq=False)
class SpectrumDataset:
    positions: np.ndarray          # (n, 3) float64
    spectra: np.ndarray            # (n, n_az, n_el) float32
    frequency_hz: float
    scene_hash: bytes = bytes(8)
    version: int = VERSION

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype="<f8")
        spec = np.ascontiguousarray(self.spectra, dtype="<f4")
        if pos.ndim != 2 or pos.shape[1] != 3 or len(pos) < 1:
            raise ShapeError("positions must be a non-empty (n, 3) array")
        if spec.ndim != 3 or len(spec) != len(pos):
            raise ShapeError("spectra must be (n, n_az, n_el) with one entry per position")
        if len(self.scene_hash) != 8:
            raise ShapeError("scene hash must be 8 bytes")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "spectra", spec)
        object.__setattr__(self, "scene_hash", bytes(self.scene_hash))

    def __len__(self):
        return len(self.positions)

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.spectra.shape[1], self.spectra.shape[2]

    def __eq__(self, other):
        if not isinstance(other, SpectrumDataset):
            return NotImplemented
        return dumps(self) == dumps(other)


def _record_dtype(n_az, n_el):
    return np.dtype([("position", "<f8", (3,)), ("power", "<f4", (n_az * n_el,))])


def dumps(ds: SpectrumDataset) -> bytes:
    n_az, n_el = ds.grid_shape
    header = _HEADER.pack(MAGIC, ds.version, n_az, n_el, len(ds), float(ds.frequency_hz), ds.scene_hash)
    recs = np.empty(len(ds), dtype=_record_dtype(n_az, n_el))
    recs["position"] = ds.positions
    recs["power"] = ds.spectra.reshape(len(ds), -1)
    return header + recs.tobytes()


def loads(data: bytes) -> SpectrumDataset:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError("not an RFSS file (bad magic)")
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError("header is truncated")
    _, version, n_az, n_el, count, freq, digest = _HEADER.unpack_from(data)
    if version != VERSION:
        raise VersionMismatchError(f"unsupported RFSS version {version}")
    if count < 1:
        raise DatasetFormatError("dataset has no records")
    dtype = _record_dtype(n_az, n_el)
    body = memoryview(data)[_HEADER.size:]
    have = len(body) // dtype.itemsize
    if have < count:
        raise TruncatedPayloadError(f"payload truncated in record {have}", record_index=have)
    if len(body) != count * dtype.itemsize:
        raise DatasetFormatError("trailing bytes after the last record")
    recs = np.frombuffer(body, dtype=dtype, count=count)
    positions = recs["position"].copy()
    spectra = recs["power"].reshape(count, n_az, n_el).copy()
    if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(spectra)) and math.isfinite(freq)):
        raise NonFiniteValueError("dataset contains non-finite values")
    return SpectrumDataset(positions, spectra, freq, digest, version)


def write_atomic(path, payload: bytes) -> None:
    """Write ``payload`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_dataset(ds: SpectrumDataset, sink) -> None:
    """Serialise to a path (atomically) or to a binary file object."""
    payload = dumps(ds)
    if isinstance(sink, (str, os.PathLike)):
        write_atomic(sink, payload)
    else:
        sink.write(payload)


def load_dataset(source) -> SpectrumDataset:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return loads(bytes(source))
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return loads(fh.read())
    return loads(source.read())


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")


def split(ds_or_n, spec: SplitSpec = SplitSpec()) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle; the first ``floor(fraction * n)`` indices train, the rest test."""
    n = ds_or_n if isinstance(ds_or_n, int) else len(ds_or_n)
    perm = np.random.default_rng(spec.seed).permutation(n)
    k = math.floor(spec.train_fraction * n)
    return perm[:k], perm[k:]


def render_pgm(ss, gamma: float = 1.0) -> bytes:
    """16-bit binary PGM: 360 columns of azimuth by 90 rows of elevation (row 0 = 0 deg)."""
    ss = np.asarray(ss, dtype=float)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    peak = float(ss.max()) if ss.size else 0.0
    if peak > 0:
        pixels = np.floor(65535.0 * (ss / peak) ** gamma + 0.5)
    else:
        pixels = np.zeros_like(ss)
    img = pixels.T.astype(">u2")
    height, width = img.shape
    return f"P5\n{width} {height}\n65535\n".encode("ascii") + img.tobytes()


def read_pgm(data: bytes) -> np.ndarray:
    """Parse a P5 image written by :func:`render_pgm` back into a (height, width) array."""
    buf = io.BytesIO(data)
    fields = []
    while len(fields) < 4:
        line = buf.readline()
        if not line:
            raise DatasetFormatError("truncated PGM header")
        fields += line.split()
    if fields[0] != b"P5":
        raise BadMagicError("not a binary PGM")
    width, height, maxval = (int(x) for x in fields[1:4])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(buf.read(), dtype=dtype).reshape(height, width)
