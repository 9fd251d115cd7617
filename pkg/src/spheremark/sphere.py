"""Unit-hypersphere message vectors and their cosine geometry.

Payload vectors live on the surface of the unit hypersphere S^(d-1),
stored as float64 arrays.  Uniform samples come from normalized
Gaussian draws, similarity is plain cosine, and vectors round-trip
through a little-endian binary form and a plain text form.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DimensionMismatchError, DomainError

DEFAULT_DIM = 256
NORM_TOL = 1e-9

# Binary layout: u32 little-endian component count, then that many
# little-endian float64 components.
_LEN_FMT = "<I"
_LEN_SIZE = struct.calcsize(_LEN_FMT)


@dataclass(frozen=True, eq=False)
class UnitVector:
    """A unit-norm float64 vector with at least two components."""

    components: np.ndarray

    def __post_init__(self):
        arr = np.array(self.components, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise DimensionError("components must be a flat sequence")
        if arr.size < 2:
            raise DimensionError(f"dimension {arr.size} < 2")
        if not np.all(np.isfinite(arr)):
            raise DomainError("components must be finite")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"norm {norm:.17g} deviates from 1 beyond {NORM_TOL}")
        arr.flags.writeable = False
        object.__setattr__(self, "components", arr)

    @property
    def dim(self) -> int:
        return int(self.components.size)

    def to_bytes(self) -> bytes:
        """Length-prefixed little-endian float64 serialization."""
        body = self.components.astype("<f8").tobytes()
        return struct.pack(_LEN_FMT, self.dim) + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "UnitVector":
        if len(data) < _LEN_SIZE:
            raise DomainError("truncated vector: missing length prefix")
        (n,) = struct.unpack_from(_LEN_FMT, data)
        expected = _LEN_SIZE + 8 * n
        if len(data) != expected:
            raise DomainError(f"vector payload is {len(data)} bytes, expected {expected}")
        arr = np.frombuffer(data, dtype="<f8", count=n, offset=_LEN_SIZE)
        return cls(arr.astype(np.float64))

    def to_text(self) -> str:
        """One component per line, 17 significant digits."""
        return "".join(format(float(x), ".17g") + "\n" for x in self.components)

    @classmethod
    def from_text(cls, text: str) -> "UnitVector":
        values = [float(line) for line in text.split("\n") if line.strip()]
        return cls(np.asarray(values, dtype=np.float64))


def unit(values: np.ndarray) -> UnitVector:
    """Normalize an arbitrary nonzero vector onto the sphere."""
    arr = np.asarray(values, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0 or not np.isfinite(norm):
        raise DomainError("cannot normalize a zero or non-finite vector")
    return UnitVector(arr / norm)


def sample_uniform(dim: int, rng: np.random.Generator) -> UnitVector:
    """Draw a vector uniformly from the surface of S^(dim-1).

    Parameters
    ----------
    dim : int
        Ambient dimension, at least 2.
    rng : numpy.random.Generator
        Source stream; consumed draws advance it.

    Returns
    -------
    UnitVector
        A normalized vector of ``dim`` independent Gaussian draws.
        Rotation invariance of the Gaussian makes the direction
        uniform on the sphere.  A zero-norm draw is resampled.
    """
    if dim < 2:
        raise DimensionError(f"dimension {dim} < 2")
    while True:
        g = rng.standard_normal(dim)
        norm = float(np.linalg.norm(g))
        if norm > 0.0:
            return UnitVector(g / norm)


def cosine(a: UnitVector, b: UnitVector) -> float:
    """Cosine similarity of two unit vectors, clamped to [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")
    dot = float(np.dot(a.components, b.components))
    return min(1.0, max(-1.0, dot))


def cosine_loss(a: UnitVector, b: UnitVector) -> float:
    """1 - cosine(a, b); zero iff the vectors coincide."""
    return 1.0 - cosine(a, b)
