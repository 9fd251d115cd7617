"""Secret-keyed uniformly random rotations of the payload sphere.

A 64-bit secret seed deterministically selects a rotation matrix
drawn from the uniform (Haar) distribution on SO(d).  Construction:

1. fill a d x d matrix with standard Gaussian entries from the
   key-derived stream (Ginibre ensemble),
2. factor it as Q R by Householder QR,
3. rescale column j of Q by sign(R[j, j]) (sign(0) counts as +1) so
   the factorization is the unique one with positive diagonal --
   without this step the QR convention biases the distribution,
4. if det is -1, negate the first column to land in SO(d).

The same seed yields different but deterministic matrices at
different dimensions because the stream is derived from (seed, dim).
"""
from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionError, DimensionMismatchError, DomainError,
                     KeyFileError)
from .sphere import UnitVector, unit
from .streams import stream

MAX_SEED = 2**64 - 1

# Validation tolerances for sampled matrices (d <= 512).
ORTHO_TOL = 1e-10
DET_TOL = 1e-8


@dataclass(frozen=True)
class SecretKey:
    """Watermarking secret: a 64-bit seed plus an optional label."""

    seed: int
    label: str | None = None

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise KeyFileError("key seed must be an integer")
        if not 0 <= self.seed <= MAX_SEED:
            raise KeyFileError(f"key seed {self.seed} outside [0, 2^64)")


def save_key(key: SecretKey, path: str) -> None:
    payload = {"seed": key.seed, "label": key.label}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_key(path: str) -> SecretKey:
    """Read a key file; a missing or malformed seed field is refused."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise KeyFileError(f"cannot read key file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise KeyFileError(f"key file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "seed" not in payload:
        raise KeyFileError(f"key file {path} lacks a seed field")
    label = payload.get("label")
    if label is not None and not isinstance(label, str):
        raise KeyFileError(f"key file {path} has a non-text label")
    seed = payload["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise KeyFileError(f"key file {path} has a non-integer seed")
    return SecretKey(seed=seed, label=label)


@dataclass(frozen=True, eq=False)
class RotationMatrix:
    """A member of SO(d), stored as a read-only float64 matrix."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"rotation matrix must be square, got {arr.shape}")
        if arr.shape[0] < 1:
            raise DimensionError("rotation matrix needs dimension >= 1")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def validate(self) -> None:
        """Check orthonormality and unit determinant; raise on failure."""
        q = self.entries
        resid = float(np.max(np.abs(q.T @ q - np.eye(self.dim))))
        if resid > ORTHO_TOL:
            raise ValueError(f"orthogonality residual {resid:.3e} exceeds {ORTHO_TOL}")
        det = float(np.linalg.det(q))
        if abs(det - 1.0) > DET_TOL:
            raise ValueError(f"determinant {det:.17g} deviates from +1 beyond {DET_TOL}")


def sample_rotation(key: SecretKey, dim: int, haar_fix: bool = True) -> RotationMatrix:
    """Draw the rotation selected by (key, dim) from Haar measure on SO(d).

    ``haar_fix=False`` skips construction step 3 (the R-diagonal sign
    rescale) and exists only to demonstrate that the raw QR output is
    not Haar distributed; production callers never pass it.
    """
    if dim < 1:
        raise DimensionError(f"rotation dimension {dim} < 1")
    rng = stream(key.seed, dim)
    while True:
        gauss = rng.standard_normal((dim, dim))
        try:
            q, r = np.linalg.qr(gauss)
        except np.linalg.LinAlgError:
            # Factorization failure: draw a fresh matrix from the
            # continued stream rather than erroring out.
            continue
        break
    if haar_fix:
        signs = np.sign(np.diag(r))
        signs[signs == 0.0] = 1.0
        q = q * signs  # rescales column j by signs[j]
    if float(np.linalg.det(q)) < 0.0:
        q = q.copy()
        q[:, 0] = -q[:, 0]
    return RotationMatrix(q)


def rotate(m: RotationMatrix, v: UnitVector) -> UnitVector:
    """Apply the rotation; renormalizes to absorb float drift."""
    if m.dim != v.dim:
        raise DimensionMismatchError(f"matrix dim {m.dim} != vector dim {v.dim}")
    return unit(m.entries @ v.components)


def unrotate(m: RotationMatrix, v: UnitVector) -> UnitVector:
    """Apply the inverse rotation (transpose, since m is orthogonal)."""
    if m.dim != v.dim:
        raise DimensionMismatchError(f"matrix dim {m.dim} != vector dim {v.dim}")
    return unit(m.entries.T @ v.components)


@dataclass(frozen=True)
class GenerationTiming:
    """Wall-clock cost of sampling rotations at one (dim, batch) point."""

    dim: int
    batch: int
    repeats: int
    per_run_ms: tuple[float, ...]  # per-matrix milliseconds, one entry per run

    @property
    def median_ms(self) -> float:
        return float(statistics.median(self.per_run_ms))


def benchmark_generation(dim: int, batch: int = 1, repeats: int = 10,
                         warmup: int = 2) -> GenerationTiming:
    """Time sample_rotation; returns median per-matrix milliseconds.

    Runs ``warmup`` untimed batches first, then ``repeats`` timed runs
    of ``batch`` matrices each with distinct keys.
    """
    if dim < 1:
        raise DimensionError(f"rotation dimension {dim} < 1")
    if batch < 1 or repeats < 1:
        raise DomainError("batch and repeats must both be >= 1")
    for i in range(warmup * batch):
        sample_rotation(SecretKey(seed=i), dim)
    per_run = []
    for r in range(repeats):
        keys = [SecretKey(seed=(r + 1) * batch + j) for j in range(batch)]
        t0 = time.perf_counter()
        for k in keys:
            sample_rotation(k, dim)
        elapsed = time.perf_counter() - t0
        per_run.append(elapsed * 1000.0 / batch)
    return GenerationTiming(dim=dim, batch=batch, repeats=repeats,
                            per_run_ms=tuple(per_run))
