"""Message bytes <-> sphere vector codecs.

The codec seam is a small abstract class so that any encoder/decoder
pair mapping byte messages onto unit vectors can plug into the
channel, the confidence scorer and the CLI.  The shipped reference
codec is pure sign modulation: bit i (most significant bit first)
becomes component (2*b_i - 1)/sqrt(d).  It is deterministic and
exactly idempotent, which makes it the ground-truth backend for
calibrating everything downstream.

Padding convention: messages shorter than capacity are zero-padded,
and decode strips trailing zero bytes.  Messages therefore must not
end in a NUL byte themselves; front ends reject those.
"""
from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityExceededError, DimensionError, DomainError
from .sphere import UnitVector

# Guard against float artifacts in tokens*bits_per_token products,
# e.g. 30*15.6 evaluating to 468.00000000000006.
_CEIL_EPS = 1e-9


@dataclass(frozen=True)
class Message:
    """An octet-string payload."""

    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, bytes):
            object.__setattr__(self, "data", bytes(self.data))

    @classmethod
    def from_text(cls, text: str) -> "Message":
        return cls(text.encode("utf-8"))

    @property
    def text(self) -> str | None:
        """UTF-8 view of the payload, or None when it does not decode."""
        try:
            return self.data.decode("utf-8")
        except UnicodeDecodeError:
            return None


@dataclass(frozen=True)
class CodecDescriptor:
    name: str
    dim: int
    capacity_bits: int
    deterministic: bool

    def __post_init__(self):
        if self.dim < 2:
            raise DimensionError(f"codec dimension {self.dim} < 2")
        if not 0 < self.capacity_bits <= self.dim:
            raise DimensionError(
                f"capacity {self.capacity_bits} bits outside (0, dim={self.dim}]")

    @property
    def capacity_bytes(self) -> int:
        return self.capacity_bits // 8


class Codec(abc.ABC):
    """Interface any message<->vector codec must satisfy."""

    descriptor: CodecDescriptor

    @abc.abstractmethod
    def encode(self, message: Message) -> UnitVector:
        """Map a message within capacity onto a unit vector."""

    @abc.abstractmethod
    def decode(self, v: UnitVector) -> Message:
        """Total inverse map; never errors on a valid unit vector."""


class SignCodec(Codec):
    """Reference codec: one bit per component, sign modulated."""

    def __init__(self, dim: int = 256):
        self.descriptor = CodecDescriptor(
            name="sign", dim=dim, capacity_bits=dim, deterministic=True)
        self._scale = 1.0 / math.sqrt(dim)

    def encode(self, message: Message) -> UnitVector:
        cap_bytes = self.descriptor.capacity_bytes
        if len(message.data) > cap_bytes:
            raise CapacityExceededError(
                f"message of {len(message.data)} bytes exceeds capacity of "
                f"{self.descriptor.capacity_bits} bits ({cap_bytes} bytes)",
                capacity_bits=self.descriptor.capacity_bits)
        padded = message.data.ljust(cap_bytes, b"\x00")
        bits = np.unpackbits(np.frombuffer(padded, dtype=np.uint8))
        if bits.size < self.descriptor.dim:  # dim not divisible by 8
            bits = np.concatenate([bits, np.zeros(self.descriptor.dim - bits.size,
                                                  dtype=np.uint8)])
        components = (2.0 * bits.astype(np.float64) - 1.0) * self._scale
        return UnitVector(components)

    def decode(self, v: UnitVector) -> Message:
        if v.dim != self.descriptor.dim:
            raise DimensionError(f"vector dim {v.dim} != codec dim {self.descriptor.dim}")
        bits = (v.components > 0.0).astype(np.uint8)  # exact zero decodes as 0
        usable = 8 * self.descriptor.capacity_bytes
        raw = np.packbits(bits[:usable]).tobytes()
        return Message(raw.rstrip(b"\x00"))


_CODECS = {"sign": SignCodec}


def get_codec(name: str, dim: int) -> Codec:
    """Look up a registered codec by name."""
    try:
        factory = _CODECS[name]
    except KeyError:
        raise DomainError(
            f"unknown codec {name!r}; registered: {sorted(_CODECS)}") from None
    return factory(dim)


def idempotence_check(codec: Codec, v: UnitVector) -> tuple[bool, UnitVector, Message]:
    """Does decode(encode(decode(v))) reproduce decode(v) byte-exactly?

    Returns (passes, encode(decoded), decoded).  Always true for the
    reference codec; lossy codecs may fail, and the confidence layer
    treats failure as an immediate rejection.
    """
    decoded = codec.decode(v)
    try:
        reencoded = codec.encode(decoded)
    except CapacityExceededError:
        # a decode that grew past capacity can never re-encode; that is
        # a failure, not an error, so hand back the input vector
        return False, v, decoded
    again = codec.decode(reencoded)
    return again.data == decoded.data, reencoded, decoded


@dataclass(frozen=True)
class CapacityReport:
    raw_bits: int
    codec_bits: int
    fits: bool


def capacity_report(codec: Codec, tokens_per_message: int,
                    bits_per_token: float) -> CapacityReport:
    """Compare a token-stream payload size against codec capacity."""
    if tokens_per_message <= 0 or bits_per_token <= 0:
        raise DomainError("tokens_per_message and bits_per_token must be positive")
    raw_bits = math.ceil(tokens_per_message * bits_per_token - _CEIL_EPS)
    codec_bits = codec.descriptor.capacity_bits
    return CapacityReport(raw_bits=raw_bits, codec_bits=codec_bits,
                          fits=raw_bits <= codec_bits)
