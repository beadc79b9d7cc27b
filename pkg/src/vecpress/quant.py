"""Precision-reduction codecs: float16, per-dimension scalar int8, and binary
sign quantization, with exact byte accounting and a binary container format.

All rounding is round-half-to-even. Binary packs sign bits little-endian
within bytes (dimension j lands in byte j//8, bit j%8).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    CorruptRecord,
    DimMismatch,
    EmptySet,
    IdCountMismatch,
    IoFailure,
    MethodMismatch,
    NonFiniteValue,
)
from .io import EmbeddingSet, atomic_write_bytes, atomic_write_text, default_ids_path, _read_id_lines

F16_MAX = 65504.0
CONTAINER_MAGIC = b"VQC1"


class Method(str, Enum):
    F32 = "f32"
    F16 = "f16"
    INT8 = "int8"
    BINARY = "binary"
    AE_LATENT = "ae-latent"


_CONTAINER_TAGS = {Method.F16: 0, Method.INT8: 1, Method.BINARY: 2}
_TAG_METHODS = {v: k for k, v in _CONTAINER_TAGS.items()}


def bytes_per_vector(method: Method, dim: int) -> int:
    """Storage bytes for one vector; for AE_LATENT pass the latent width."""
    if dim < 1:
        raise DimMismatch(f"dim must be >= 1, got {dim}")
    if method is Method.F32:
        return 4 * dim
    if method is Method.F16:
        return 2 * dim
    if method is Method.INT8:
        return dim
    if method is Method.BINARY:
        return math.ceil(dim / 8)
    if method is Method.AE_LATENT:
        return 4 * dim
    raise MethodMismatch(f"unknown method {method!r}")


@dataclass
class Int8Params:
    """Per-dimension calibration range for scalar int8 quantization."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        self.mins = np.ascontiguousarray(self.mins, dtype=np.float32)
        self.maxs = np.ascontiguousarray(self.maxs, dtype=np.float32)
        if self.mins.ndim != 1 or self.mins.shape != self.maxs.shape:
            raise DimMismatch("mins and maxs must be 1-D with equal length")
        if not (np.all(np.isfinite(self.mins)) and np.all(np.isfinite(self.maxs))):
            raise NonFiniteValue("calibration range contains NaN or Inf")
        if np.any(self.mins > self.maxs):
            raise DimMismatch("mins must be <= maxs in every dimension")

    @property
    def dim(self) -> int:
        return self.mins.shape[0]


@dataclass
class CompressedSet:
    """Tagged container for a compressed embedding set.

    dim is the original vector dimension; for AE_LATENT latent_dim is the
    stored width (what the payload and byte accounting describe).
    """

    method: Method
    dim: int
    ids: list[str]
    payload: bytes
    params: Int8Params | None = None
    latent_dim: int | None = None

    def __post_init__(self):
        if self.method is Method.AE_LATENT and self.latent_dim is None:
            raise DimMismatch("AE_LATENT requires latent_dim")
        if self.count == 0:
            expected = 0
        else:
            expected = self.count * bytes_per_vector(self.method, self.stored_dim)
        if len(self.payload) != expected:
            raise CorruptRecord(
                f"payload is {len(self.payload)} bytes, expected {expected}"
            )
        if self.method is Method.INT8:
            if self.params is None:
                raise MethodMismatch("INT8 requires Int8Params")
            if self.params.dim != self.dim:
                raise DimMismatch(
                    f"params dim {self.params.dim} != set dim {self.dim}"
                )

    @property
    def count(self) -> int:
        return len(self.ids)

    @property
    def stored_dim(self) -> int:
        return self.latent_dim if self.method is Method.AE_LATENT else self.dim


def quantize_f16(embeddings: EmbeddingSet) -> CompressedSet:
    """Convert to IEEE binary16 (round-to-nearest-even); magnitudes above the
    half-precision maximum saturate to +-65504."""
    clipped = np.clip(embeddings.data, -F16_MAX, F16_MAX)
    payload = clipped.astype("<f2").tobytes()
    return CompressedSet(
        method=Method.F16, dim=embeddings.dim, ids=list(embeddings.ids), payload=payload
    )


def dequantize_f16(compressed: CompressedSet) -> EmbeddingSet:
    if compressed.method is not Method.F16:
        raise MethodMismatch(f"expected F16 set, got {compressed.method.value}")
    half = np.frombuffer(compressed.payload, dtype="<f2")
    data = half.reshape(compressed.count, compressed.dim).astype(np.float32)
    return EmbeddingSet(ids=list(compressed.ids), data=data)


def calibrate_int8(embeddings: EmbeddingSet) -> Int8Params:
    """Per-dimension min/max over all rows."""
    if embeddings.count == 0:
        raise EmptySet("cannot calibrate an empty set")
    return Int8Params(
        mins=embeddings.data.min(axis=0), maxs=embeddings.data.max(axis=0)
    )


def quantize_int8(embeddings: EmbeddingSet, params: Int8Params) -> CompressedSet:
    """Map each component onto levels 0..255 within its dimension's calibration
    range; out-of-range values clamp, degenerate ranges map to level 0."""
    if params.dim != embeddings.dim:
        raise DimMismatch(f"params dim {params.dim} != set dim {embeddings.dim}")
    mins = params.mins.astype(np.float64)
    span = params.maxs.astype(np.float64) - mins
    degenerate = span == 0.0
    safe_span = np.where(degenerate, 1.0, span)
    t = np.clip((embeddings.data.astype(np.float64) - mins) / safe_span, 0.0, 1.0)
    levels = np.rint(t * 255.0).astype(np.uint8)
    levels[:, degenerate] = 0
    return CompressedSet(
        method=Method.INT8,
        dim=embeddings.dim,
        ids=list(embeddings.ids),
        payload=levels.tobytes(),
        params=params,
    )


def dequantize_int8(compressed: CompressedSet, params: Int8Params | None = None) -> EmbeddingSet:
    """x_hat = min_d + (q/255) * (max_d - min_d), computed in float64."""
    if compressed.method is not Method.INT8:
        raise MethodMismatch(f"expected INT8 set, got {compressed.method.value}")
    if params is None:
        params = compressed.params
    if params is None or params.dim != compressed.dim:
        raise DimMismatch("int8 params missing or wrong dimension")
    levels = np.frombuffer(compressed.payload, dtype=np.uint8).reshape(
        compressed.count, compressed.dim
    )
    mins = params.mins.astype(np.float64)
    span = params.maxs.astype(np.float64) - mins
    data = (mins + (levels.astype(np.float64) / 255.0) * span).astype(np.float32)
    return EmbeddingSet(ids=list(compressed.ids), data=data)


def quantize_binary(embeddings: EmbeddingSet) -> CompressedSet:
    """One sign bit per component: 1 iff x > 0 (0 maps to bit 0)."""
    bits = (embeddings.data > 0).astype(np.uint8)
    if embeddings.count == 0:
        payload = b""
    else:
        payload = np.packbits(bits, axis=1, bitorder="little").tobytes()
    return CompressedSet(
        method=Method.BINARY, dim=embeddings.dim, ids=list(embeddings.ids), payload=payload
    )


def dequantize_binary(compressed: CompressedSet) -> EmbeddingSet:
    """Bit 1 -> +1.0, bit 0 -> -1.0; cosine over the +-1 vectors ranks the same
    as Hamming distance at fixed dim."""
    if compressed.method is not Method.BINARY:
        raise MethodMismatch(f"expected BINARY set, got {compressed.method.value}")
    row_bytes = bytes_per_vector(Method.BINARY, compressed.dim) if compressed.dim else 0
    packed = np.frombuffer(compressed.payload, dtype=np.uint8).reshape(
        compressed.count, row_bytes
    )
    bits = np.unpackbits(packed, axis=1, bitorder="little")[:, : compressed.dim]
    data = bits.astype(np.float32) * 2.0 - 1.0
    return EmbeddingSet(ids=list(compressed.ids), data=data)


def dequantize(compressed: CompressedSet) -> EmbeddingSet:
    """Dispatch to the codec matching the set's method tag."""
    if compressed.method is Method.F16:
        return dequantize_f16(compressed)
    if compressed.method is Method.INT8:
        return dequantize_int8(compressed)
    if compressed.method is Method.BINARY:
        return dequantize_binary(compressed)
    raise MethodMismatch(f"no direct codec for {compressed.method.value}")


def quantize(embeddings: EmbeddingSet, method: Method, params: Int8Params | None = None) -> CompressedSet:
    """Dispatch to the codec for method; INT8 calibrates on the input set when
    no params are given."""
    if method is Method.F16:
        return quantize_f16(embeddings)
    if method is Method.INT8:
        return quantize_int8(embeddings, params or calibrate_int8(embeddings))
    if method is Method.BINARY:
        return quantize_binary(embeddings)
    raise MethodMismatch(f"no direct codec for {method.value}")


# ---------------------------------------------------------------------------
# Container file: magic "VQC1", u8 method tag, u32 dim, u32 count,
# then (INT8 only) dim f32 mins + dim f32 maxs, then the payload.
# ---------------------------------------------------------------------------


def write_container(
    compressed: CompressedSet, path: str | Path, ids_path: str | Path | None = None
) -> None:
    if compressed.method not in _CONTAINER_TAGS:
        raise MethodMismatch(
            f"{compressed.method.value} sets are not containerized; persist AE latents as fvecs"
        )
    if ids_path is None:
        ids_path = default_ids_path(path)
    head = CONTAINER_MAGIC + struct.pack(
        "<BII", _CONTAINER_TAGS[compressed.method], compressed.dim, compressed.count
    )
    parts = [head]
    if compressed.method is Method.INT8:
        parts.append(compressed.params.mins.astype("<f4").tobytes())
        parts.append(compressed.params.maxs.astype("<f4").tobytes())
    parts.append(compressed.payload)
    atomic_write_bytes(path, b"".join(parts))
    atomic_write_text(ids_path, "".join(i + "\n" for i in compressed.ids))


def read_container(path: str | Path, ids_path: str | Path | None = None) -> CompressedSet:
    if ids_path is None:
        ids_path = default_ids_path(path)
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(raw) < 13 or raw[:4] != CONTAINER_MAGIC:
        raise CorruptRecord(f"{path} is not a VQC1 container")
    tag, dim, count = struct.unpack_from("<BII", raw, 4)
    if tag not in _TAG_METHODS:
        raise CorruptRecord(f"unknown method tag {tag}")
    method = _TAG_METHODS[tag]
    offset = 13
    params = None
    if method is Method.INT8:
        need = 8 * dim
        if len(raw) < offset + need:
            raise CorruptRecord("truncated int8 calibration block")
        mins = np.frombuffer(raw, dtype="<f4", count=dim, offset=offset)
        maxs = np.frombuffer(raw, dtype="<f4", count=dim, offset=offset + 4 * dim)
        params = Int8Params(mins=mins, maxs=maxs)
        offset += need
    payload = raw[offset:]
    expected = count * bytes_per_vector(method, dim) if dim else 0
    if len(payload) != expected:
        raise CorruptRecord(f"payload is {len(payload)} bytes, expected {expected}")
    ids = _read_id_lines(ids_path)
    if len(ids) != count:
        raise IdCountMismatch(f"{len(ids)} ids for {count} records")
    return CompressedSet(method=method, dim=dim, ids=ids, payload=payload, params=params)
