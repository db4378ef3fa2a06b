"""Dual encoder: signed hashed n-gram features and two learnable linear
projections mapping queries and passages into a shared embedding space,
scored by the inner product ``sim(q, r) = encode_query(q) . encode_passage(r)``.

The featurizer stands in for a pretrained text backbone: unigrams and
adjacent bigrams are hashed with a fixed 64-bit FNV-1a (bit 63 gives the
feature sign), counted, and L2-normalized.  Everything downstream of the
hash is plain linear algebra, so training gradients stay analytic.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from solverank import _kernels
from solverank.errors import DataError
from solverank.util import atomic_write_bytes, atomic_write_text

DEFAULT_EMBED_DIM = 128
DEFAULT_FEATURE_DIM = 1 << 16
DEFAULT_TAU_NORMALIZED = 0.05
DEFAULT_TAU_UNNORMALIZED = 1.0

_CHECKPOINT_MAGIC = b"SRNK"
_CHECKPOINT_VERSION = 1
_FLAG_NORMALIZE = 1


@dataclass
class FeatureVec:
    """Sparse L2-normalized feature vector over a fixed space of size ``dim``.

    ``indices`` are strictly ascending int64, ``values`` float64 and nonzero;
    both empty for featureless input.
    """

    indices: np.ndarray
    values: np.ndarray
    dim: int

    @property
    def nnz(self) -> int:
        return len(self.indices)


def featurize(tokens: list[str], feature_dim: int = DEFAULT_FEATURE_DIM) -> FeatureVec:
    """Hash unigrams and adjacent bigrams into a signed, L2-normalized vector.

    index = fnv1a64(ngram) mod feature_dim, sign from hash bit 63; signed
    counts that cancel to exactly zero are dropped.  Deterministic across
    runs and platforms.  ``feature_dim`` must be a power of two.
    """
    if feature_dim < 1 or feature_dim & (feature_dim - 1):
        raise DataError(f"feature_dim must be a power of two, got {feature_dim}")
    if not tokens:
        return FeatureVec(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), feature_dim)
    idx, sign = _kernels.hash_ngrams(list(tokens), feature_dim - 1)
    order = np.argsort(idx, kind="stable")
    idx = idx[order]
    sign = sign[order]
    boundaries = np.flatnonzero(np.diff(idx)) + 1
    starts = np.concatenate(([0], boundaries))
    unique_idx = idx[starts]
    sums = np.add.reduceat(sign, starts)
    keep = sums != 0.0
    unique_idx = unique_idx[keep]
    sums = sums[keep]
    norm = float(np.sqrt(np.sum(sums * sums)))
    if norm > 0.0:
        sums = sums / norm
    return FeatureVec(unique_idx, sums, feature_dim)


@dataclass
class EncoderParams:
    """Learnable projections; ``w_query`` and ``w_passage`` are d x F."""

    w_query: np.ndarray
    w_passage: np.ndarray
    embed_dim: int
    feature_dim: int
    normalize: bool = True
    tau: float = DEFAULT_TAU_NORMALIZED
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.embed_dim < 1:
            raise DataError("embed_dim must be >= 1")
        if self.tau <= 0:
            raise DataError("tau must be positive")
        expected = (self.embed_dim, self.feature_dim)
        if self.w_query.shape != expected or self.w_passage.shape != expected:
            raise DataError(
                f"projection shapes {self.w_query.shape}/{self.w_passage.shape} "
                f"do not match (d, F) = {expected}"
            )


def init_params(
    embed_dim: int = DEFAULT_EMBED_DIM,
    feature_dim: int = DEFAULT_FEATURE_DIM,
    normalize: bool = True,
    tau: float | None = None,
    seed: int = 0,
) -> EncoderParams:
    """Gaussian init, sd 1/sqrt(F), so initial embedding norms are O(1)."""
    if tau is None:
        tau = DEFAULT_TAU_NORMALIZED if normalize else DEFAULT_TAU_UNNORMALIZED
    rng = np.random.Generator(np.random.PCG64(seed))
    scale = 1.0 / np.sqrt(feature_dim)
    w_query = rng.standard_normal((embed_dim, feature_dim)) * scale
    w_passage = rng.standard_normal((embed_dim, feature_dim)) * scale
    return EncoderParams(w_query, w_passage, embed_dim, feature_dim, normalize, tau)


def project(weights: np.ndarray, features: FeatureVec) -> np.ndarray:
    """Raw linear map W . f for a sparse feature vector (no normalization)."""
    if features.nnz == 0:
        return np.zeros(weights.shape[0], dtype=np.float64)
    if features.indices[-1] >= weights.shape[1]:
        raise DataError(
            f"feature index {int(features.indices[-1])} out of range for F={weights.shape[1]}"
        )
    return weights[:, features.indices] @ features.values


def _encode(weights: np.ndarray, features: FeatureVec, normalize: bool) -> np.ndarray:
    emb = project(weights, features)
    if normalize:
        norm = float(np.linalg.norm(emb))
        if norm > 0.0:
            emb = emb / norm
    return emb


def encode_query(params: EncoderParams, features: FeatureVec) -> np.ndarray:
    """Embed a query-side feature vector; zero features map to the zero vector."""
    return _encode(params.w_query, features, params.normalize)


def encode_passage(params: EncoderParams, features: FeatureVec) -> np.ndarray:
    """Embed a passage-side feature vector (same contract as encode_query)."""
    return _encode(params.w_passage, features, params.normalize)


def similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Inner product of two embeddings; in [-1, 1] when both are unit norm."""
    if u.shape != v.shape:
        raise DataError(f"embedding length mismatch: {u.shape} vs {v.shape}")
    return _kernels.dot(u, v)


def _checkpoint_blob(params: EncoderParams) -> bytes:
    flags = _FLAG_NORMALIZE if params.normalize else 0
    header = _CHECKPOINT_MAGIC + struct.pack(
        "<IIIId",
        _CHECKPOINT_VERSION,
        params.embed_dim,
        params.feature_dim,
        flags,
        params.tau,
    )
    body_q = np.ascontiguousarray(params.w_query, dtype="<f8").tobytes()
    body_p = np.ascontiguousarray(params.w_passage, dtype="<f8").tobytes()
    return header + body_q + body_p


def params_fingerprint(params: EncoderParams) -> str:
    """SHA-256 of the serialized checkpoint; identifies a parameter state."""
    return hashlib.sha256(_checkpoint_blob(params)).hexdigest()


def save_checkpoint(params: EncoderParams, path: str, sidecar: dict | None = None) -> None:
    """Binary checkpoint (header + row-major little-endian W_Q, W_P) plus a
    ``<path>.json`` sidecar with training config and seed."""
    atomic_write_bytes(path, _checkpoint_blob(params))
    if sidecar is not None:
        atomic_write_text(str(path) + ".json", json.dumps(sidecar, sort_keys=True, indent=2) + "\n")


def load_checkpoint(path: str) -> EncoderParams:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    header_size = len(_CHECKPOINT_MAGIC) + struct.calcsize("<IIIId")
    if len(blob) < header_size or blob[:4] != _CHECKPOINT_MAGIC:
        raise DataError(f"{path} is not a parameter checkpoint")
    version, d, f, flags, tau = struct.unpack("<IIIId", blob[4:header_size])
    if version != _CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    matrix_bytes = d * f * 8
    if len(blob) != header_size + 2 * matrix_bytes:
        raise DataError(f"{path}: truncated checkpoint")
    w_query = np.frombuffer(blob, dtype="<f8", count=d * f, offset=header_size).reshape(d, f).copy()
    w_passage = (
        np.frombuffer(blob, dtype="<f8", count=d * f, offset=header_size + matrix_bytes)
        .reshape(d, f)
        .copy()
    )
    return EncoderParams(
        w_query=w_query,
        w_passage=w_passage,
        embed_dim=d,
        feature_dim=f,
        normalize=bool(flags & _FLAG_NORMALIZE),
        tau=tau,
    )
