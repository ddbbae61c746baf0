"""Evaluation metrics: Fréchet distance on embeddings and KL divergences.

Three quantities are computed over a generated soundtrack:

* audio quality: the Fréchet distance between Gaussians fitted to embedding
  rows of the generated audio and of a reference corpus,
  ``||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2))``;
* story alignment: mean and standard deviation of the per-window KL
  divergence between classifier distributions of the original background
  music and the generated piece, paired by timeline position;
* transition smoothness: the same divergence between the windows
  immediately before and after each segment boundary.

The matrix square root is evaluated in the symmetric form
``(S1^(1/2) S2 S1^(1/2))^(1/2)`` via eigendecomposition, which keeps the
result real for positive-semidefinite inputs.  Covariances are regularized
with ``1e-6 * I`` and eigenvalues within ``-1e-10`` of zero are clamped, the
standard stabilization when the sample count is close to the embedding
dimension.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    LengthMismatch,
    NonFiniteResult,
    NoValidTransitions,
    TooFewSamples,
    TrackTooShort,
)

__all__ = [
    "EmbeddingMatrix",
    "GaussianStats",
    "ClassProbabilities",
    "MeanStd",
    "KldDirection",
    "fit_gaussian",
    "frechet_distance",
    "fad_score",
    "softmax",
    "kld",
    "mean_std",
    "story_alignment",
    "transition_smoothness",
    "sample_eval_window",
    "slice_windows",
    "EmbeddingKind",
    "embedding_matrix_to_bytes",
    "embedding_matrix_from_bytes",
    "write_embedding_file",
    "read_embedding_file",
]

COVARIANCE_REGULARIZER = 1e-6
EIGENVALUE_CLAMP = 1e-10
PROBABILITY_FLOOR = 1e-10


class EmbeddingKind(Enum):
    EMBEDDING = "embedding"
    LOGITS = "logits"


class KldDirection(Enum):
    """Operand order for the alignment KLD; reference-first by default."""

    REFERENCE_FIRST = "reference_first"
    GENERATED_FIRST = "generated_first"


@dataclass(frozen=True)
class EmbeddingMatrix:
    """One row of model features per fixed-length audio window."""

    rows: np.ndarray
    segment_span_s: float
    source_tag: str

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError(f"rows must be 2-D (n, d), got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("embedding rows contain non-finite values")
        if self.segment_span_s <= 0:
            raise ValueError("segment_span_s must be positive")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class GaussianStats:
    mean: np.ndarray
    covariance: np.ndarray
    n: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.covariance, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(f"incompatible shapes: mean {mean.shape}, cov {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-9):
            raise ValueError("covariance is not symmetric within 1e-9")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", (cov + cov.T) / 2.0)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class ClassProbabilities:
    """A normalized, strictly positive class distribution."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError(f"probs must be a non-empty vector, got shape {probs.shape}")
        if np.any(probs <= 0.0) or np.any(probs > 1.0):
            raise ValueError("probabilities must lie in (0, 1]")
        if abs(float(probs.sum()) - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {probs.sum()}, expected 1")
        object.__setattr__(self, "probs", probs)

    @property
    def k(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class MeanStd:
    mean: float
    std: float
    n: int

    def __post_init__(self):
        if self.std < 0 or self.n < 1:
            raise ValueError("std must be >= 0 and n >= 1")

    def __format__(self, spec: str) -> str:
        spec = spec or ".2f"
        return f"{self.mean:{spec}}±{self.std:{spec}}"


def fit_gaussian(
    embeddings: EmbeddingMatrix, regularizer: float = COVARIANCE_REGULARIZER
) -> GaussianStats:
    """Column mean and unbiased sample covariance plus ``regularizer * I``."""
    if embeddings.n < 2:
        raise TooFewSamples(f"need at least 2 rows to fit a Gaussian, got {embeddings.n}")
    rows = embeddings.rows
    mean = rows.mean(axis=0)
    cov = np.atleast_2d(np.cov(rows, rowvar=False, ddof=1))
    cov = cov + regularizer * np.eye(embeddings.dim)
    return GaussianStats(mean=mean, covariance=cov, n=embeddings.n)


def _clamped_eigh(matrix: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    values, vectors = np.linalg.eigh(matrix)
    if np.any(values < -EIGENVALUE_CLAMP):
        raise NonFiniteResult(
            f"{what} has eigenvalue {values.min():.3e} below the "
            f"-{EIGENVALUE_CLAMP} clamping tolerance"
        )
    return np.maximum(values, 0.0), vectors


def frechet_distance(g1: GaussianStats, g2: GaussianStats) -> float:
    """Fréchet distance between two Gaussians; symmetric and non-negative."""
    if g1.dim != g2.dim:
        raise DimensionMismatch(f"dimension {g1.dim} vs {g2.dim}")
    values1, vectors1 = _clamped_eigh(g1.covariance, "first covariance")
    sqrt1 = (vectors1 * np.sqrt(values1)) @ vectors1.T
    inner = sqrt1 @ g2.covariance @ sqrt1
    inner = (inner + inner.T) / 2.0
    cross_values, _ = _clamped_eigh(inner, "covariance product")
    mean_diff = g1.mean - g2.mean
    distance = (
        float(mean_diff @ mean_diff)
        + float(np.trace(g1.covariance))
        + float(np.trace(g2.covariance))
        - 2.0 * float(np.sum(np.sqrt(cross_values)))
    )
    if not np.isfinite(distance):
        raise NonFiniteResult(f"Fréchet distance evaluated to {distance}")
    return max(distance, 0.0)


def fad_score(reference: EmbeddingMatrix, generated: EmbeddingMatrix) -> float:
    """Fréchet distance between Gaussians fitted to two embedding sets."""
    if reference.dim != generated.dim:
        raise DimensionMismatch(
            f"reference dimension {reference.dim} vs generated {generated.dim}"
        )
    return frechet_distance(fit_gaussian(reference), fit_gaussian(generated))


def softmax(logits, floor: float = PROBABILITY_FLOOR) -> ClassProbabilities:
    """Max-subtracted softmax, floored at ``floor`` and renormalized.

    The floor keeps every class strictly positive so downstream divergences
    stay finite even for numerically saturated logits.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError(f"logits must be a non-empty vector, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits contain non-finite values")
    exps = np.exp(z - z.max())
    probs = exps / exps.sum()
    probs = np.maximum(probs, floor)
    return ClassProbabilities(probs / probs.sum())


def kld(p: ClassProbabilities, q: ClassProbabilities) -> float:
    """Kullback-Leibler divergence ``sum p ln(p/q)`` in nats."""
    if p.k != q.k:
        raise DimensionMismatch(f"distribution sizes {p.k} vs {q.k}")
    terms = np.where(p.probs > 0.0, p.probs * np.log(p.probs / q.probs), 0.0)
    return max(float(terms.sum()), 0.0)


def mean_std(values: list[float]) -> MeanStd:
    """Mean and population (n-normalized) standard deviation."""
    if not values:
        raise ValueError("need at least one value")
    arr = np.asarray(values, dtype=np.float64)
    return MeanStd(mean=float(arr.mean()), std=float(arr.std(ddof=0)), n=arr.size)


def story_alignment(
    reference_probs: list[ClassProbabilities],
    generated_probs: list[ClassProbabilities],
    direction: KldDirection = KldDirection.REFERENCE_FIRST,
) -> MeanStd:
    """Aggregate per-window divergence between paired distributions."""
    if len(reference_probs) != len(generated_probs):
        raise LengthMismatch(
            f"{len(reference_probs)} reference vs {len(generated_probs)} generated windows"
        )
    if not reference_probs:
        raise ValueError("need at least one paired window")
    if direction is KldDirection.REFERENCE_FIRST:
        values = [kld(r, g) for r, g in zip(reference_probs, generated_probs)]
    else:
        values = [kld(g, r) for r, g in zip(reference_probs, generated_probs)]
    return mean_std(values)


def transition_smoothness(
    window_probs: list[tuple[ClassProbabilities, ClassProbabilities]],
) -> MeanStd:
    """Aggregate divergence across (before, after) pairs at each transition."""
    if not window_probs:
        raise NoValidTransitions("no transition windows to compare")
    return mean_std([kld(before, after) for before, after in window_probs])


def sample_eval_window(
    track_duration_s: float, window_minutes: float = 30.0, seed: int = 0
) -> float:
    """Seeded uniform start offset for an evaluation crop.

    The same offset must be applied to the reference and the generated
    track so that windows stay paired.  Raises TrackTooShort when no full
    window fits; callers then evaluate the whole track and record the
    deviation.
    """
    window_s = window_minutes * 60.0
    if track_duration_s < window_s:
        raise TrackTooShort(
            f"track of {track_duration_s} s cannot hold a {window_s} s window"
        )
    rng = np.random.default_rng(seed)
    return float(rng.uniform(0.0, track_duration_s - window_s))


def slice_windows(samples: np.ndarray, sample_rate_hz: int, span_s: float) -> np.ndarray:
    """Consecutive non-overlapping windows, final partial window dropped."""
    width = int(round(span_s * sample_rate_hz))
    if width <= 0:
        raise ValueError(f"span {span_s} s at {sample_rate_hz} Hz is empty")
    count = len(samples) // width
    return np.asarray(samples[: count * width], dtype=np.float64).reshape(count, width)


# --------------------------------------------------------------------------
# embedding matrix file format
# --------------------------------------------------------------------------
#
# A single JSON header line {"d", "n", "segment_span_s", "source_tag",
# "kind"} terminated by '\n', followed by n*d little-endian float32 values,
# row-major.  Produced by the embedding service and by `storytrack embed`,
# consumed by the evaluator.


def embedding_matrix_to_bytes(
    matrix: EmbeddingMatrix, kind: EmbeddingKind = EmbeddingKind.EMBEDDING
) -> bytes:
    header = {
        "d": matrix.dim,
        "n": matrix.n,
        "segment_span_s": matrix.segment_span_s,
        "source_tag": matrix.source_tag,
        "kind": kind.value,
    }
    return json.dumps(header).encode("utf-8") + b"\n" + (
        matrix.rows.astype("<f4").tobytes()
    )


def embedding_matrix_from_bytes(data: bytes) -> tuple[EmbeddingMatrix, EmbeddingKind]:
    newline = data.find(b"\n")
    if newline < 0:
        raise ValueError("missing header line")
    try:
        header = json.loads(data[:newline].decode("utf-8"))
        n, d = int(header["n"]), int(header["d"])
        kind = EmbeddingKind(header["kind"])
        span = float(header["segment_span_s"])
        tag = str(header["source_tag"])
    except (KeyError, ValueError, UnicodeDecodeError) as exc:
        raise ValueError(f"bad embedding file header: {exc}") from exc
    body = data[newline + 1 :]
    if len(body) != n * d * 4:
        raise ValueError(f"expected {n * d * 4} payload bytes, found {len(body)}")
    rows = np.frombuffer(body, dtype="<f4").astype(np.float64).reshape(n, d)
    return EmbeddingMatrix(rows=rows, segment_span_s=span, source_tag=tag), kind


def write_embedding_file(
    path: str | Path,
    matrix: EmbeddingMatrix,
    kind: EmbeddingKind = EmbeddingKind.EMBEDDING,
) -> None:
    Path(path).write_bytes(embedding_matrix_to_bytes(matrix, kind))


def read_embedding_file(path: str | Path) -> tuple[EmbeddingMatrix, EmbeddingKind]:
    return embedding_matrix_from_bytes(Path(path).read_bytes())
