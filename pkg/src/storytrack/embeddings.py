"""Pluggable sources of audio embeddings and classifier logits.

The evaluator does not care where its per-window feature rows come from, as
long as one consistent source produces them for a whole report.  Two
providers ship here:

* :class:`SpectralEmbedder` - a deterministic, dependency-free extractor of
  log band energies, good enough to exercise the whole evaluation path and
  to compare mock runs against each other;
* :class:`HttpEmbeddingProvider` - a client for the embedding service, which
  wraps actual pretrained models behind the same matrix format.
"""

from __future__ import annotations

import base64

import numpy as np

from .audio import pcm16_encode
from .errors import ConfigError, MalformedResponse
from .gateway import ApiStyle, BackendConfig, _HttpClient
from .metrics import (
    EmbeddingKind,
    EmbeddingMatrix,
    embedding_matrix_from_bytes,
    slice_windows,
)

__all__ = [
    "EmbeddingProvider",
    "SpectralEmbedder",
    "HttpEmbeddingProvider",
    "resolve_embedding_source",
    "BUILTIN_SPECTRAL",
]

BUILTIN_SPECTRAL = "builtin:spectral"


class SpectralEmbedder:
    """Log-energy features over geometrically spaced frequency bands.

    Rows are pure functions of the audio; the same values serve as an
    embedding vector (for distribution distances) and as classifier logits
    (a softmax over bands is a crude "which register dominates" labeler).
    """

    def __init__(self, bands: int = 16):
        if bands < 2:
            raise ValueError("need at least 2 bands")
        self.bands = bands
        self.source_tag = f"{BUILTIN_SPECTRAL}:{bands}"

    def embed(
        self,
        samples: np.ndarray,
        sample_rate_hz: int,
        *,
        segment_span_s: float,
        kind: EmbeddingKind = EmbeddingKind.EMBEDDING,
    ) -> EmbeddingMatrix:
        windows = slice_windows(samples, sample_rate_hz, segment_span_s)
        width = windows.shape[1] if windows.size else int(round(segment_span_s * sample_rate_hz))
        freqs = np.fft.rfftfreq(width, d=1.0 / sample_rate_hz)
        nyquist = sample_rate_hz / 2.0
        edges = np.geomspace(50.0, nyquist, self.bands + 1)
        # Fold spill below/above the edge range into the outermost bands.
        band_of = np.clip(np.searchsorted(edges, freqs, side="right") - 1, 0, self.bands - 1)

        rows = np.empty((windows.shape[0], self.bands), dtype=np.float64)
        for i, window in enumerate(windows):
            power = np.abs(np.fft.rfft(window)) ** 2
            energies = np.bincount(band_of, weights=power, minlength=self.bands)
            rows[i] = np.log(energies + 1e-12)
        return EmbeddingMatrix(
            rows=rows, segment_span_s=segment_span_s, source_tag=self.source_tag
        )


class HttpEmbeddingProvider(_HttpClient):
    """Client for the embedding service's POST /embed endpoint."""

    def __init__(self, config: BackendConfig, model_tag: str = "spectral-16"):
        super().__init__(config)
        self.model_tag = model_tag
        self.source_tag = model_tag

    def embed(
        self,
        samples: np.ndarray,
        sample_rate_hz: int,
        *,
        segment_span_s: float,
        kind: EmbeddingKind = EmbeddingKind.EMBEDDING,
    ) -> EmbeddingMatrix:
        payload = {
            "audio": base64.b64encode(pcm16_encode(samples)).decode("ascii"),
            "sample_rate_hz": sample_rate_hz,
            "segment_span_s": segment_span_s,
            "kind": kind.value,
            "model_tag": self.model_tag,
        }
        body = self._post(payload, raw=True)
        try:
            matrix, _ = embedding_matrix_from_bytes(body)
        except ValueError as exc:
            raise MalformedResponse(f"unparseable embedding payload: {exc}") from exc
        return matrix


def resolve_embedding_source(source) -> SpectralEmbedder | HttpEmbeddingProvider:
    """Build a provider from a config value.

    Accepts ``"builtin:spectral"`` (optionally ``builtin:spectral:24`` for a
    band count), an ``http(s)://`` endpoint string, or a mapping with
    ``endpoint_url`` and optional ``model_tag``/timeout fields.
    """
    if isinstance(source, (SpectralEmbedder, HttpEmbeddingProvider)):
        return source
    if isinstance(source, BackendConfig):
        return HttpEmbeddingProvider(source)
    if isinstance(source, dict):
        options = dict(source)
        tag = options.pop("model_tag", "spectral-16")
        try:
            config = BackendConfig(api_style=ApiStyle.TEXT_TO_MUSIC, **options)
        except TypeError as exc:
            raise ConfigError(f"bad embedding backend options: {exc}") from exc
        return HttpEmbeddingProvider(config, model_tag=tag)
    if isinstance(source, str):
        if source.startswith(BUILTIN_SPECTRAL):
            suffix = source[len(BUILTIN_SPECTRAL) :]
            bands = int(suffix.lstrip(":")) if suffix.lstrip(":") else 16
            return SpectralEmbedder(bands=bands)
        if source.startswith(("http://", "https://")):
            return HttpEmbeddingProvider(
                BackendConfig(endpoint_url=source, api_style=ApiStyle.TEXT_TO_MUSIC)
            )
    raise ConfigError(f"cannot interpret embedding source {source!r}")
