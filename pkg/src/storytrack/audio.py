"""Assemble generated audio segments into one continuous track.

Segments are concatenated sample-exactly (optionally with a short linear
crossfade) and every boundary between consecutive segments is recorded as a
transition instant, which the smoothness metric later analyses.  WAV I/O is
canonical RIFF mono 16-bit little-endian PCM.
"""

from __future__ import annotations

import logging
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    IoError,
    NonContiguousIndices,
    SampleRateMismatch,
    UnsupportedWavLayout,
    WindowOutOfBounds,
)

log = logging.getLogger(__name__)

__all__ = [
    "AudioSegment",
    "Track",
    "TransitionWindows",
    "assemble",
    "extract_transition_windows",
    "collect_transition_windows",
    "write_wav",
    "read_wav",
    "pcm16_encode",
    "pcm16_decode",
]

_AMPLITUDE_TOL = 1e-9


def _as_clean_samples(values) -> np.ndarray:
    samples = np.asarray(values, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples contain non-finite values")
    peak = float(np.max(np.abs(samples), initial=0.0))
    if peak > 1.0 + _AMPLITUDE_TOL:
        raise ValueError(f"samples exceed [-1, 1] (peak {peak:.6g})")
    # Round-off from bounded arithmetic may overshoot by a few ulps.
    return np.clip(samples, -1.0, 1.0)


@dataclass
class AudioSegment:
    """One generated clip: mono samples in [-1, 1] at a fixed rate."""

    samples: np.ndarray
    sample_rate_hz: int
    index: int = 0

    def __post_init__(self):
        self.samples = _as_clean_samples(self.samples)
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def tail(self, seconds: float) -> "AudioSegment":
        """The final ``seconds`` of this segment (whole segment if shorter)."""
        n = min(len(self.samples), int(round(seconds * self.sample_rate_hz)))
        return AudioSegment(self.samples[len(self.samples) - n :], self.sample_rate_hz, self.index)


@dataclass
class Track:
    """An assembled soundtrack plus the instants where segments meet."""

    samples: np.ndarray
    sample_rate_hz: int
    transitions: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.samples = _as_clean_samples(self.samples)
        dur = self.duration_s
        previous = 0.0
        for t in self.transitions:
            if not previous < t < dur:
                raise ValueError(
                    f"transition {t} not strictly increasing inside (0, {dur})"
                )
            previous = t

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


class TransitionWindows(NamedTuple):
    transition_s: float
    before: AudioSegment
    after: AudioSegment


def assemble(segments: list[AudioSegment], crossfade_ms: float = 0.0) -> Track:
    """Join ordered segments into one track, recording each boundary.

    With ``crossfade_ms == 0`` (the default, used for evaluation so the raw
    model transitions stay measurable) the output is the exact concatenation.
    A positive crossfade overlaps adjacent segments with complementary linear
    ramps, which cannot clip bounded inputs.
    """
    if not segments:
        raise ValueError("cannot assemble zero segments")
    rate = segments[0].sample_rate_hz
    for seg in segments:
        if seg.sample_rate_hz != rate:
            raise SampleRateMismatch(
                f"segment {seg.index} at {seg.sample_rate_hz} Hz, expected {rate} Hz"
            )
    indices = [seg.index for seg in segments]
    if indices != list(range(len(segments))):
        raise NonContiguousIndices(f"segment indices {indices} are not 0..{len(segments) - 1}")

    fade = int(round(crossfade_ms / 1000.0 * rate))
    if fade < 0:
        raise ValueError("crossfade_ms must be non-negative")
    if fade and fade > min(len(s.samples) for s in segments):
        raise ValueError("crossfade longer than the shortest segment")

    total = sum(len(s.samples) for s in segments) - fade * (len(segments) - 1)
    out = np.zeros(total, dtype=np.float64)
    ramp_in = (np.arange(fade) + 0.5) / fade if fade else np.empty(0)

    offset = 0
    transitions = []
    for k, seg in enumerate(segments):
        if k == 0:
            out[: len(seg.samples)] = seg.samples
            offset = len(seg.samples)
            continue
        start = offset - fade
        if fade:
            out[start : start + fade] *= ramp_in[::-1]
            out[start : start + fade] += seg.samples[:fade] * ramp_in
        out[start + fade : start + len(seg.samples)] = seg.samples[fade:]
        transitions.append(start / rate)
        offset = start + len(seg.samples)
    return Track(out, rate, transitions)


def _transition_ordinal(track: Track, t: float) -> int:
    for i, known in enumerate(track.transitions):
        if abs(known - t) <= 1e-9:
            return i
    raise ValueError(f"{t} is not a recorded transition of this track")


def extract_transition_windows(
    track: Track, t: float, half_window_s: float = 10.0
) -> tuple[AudioSegment, AudioSegment]:
    """Sample-exact audio covering ``[t - half, t)`` and ``[t, t + half)``.

    Raises WindowOutOfBounds when the transition sits too close to a track
    edge for a full window; callers skip (and report) such transitions rather
    than padding, since padded silence would bias the smoothness metric.
    """
    ordinal = _transition_ordinal(track, t)
    rate = track.sample_rate_hz
    pivot = int(round(t * rate))
    half = int(round(half_window_s * rate))
    if pivot - half < 0 or pivot + half > len(track.samples):
        raise WindowOutOfBounds(
            f"transition at {t} s needs ±{half_window_s} s inside a "
            f"{track.duration_s} s track"
        )
    before = AudioSegment(track.samples[pivot - half : pivot], rate, index=ordinal)
    after = AudioSegment(track.samples[pivot : pivot + half], rate, index=ordinal)
    return before, after


def collect_transition_windows(
    track: Track, half_window_s: float = 10.0
) -> tuple[list[TransitionWindows], list[float]]:
    """Extract every analysable transition; return (windows, skipped instants)."""
    windows, skipped = [], []
    for t in track.transitions:
        try:
            before, after = extract_transition_windows(track, t, half_window_s)
        except WindowOutOfBounds:
            log.info("skipping transition at %.3f s: too close to track edge", t)
            skipped.append(t)
            continue
        windows.append(TransitionWindows(t, before, after))
    return windows, skipped


def pcm16_encode(samples: np.ndarray) -> bytes:
    """Quantize [-1, 1] floats to little-endian 16-bit PCM bytes."""
    ints = np.clip(np.round(np.asarray(samples, dtype=np.float64) * 32767.0), -32768, 32767)
    return ints.astype("<i2").tobytes()


def pcm16_decode(data: bytes) -> np.ndarray:
    """Inverse of :func:`pcm16_encode`, exact to within one quantization step."""
    ints = np.frombuffer(data, dtype="<i2")
    return np.maximum(ints.astype(np.float64) / 32767.0, -1.0)


def write_wav(audio: Track | AudioSegment, path: str | Path) -> None:
    """Write mono 16-bit PCM; round-trips samples to within 2**-15."""
    try:
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(audio.sample_rate_hz)
            fh.writeframes(pcm16_encode(audio.samples))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_wav(path: str | Path) -> Track:
    """Read a PCM WAV file as a Track (transitions unknown, left empty).

    Multi-channel input is downmixed by averaging with a logged notice;
    anything other than uncompressed 16-bit PCM raises UnsupportedWavLayout.
    """
    try:
        with wave.open(str(path), "rb") as fh:
            if fh.getcomptype() != "NONE":
                raise UnsupportedWavLayout(f"compressed WAV ({fh.getcomptype()}) not supported")
            if fh.getsampwidth() != 2:
                raise UnsupportedWavLayout(
                    f"{8 * fh.getsampwidth()}-bit samples not supported; expected 16-bit PCM"
                )
            channels = fh.getnchannels()
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except wave.Error as exc:
        raise UnsupportedWavLayout(f"not a readable WAV file: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    samples = pcm16_decode(raw)
    if channels > 1:
        log.info("downmixing %d channels to mono by averaging: %s", channels, path)
        samples = samples.reshape(-1, channels).mean(axis=1)
    return Track(samples, rate, transitions=[])
