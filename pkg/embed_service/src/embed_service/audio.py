"""Audio plumbing: PCM decoding, WAV reading, resampling, window slicing."""

from __future__ import annotations

import base64
import binascii
import math
import wave
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly


class AudioDecodeError(ValueError):
    """The supplied audio bytes or file cannot be interpreted."""


def decode_pcm16_b64(payload: str) -> np.ndarray:
    try:
        raw = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise AudioDecodeError(f"audio is not valid base64: {exc}") from exc
    if not raw or len(raw) % 2:
        raise AudioDecodeError(
            f"audio must be a positive whole number of 16-bit samples, got {len(raw)} bytes"
        )
    ints = np.frombuffer(raw, dtype="<i2")
    return np.maximum(ints.astype(np.float64) / 32767.0, -1.0)


def read_wav_mono(path: str | Path) -> tuple[np.ndarray, int]:
    """16-bit PCM WAV as mono float samples; channels averaged."""
    try:
        with wave.open(str(path), "rb") as fh:
            if fh.getcomptype() != "NONE" or fh.getsampwidth() != 2:
                raise AudioDecodeError(f"{path}: only uncompressed 16-bit PCM is supported")
            channels = fh.getnchannels()
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except wave.Error as exc:
        raise AudioDecodeError(f"{path}: not a readable WAV file: {exc}") from exc
    samples = np.maximum(np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32767.0, -1.0)
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    return samples, rate


def resample(samples: np.ndarray, rate: int, target_rate: int) -> np.ndarray:
    if rate == target_rate:
        return samples
    divisor = math.gcd(rate, target_rate)
    return resample_poly(samples, target_rate // divisor, rate // divisor)


def slice_windows(samples: np.ndarray, rate: int, span_s: float) -> np.ndarray:
    """Consecutive span-length windows; the final partial window is dropped."""
    width = int(round(span_s * rate))
    count = len(samples) // width
    return samples[: count * width].reshape(count, width)
