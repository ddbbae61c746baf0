import base64
import wave
from pathlib import Path

import numpy as np
import pytest


def tone(duration_s: float, rate: int = 32000, freq: float = 330.0) -> np.ndarray:
    t = np.arange(int(duration_s * rate)) / rate
    return 0.5 * np.sin(2 * np.pi * freq * t)


def pcm16(samples: np.ndarray) -> bytes:
    ints = np.clip(np.round(samples * 32767.0), -32768, 32767)
    return ints.astype("<i2").tobytes()


def pcm16_b64(samples: np.ndarray) -> str:
    return base64.b64encode(pcm16(samples)).decode("ascii")


def write_wav(path: Path, samples: np.ndarray, rate: int = 32000) -> Path:
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(rate)
        fh.writeframes(pcm16(samples))
    return path


@pytest.fixture
def wav_90s(tmp_path):
    return write_wav(tmp_path / "ninety.wav", tone(90.0))
