"""Feature models and the tag registry.

Two deterministic DSP models ship built in (no weights to download), and any
number of checkpoint-backed models can be dropped into ``MODEL_DIR`` as
``<tag>.npz`` files holding a ``projection`` matrix (and optional ``bias``)
applied on top of the wide spectral base features.  Weights load once at
startup; inference on one model instance is serialized by a lock, while
different models may run concurrently.
"""

from __future__ import annotations

import logging
import threading
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

# The same feature row serves both kinds: as an embedding vector for
# distribution distances and as logits for a softmax over bands.  The row
# dimension is fixed per model tag regardless of kind.


class BandEnergyModel:
    """Log energies over geometrically spaced frequency bands."""

    def __init__(self, tag: str, bands: int, native_rate_hz: int = 16000):
        self.tag = tag
        self.dim = bands
        self.native_rate_hz = native_rate_hz
        self._lock = threading.Lock()

    def _band_index(self, width: int) -> np.ndarray:
        freqs = np.fft.rfftfreq(width, d=1.0 / self.native_rate_hz)
        edges = np.geomspace(50.0, self.native_rate_hz / 2.0, self.dim + 1)
        return np.clip(np.searchsorted(edges, freqs, side="right") - 1, 0, self.dim - 1)

    def rows(self, windows: np.ndarray) -> np.ndarray:
        with self._lock:
            band_of = self._band_index(windows.shape[1])
            out = np.empty((windows.shape[0], self.dim), dtype=np.float64)
            for i, window in enumerate(windows):
                power = np.abs(np.fft.rfft(window)) ** 2
                energies = np.bincount(band_of, weights=power, minlength=self.dim)
                out[i] = np.log(energies + 1e-12)
            return out


class MelBandModel(BandEnergyModel):
    """Log energies over mel-spaced triangular-free bands (hard binning)."""

    @staticmethod
    def _hz_to_mel(hz):
        return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)

    @staticmethod
    def _mel_to_hz(mel):
        return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)

    def _band_index(self, width: int) -> np.ndarray:
        freqs = np.fft.rfftfreq(width, d=1.0 / self.native_rate_hz)
        mel_edges = np.linspace(
            self._hz_to_mel(50.0), self._hz_to_mel(self.native_rate_hz / 2.0), self.dim + 1
        )
        edges = self._mel_to_hz(mel_edges)
        return np.clip(np.searchsorted(edges, freqs, side="right") - 1, 0, self.dim - 1)


class CheckpointModel:
    """A linear head from a checkpoint file over wide spectral base features.

    The checkpoint is an ``.npz`` with ``projection`` of shape (64, d_out)
    and an optional ``bias`` of shape (d_out,).  This is the hook for models
    fine-tuned elsewhere; training is out of scope here.
    """

    BASE_BANDS = 64

    def __init__(self, tag: str, path: Path):
        self._base = BandEnergyModel(f"{tag}-base", self.BASE_BANDS)
        with np.load(path) as checkpoint:
            if "projection" not in checkpoint:
                raise ValueError(f"{path}: checkpoint lacks a 'projection' array")
            self.projection = np.asarray(checkpoint["projection"], dtype=np.float64)
            self.bias = (
                np.asarray(checkpoint["bias"], dtype=np.float64)
                if "bias" in checkpoint
                else np.zeros(self.projection.shape[1])
            )
        if self.projection.ndim != 2 or self.projection.shape[0] != self.BASE_BANDS:
            raise ValueError(
                f"{path}: projection must be ({self.BASE_BANDS}, d), "
                f"got {self.projection.shape}"
            )
        self.tag = tag
        self.dim = self.projection.shape[1]
        self.native_rate_hz = self._base.native_rate_hz
        self._lock = threading.Lock()

    def rows(self, windows: np.ndarray) -> np.ndarray:
        with self._lock:
            return self._base.rows(windows) @ self.projection + self.bias


def build_registry(model_dir: str | Path | None = None) -> dict[str, object]:
    """Built-in models plus one CheckpointModel per ``.npz`` in model_dir."""
    registry: dict[str, object] = {
        "spectral-16": BandEnergyModel("spectral-16", bands=16),
        "mel-32": MelBandModel("mel-32", bands=32),
    }
    if model_dir:
        for path in sorted(Path(model_dir).glob("*.npz")):
            tag = path.stem
            try:
                registry[tag] = CheckpointModel(tag, path)
                log.info("loaded checkpoint model %r from %s", tag, path)
            except (OSError, ValueError) as exc:
                log.warning("skipping checkpoint %s: %s", path, exc)
    return registry
