import numpy as np
import pytest

from embed_service.audio import resample, slice_windows
from embed_service.models import BandEnergyModel, CheckpointModel, MelBandModel, build_registry

from conftest import tone


class TestBuiltinModels:
    def test_registry_contents(self):
        registry = build_registry()
        assert registry["spectral-16"].dim == 16
        assert registry["mel-32"].dim == 32

    def test_rows_shape_and_determinism(self):
        model = BandEnergyModel("t", bands=16)
        windows = slice_windows(tone(30.0, rate=16000), 16000, 10.0)
        a, b = model.rows(windows), model.rows(windows)
        assert a.shape == (3, 16)
        assert np.array_equal(a, b)

    def test_mel_differs_from_linear_banding(self):
        windows = slice_windows(tone(10.0, rate=16000, freq=700.0), 16000, 10.0)
        linear = BandEnergyModel("a", bands=16).rows(windows)
        mel = MelBandModel("b", bands=16).rows(windows)
        assert not np.allclose(linear, mel)

    def test_distinct_spectra_distinct_rows(self):
        model = BandEnergyModel("t", bands=16)
        low = model.rows(slice_windows(tone(10.0, 16000, freq=110.0), 16000, 10.0))
        high = model.rows(slice_windows(tone(10.0, 16000, freq=2000.0), 16000, 10.0))
        assert not np.allclose(low, high)


class TestCheckpointModel:
    def test_projection_applied(self, tmp_path):
        rng = np.random.default_rng(0)
        projection = rng.normal(size=(64, 8))
        bias = rng.normal(size=8)
        path = tmp_path / "custom.npz"
        np.savez(path, projection=projection, bias=bias)
        model = CheckpointModel("custom", path)
        assert model.dim == 8
        windows = slice_windows(tone(20.0, rate=16000), 16000, 10.0)
        rows = model.rows(windows)
        base = BandEnergyModel("base", bands=64).rows(windows)
        assert np.allclose(rows, base @ projection + bias)

    def test_registry_scans_model_dir(self, tmp_path):
        np.savez(tmp_path / "finetuned.npz", projection=np.eye(64))
        registry = build_registry(tmp_path)
        assert "finetuned" in registry
        assert registry["finetuned"].dim == 64

    def test_bad_checkpoint_skipped(self, tmp_path, caplog):
        np.savez(tmp_path / "broken.npz", weights=np.eye(3))
        with caplog.at_level("WARNING"):
            registry = build_registry(tmp_path)
        assert "broken" not in registry

    def test_checkpoint_needs_projection_shape(self, tmp_path):
        path = tmp_path / "bad.npz"
        np.savez(path, projection=np.eye(3))
        with pytest.raises(ValueError):
            CheckpointModel("bad", path)


class TestResample:
    def test_preserves_duration(self):
        samples = tone(3.0, rate=32000)
        out = resample(samples, 32000, 16000)
        assert len(out) == 3 * 16000

    def test_identity_when_rates_match(self):
        samples = tone(1.0, rate=16000)
        assert resample(samples, 16000, 16000) is samples
