import json

import pytest

from storytrack.cli import main
from storytrack.metrics import read_embedding_file
from storytrack.report import MetricReport, save_report
from storytrack.metrics import MeanStd

VTT = """WEBVTT

00:00:02.000 --> 00:00:08.000
We enter the ruined keep.

00:00:31.000 --> 00:00:40.000
A dragon stirs in the dark.
"""


@pytest.fixture
def transcript(tmp_path):
    path = tmp_path / "ep.vtt"
    path.write_text(VTT, encoding="utf-8")
    return path


def generate_args(tmp_path, transcript, extra=()):
    return [
        "generate",
        "--transcript", str(transcript),
        "--campaign", "clitest",
        "--strategy", "baseline",
        "--seed", "5",
        "--mock-llm", "--mock-music",
        "--output-dir", str(tmp_path / "out"),
        *extra,
    ]


class TestGenerateVerb:
    def test_success(self, tmp_path, transcript, capsys):
        assert main(generate_args(tmp_path, transcript)) == 0
        out = capsys.readouterr().out
        assert "2 segments" in out and "1 transitions" in out
        assert (tmp_path / "out" / "clitest_baseline.wav").exists()

    def test_missing_transcript_exits_1(self, tmp_path, capsys):
        rc = main([
            "generate", "--transcript", str(tmp_path / "missing.vtt"),
            "--mock-llm", "--mock-music", "--output-dir", str(tmp_path / "o"),
        ])
        assert rc == 1
        assert "config error" in capsys.readouterr().err

    def test_bad_strategy_flag_exits_1(self, tmp_path, transcript):
        with pytest.raises(SystemExit) as exc:
            main(generate_args(tmp_path, transcript, extra=["--strategy", "vibes"]))
        assert exc.value.code == 1

    def test_unreachable_backend_exits_2(self, tmp_path, transcript, capsys):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({
            "transcript_path": str(transcript),
            "strategy": "description",
            "llm_backend": {"endpoint_url": "http://127.0.0.1:1/",
                            "timeout_s": 0.5, "max_retries": 0},
            "music_backend": {"endpoint_url": "mock:"},
            "output_dir": str(tmp_path / "out2"),
        }))
        assert main(["generate", "--config", str(config)]) == 2
        assert "run failed" in capsys.readouterr().err

    def test_flags_override_config_file(self, tmp_path, transcript):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({
            "transcript_path": str(transcript),
            "campaign_name": "fromfile",
            "strategy": "emotion",
            "output_dir": str(tmp_path / "fileout"),
        }))
        rc = main([
            "generate", "--config", str(config),
            "--strategy", "baseline",
            "--campaign", "fromflag",
            "--output-dir", str(tmp_path / "flagout"),
            "--mock-llm", "--mock-music",
        ])
        assert rc == 0
        assert (tmp_path / "flagout" / "fromflag_baseline.wav").exists()


class TestEvalVerb:
    def test_eval_prints_tables(self, tmp_path, transcript, capsys):
        main(generate_args(tmp_path, transcript))
        capsys.readouterr()
        rc = main([
            "eval",
            "--track", str(tmp_path / "out" / "clitest_baseline.wav"),
            "--campaign", "clitest",
            "--strategy", "baseline",
            "--output-dir", str(tmp_path / "out"),
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "FAD score" in out and "Transition" in out

    def test_eval_missing_track_exits_1(self, tmp_path):
        rc = main(["eval", "--track", str(tmp_path / "none.wav"),
                   "--output-dir", str(tmp_path)])
        assert rc == 1


class TestEmbedVerb:
    def test_embed_round_trip(self, tmp_path, transcript, capsys):
        main(generate_args(tmp_path, transcript))
        wav = tmp_path / "out" / "clitest_baseline.wav"
        emb = tmp_path / "clitest.emb"
        rc = main(["embed", str(wav), str(emb), "--span", "10", "--kind", "logits"])
        assert rc == 0
        matrix, kind = read_embedding_file(emb)
        assert kind.value == "logits"
        assert matrix.n == 6  # 60 s of audio in 10 s rows
        assert "6 rows" in capsys.readouterr().out


class TestReportVerb:
    def test_merges_reports_into_tables(self, tmp_path, capsys):
        for strategy, fad in [("baseline", 9.41), ("emotion", 6.08)]:
            save_report(
                MetricReport(campaign="Emberfall", strategy=strategy, fad=fad,
                             story=MeanStd(4.0, 2.0, 10)),
                tmp_path / f"{strategy}.json",
            )
        rc = main(["report", str(tmp_path / "baseline.json"),
                   str(tmp_path / "emotion.json"),
                   "-o", str(tmp_path / "tables.txt")])
        assert rc == 0
        text = (tmp_path / "tables.txt").read_text()
        assert "9.41" in text and "6.08" in text and "Emberfall" in text

    def test_accepts_manifests_with_attached_metrics(self, tmp_path, transcript, capsys):
        main(generate_args(tmp_path, transcript))
        main([
            "eval", "--track", str(tmp_path / "out" / "clitest_baseline.wav"),
            "--campaign", "clitest", "--strategy", "baseline",
            "--output-dir", str(tmp_path / "out"),
        ])
        capsys.readouterr()
        manifest = tmp_path / "out" / "clitest_baseline.manifest.json"
        rc = main(["report", str(manifest)])
        assert rc == 0
        assert "Transition" in capsys.readouterr().out

    def test_manifest_without_metrics_is_config_error(self, tmp_path, transcript, capsys):
        main(generate_args(tmp_path, transcript))
        capsys.readouterr()
        manifest = tmp_path / "out" / "clitest_baseline.manifest.json"
        assert main(["report", str(manifest)]) == 1
        assert "run eval first" in capsys.readouterr().err
