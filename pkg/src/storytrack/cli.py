"""Command-line surface: generate, eval, embed, and report verbs.

Exit codes: 0 on success, 1 on configuration problems, 2 when a run aborts
partway (a partial manifest is still written).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .audio import read_wav
from .director import Strategy
from .embeddings import resolve_embedding_source
from .errors import ConfigError, StorytrackError
from .gateway import ApiStyle, BackendConfig, MOCK_ENDPOINT
from .metrics import EmbeddingKind, write_embedding_file
from .pipeline import RunConfig, run_eval, run_generate
from .report import load_report, render_tables

_STRATEGY_FLAGS = {s.value: s for s in Strategy}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; bad invocations are
    # config errors here, which the contract maps to exit code 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="run config file (JSON or TOML)")
    parser.add_argument("--strategy", choices=sorted(_STRATEGY_FLAGS),
                        help="description strategy")
    parser.add_argument("--window-s", type=float, dest="window_s",
                        help="transcript window length in seconds")
    parser.add_argument("--seed", type=int, help="run seed")
    parser.add_argument("--mock-llm", action="store_true",
                        help="use the deterministic mock chat backend")
    parser.add_argument("--mock-music", action="store_true",
                        help="use the deterministic mock synthesizer")
    parser.add_argument("--output-dir", type=Path, dest="output_dir",
                        help="where artifacts land")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="storytrack",
                     description="Transcript-driven soundtrack generation and scoring.")
    verbs = parser.add_subparsers(dest="verb", required=True)

    gen = verbs.add_parser("generate", parents=[], help="run the generation pipeline")
    _common_flags(gen)
    gen.add_argument("--transcript", type=Path, help="subtitle file (.vtt/.srt/.json)")
    gen.add_argument("--campaign", help="campaign name for artifacts and reports")

    ev = verbs.add_parser("eval", help="score a generated track")
    _common_flags(ev)
    ev.add_argument("--track", type=Path, required=True, help="generated WAV to score")
    ev.add_argument("--campaign", help="campaign name for artifacts and reports")

    em = verbs.add_parser("embed", help="produce an embedding matrix file from a WAV")
    em.add_argument("input_wav", type=Path)
    em.add_argument("output_emb", type=Path)
    em.add_argument("--span", type=float, default=10.0, help="seconds per row")
    em.add_argument("--kind", choices=[k.value for k in EmbeddingKind],
                    default=EmbeddingKind.EMBEDDING.value)
    em.add_argument("--source", default=None,
                    help="embedding source (builtin:spectral[:N] or service URL)")
    em.add_argument("--config", type=Path, help="run config file (JSON or TOML)")

    rep = verbs.add_parser("report", help="re-render metric tables from report JSON files")
    rep.add_argument("reports", type=Path, nargs="+")
    rep.add_argument("-o", "--output", type=Path, help="write tables here instead of stdout")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    if getattr(args, "transcript", None):
        config.transcript_path = args.transcript
    if getattr(args, "campaign", None):
        config.campaign_name = args.campaign
    if args.strategy:
        config.strategy = _STRATEGY_FLAGS[args.strategy]
    if args.window_s is not None:
        if args.window_s <= 0:
            raise ConfigError("--window-s must be positive")
        config.window_s = args.window_s
    if args.seed is not None:
        config.seed = args.seed
    if args.output_dir is not None:
        config.output_dir = args.output_dir
    if args.mock_llm:
        config.llm_backend = BackendConfig(
            endpoint_url=MOCK_ENDPOINT, api_style=ApiStyle.CHAT_COMPLETION
        )
    if args.mock_music:
        config.music_backend = BackendConfig(
            endpoint_url=MOCK_ENDPOINT, api_style=ApiStyle.TEXT_TO_MUSIC
        )
    return config


def _cmd_generate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    manifest = run_generate(config)
    print(f"wrote {manifest.artifacts['track_wav']} "
          f"({len(manifest.segments)} segments, "
          f"{len(manifest.transitions)} transitions)")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    report = run_eval(config, args.track)
    print(render_tables([report]), end="")
    return 0


def _cmd_embed(args: argparse.Namespace) -> int:
    source = args.source
    if source is None and args.config:
        source = RunConfig.from_file(args.config).embedding_source
    provider = resolve_embedding_source(source or "builtin:spectral")
    track = read_wav(args.input_wav)
    kind = EmbeddingKind(args.kind)
    matrix = provider.embed(
        track.samples, track.sample_rate_hz, segment_span_s=args.span, kind=kind
    )
    write_embedding_file(args.output_emb, matrix, kind)
    print(f"wrote {args.output_emb} ({matrix.n} rows x {matrix.dim} dims, "
          f"{args.span:g} s per row, {kind.value})")
    return 0


def _load_report_or_manifest(path: Path):
    import json

    from .report import MetricReport

    data = json.loads(path.read_text(encoding="utf-8"))
    if "segments" in data:  # a run manifest with eval results attached
        if not data.get("metrics"):
            raise ConfigError(f"{path} is a manifest without metric results; run eval first")
        return MetricReport.from_json_dict(data["metrics"])
    return load_report(path)


def _cmd_report(args: argparse.Namespace) -> int:
    reports = [_load_report_or_manifest(path) for path in args.reports]
    text = render_tables(reports)
    if args.output:
        args.output.write_text(text, encoding="utf-8")
        print(f"wrote {args.output}")
    else:
        print(text, end="")
    return 0


_DISPATCH = {
    "generate": _cmd_generate,
    "eval": _cmd_eval,
    "embed": _cmd_embed,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except StorytrackError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
