"""Batch tool and server launcher.

``embed-file`` converts one WAV into a matrix file byte-compatible with the
endpoint's payload.  Exit codes: 0 ok, 2 unknown model tag, 3 audio too
short for one window, 4 unreadable input, 1 anything else.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .audio import AudioDecodeError, read_wav_mono, resample, slice_windows
from .matrix import matrix_payload
from .models import build_registry

EXIT_UNKNOWN_TAG = 2
EXIT_TOO_SHORT = 3
EXIT_BAD_INPUT = 4


def embed_file(
    input_wav: str | Path,
    output_emb: str | Path,
    span_s: float,
    kind: str,
    model_tag: str,
    model_dir: str | None = None,
) -> int:
    registry = build_registry(model_dir if model_dir is not None else os.environ.get("MODEL_DIR"))
    model = registry.get(model_tag)
    if model is None:
        print(f"unknown model_tag {model_tag!r}; available: {sorted(registry)}",
              file=sys.stderr)
        return EXIT_UNKNOWN_TAG
    try:
        samples, rate = read_wav_mono(input_wav)
    except (OSError, AudioDecodeError) as exc:
        print(f"cannot read {input_wav}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    samples = resample(samples, rate, model.native_rate_hz)
    windows = slice_windows(samples, model.native_rate_hz, span_s)
    if windows.shape[0] == 0:
        print(f"audio shorter than one {span_s:g} s window", file=sys.stderr)
        return EXIT_TOO_SHORT
    payload = matrix_payload(model.rows(windows), span_s, model_tag, kind)
    Path(output_emb).write_bytes(payload)
    print(f"wrote {output_emb} ({windows.shape[0]} rows x {model.dim} dims, "
          f"{span_s:g} s per row, {kind})")
    return 0


def embed_file_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed-file",
        description="Produce a per-window embedding/logits matrix from a WAV file.",
    )
    parser.add_argument("input_wav", type=Path)
    parser.add_argument("output_emb", type=Path)
    parser.add_argument("--span", type=float, default=10.0, help="seconds per row")
    parser.add_argument("--kind", choices=["embedding", "logits"], default="embedding")
    parser.add_argument("--model-tag", default="spectral-16")
    parser.add_argument("--model-dir", default=None,
                        help="directory of .npz checkpoints (default: $MODEL_DIR)")
    args = parser.parse_args(argv)
    try:
        return embed_file(args.input_wav, args.output_emb, args.span, args.kind,
                          args.model_tag, args.model_dir)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def service_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed-service", description="Run the embedding HTTP service."
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=int(os.environ.get("PORT", "8600")))
    args = parser.parse_args(argv)

    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(embed_file_main())
