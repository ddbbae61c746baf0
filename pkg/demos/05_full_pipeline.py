"""
End-to-end: transcript in, scored soundtrack out
================================================

A complete reproducible run against the deterministic mock backends: parse a
transcript, describe each window with the continuation strategy, synthesize
and assemble the track, then score it.  Everything lands in ./demo_output,
including the manifest that makes the run auditable.

The equivalent CLI invocations:

    storytrack generate --transcript episode.vtt --strategy dc \\
        --seed 42 --mock-llm --mock-music --output-dir demo_output
    storytrack eval --track demo_output/demo_dc.wav --strategy dc \\
        --output-dir demo_output
"""

from pathlib import Path

from storytrack import RunConfig, Strategy, render_tables, run_eval, run_generate

out = Path("demo_output")
out.mkdir(exist_ok=True)

transcript = out / "episode.vtt"
transcript.write_text("""WEBVTT

00:00:02.000 --> 00:00:08.000
We enter the ruined keep.

00:00:31.000 --> 00:00:40.000
A dragon stirs in the dark.

00:01:05.000 --> 00:01:12.000
Roll for initiative!

00:01:41.000 --> 00:01:49.000
The blade glances off its scales.
""", encoding="utf-8")

config = RunConfig(
    campaign_name="demo",
    transcript_path=transcript,
    strategy=Strategy.DESCRIPTION_CONTINUATION,
    seed=42,
    output_dir=out,
)

manifest = run_generate(config)
print(f"status: {manifest.status}")
print(f"track:  {manifest.artifacts['track_wav']} "
      f"({manifest.artifacts['duration_s']:.0f} s)")
print(f"transitions: {manifest.transitions}")
for segment in manifest.segments:
    d = segment["description"]
    marker = " (continued)" if d["continued_from_previous"] else ""
    print(f"  window {d['index']}: {d['text']}{marker}")

# Scoring: without a reference campaign recording or studio corpus the
# report carries only the transition metric and notes what was skipped.
report = run_eval(config, manifest.artifacts["track_wav"])
print()
print(render_tables([report]))

# Re-running is free: every backend response is now cached under
# demo_output/cache, and a warm run produces byte-identical artifacts.
again = run_generate(config)
hits = sum(s["music"]["cache_hits"] for s in again.segments)
print(f"warm run cache hits: {hits}/{len(again.segments)} music segments")
