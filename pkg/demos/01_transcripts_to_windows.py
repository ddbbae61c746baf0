"""
From subtitle cues to fixed transcript windows
==============================================

Subtitle files carry speech as irregular timestamped cues.  The generation
pipeline instead wants one transcript per fixed 30-second window, tiling the
whole session.  This script parses a small WebVTT snippet and shows how cues
are distributed over windows.
"""

from storytrack import SubtitleFormat, parse_subtitles, window_transcripts
from storytrack.transcripts import segments_to_json

# A two-minute excerpt.  Note the second cue straddles the 30 s boundary:
# it will contribute its text to BOTH windows it touches, because splitting
# a sentence would rob one of the windows of its scene context.
vtt = b"""WEBVTT

00:00:02.000 --> 00:00:08.000
We enter the ruined keep.

00:00:25.000 --> 00:00:38.000
A dragon stirs in the dark, and a battle will start!

00:01:05.000 --> 00:01:12.000
Roll for initiative!
"""

cues = parse_subtitles(vtt, SubtitleFormat.WEBVTT)
print(f"parsed {len(cues)} cues; last ends at {cues[-1].end_s:.0f} s")

# Tile [0, 120) into 30-second windows.  Window 3 has no speech at all, but
# it still exists: every window must later line up with one audio segment.
segments = window_transcripts(cues, window_s=30.0, total_duration_s=120.0)
for seg in segments:
    span = f"[{seg.window_start_s:5.1f}, {seg.window_end_s:5.1f})"
    print(f"window {seg.index} {span}: {seg.text!r}")

# The windows serialize with stable field names for downstream tools.
print()
print(segments_to_json(segments))
