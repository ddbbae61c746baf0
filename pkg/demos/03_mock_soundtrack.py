"""
Synthesizing and assembling a continuous track
==============================================

Each window's description is rendered to a 30-second audio segment; every
segment after the first receives the previous segment's final 10 seconds as
a conditioning tail.  Segments are then concatenated sample-exactly and the
boundaries recorded as transitions - the instants the smoothness metric
later inspects.
"""

from pathlib import Path

import numpy as np

from storytrack import MockMusicClient, MusicRequest
from storytrack.audio import assemble, extract_transition_windows, write_wav

descriptions = [
    "Mysterious tavern theme with soft lute",
    "Mysterious tavern theme with soft lute",   # unchanged: same scene
    "Epic brass battle fanfare",                # scene break
]

backend = MockMusicClient()
segments = []
for i, text in enumerate(descriptions):
    tail = segments[-1].tail(10.0) if segments else None
    request = MusicRequest(description=text, previous_audio_tail=tail,
                           duration_s=30.0, sample_rate_hz=32000)
    audio = backend.generate(request)
    audio.index = i
    segments.append(audio)
    print(f"segment {i}: {len(audio.samples)} samples for {text!r}")

track = assemble(segments)
print(f"\ntrack: {track.duration_s:.0f} s, transitions at {track.transitions}")

# The mock keys its tone frequencies to the description, so the unchanged
# description keeps the spectrum across the first transition while the
# scene break at 60 s lands on entirely different tones.
for t in track.transitions:
    before, after = extract_transition_windows(track, t, half_window_s=10.0)
    spectral_shift = np.abs(
        np.abs(np.fft.rfft(before.samples)).argmax()
        - np.abs(np.fft.rfft(after.samples)).argmax()
    )
    print(f"transition at {t:4.0f} s: dominant-bin shift {spectral_shift}")

out = Path("demo_output")
out.mkdir(exist_ok=True)
write_wav(track, out / "mock_soundtrack.wav")
print(f"\nwrote {out / 'mock_soundtrack.wav'}")
