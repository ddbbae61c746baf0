"""Parse timestamped subtitle files and slice them into fixed-length windows.

Three input formats are supported: WebVTT, SRT, and a plain JSON array of
``{"start_s": float, "end_s": float, "text": str}`` objects.  Parsed cues are
grouped into consecutive windows (30 s by default); the text of every cue
whose span intersects a window is joined into that window's transcript.  A
cue that straddles a window boundary contributes to every window it touches,
and silent windows yield an empty-text segment so that the transcript
timeline always tiles ``[0, total_duration)`` exactly.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass
from enum import Enum

from .errors import EmptyFile, MalformedTimestamp, UnsupportedFormat

log = logging.getLogger(__name__)

__all__ = [
    "Cue",
    "TranscriptSegment",
    "SubtitleFormat",
    "parse_subtitles",
    "serialize_subtitles",
    "window_transcripts",
    "segments_to_json",
    "segments_from_json",
]


class SubtitleFormat(Enum):
    WEBVTT = "webvtt"
    SRT = "srt"
    PLAIN_JSON = "plain_json"


@dataclass(frozen=True)
class Cue:
    """One subtitle cue: a span of speech with its time bounds."""

    start_s: float
    end_s: float
    text: str

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise MalformedTimestamp(
                f"cue end {self.end_s} is not after start {self.start_s}"
            )
        if not self.text.strip():
            raise ValueError("cue text is empty after trimming")


@dataclass(frozen=True)
class TranscriptSegment:
    """The speech transcribed within one fixed window of gameplay."""

    index: int
    window_start_s: float
    window_end_s: float
    text: str
    language_tag: str = "und"


# Hours optional in WebVTT ("MM:SS.mmm"), mandatory comma separator in SRT.
_VTT_TS = re.compile(r"^(?:(\d+):)?(\d{1,2}):(\d{1,2})\.(\d{1,3})$")
_SRT_TS = re.compile(r"^(\d+):(\d{1,2}):(\d{1,2})[,.](\d{1,3})$")
_ARROW = "-->"


def _parse_ts(token: str, pattern: re.Pattern, line_no: int) -> float:
    m = pattern.match(token.strip())
    if m is None:
        raise MalformedTimestamp(f"bad timestamp {token.strip()!r}", line=line_no)
    h, mi, s, ms = m.groups()
    hours = int(h) if h else 0
    total_ms = ((hours * 3600 + int(mi) * 60 + int(s)) * 1000) + int(ms.ljust(3, "0"))
    return total_ms / 1000.0


def _split_cue_line(line: str, pattern: re.Pattern, line_no: int) -> tuple[float, float]:
    left, _, right = line.partition(_ARROW)
    # WebVTT allows cue settings after the end timestamp.
    right = right.strip().split(" ")[0] if right.strip() else right
    start = _parse_ts(left, pattern, line_no)
    end = _parse_ts(right, pattern, line_no)
    if end <= start:
        raise MalformedTimestamp(
            f"cue end {end} is not after start {start}", line=line_no
        )
    return start, end


def _blocks(lines: list[str]) -> list[tuple[int, list[str]]]:
    """Group lines into blank-line-separated blocks, keeping line numbers."""
    blocks, current, first = [], [], 0
    for no, line in enumerate(lines, start=1):
        if line.strip():
            if not current:
                first = no
            current.append((no, line))
        elif current:
            blocks.append((first, current))
            current = []
    if current:
        blocks.append((first, current))
    return blocks


def _parse_blockwise(text: str, pattern: re.Pattern, skip_headers: bool) -> list[Cue]:
    cues: list[Cue] = []
    for _, block in _blocks(text.split("\n")):
        arrow_at = next((i for i, (_, l) in enumerate(block) if _ARROW in l), None)
        if arrow_at is None:
            head = block[0][1].strip()
            if skip_headers and (
                head.startswith("WEBVTT") or head.startswith(("NOTE", "STYLE", "REGION"))
            ):
                continue
            if head.isdigit() and len(block) == 1:
                continue  # stray SRT counter with its cue lost to a blank line
            log.warning("skipping block without a timestamp line: %r", head)
            continue
        line_no, cue_line = block[arrow_at]
        start, end = _split_cue_line(cue_line, pattern, line_no)
        body = "\n".join(l for _, l in block[arrow_at + 1 :]).strip()
        if not body:
            log.warning("line %d: dropping cue with empty text", line_no)
            continue
        cues.append(Cue(start, end, body))
    return cues


def _parse_json(text: str) -> list[Cue]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UnsupportedFormat(f"not a JSON cue array: {exc}") from exc
    if not isinstance(payload, list):
        raise UnsupportedFormat("JSON subtitle input must be a top-level array")
    cues = []
    for i, item in enumerate(payload):
        if not isinstance(item, dict) or not {"start_s", "end_s", "text"} <= set(item):
            raise UnsupportedFormat(f"element {i} is not a {{start_s, end_s, text}} object")
        start, end = item["start_s"], item["end_s"]
        if not isinstance(start, (int, float)) or not isinstance(end, (int, float)):
            raise MalformedTimestamp(f"non-numeric timestamps in element {i}", line=i)
        if end <= start or start < 0:
            raise MalformedTimestamp(
                f"bad span [{start}, {end}] in element {i}", line=i
            )
        body = str(item["text"]).strip()
        if not body:
            log.warning("element %d: dropping cue with empty text", i)
            continue
        cues.append(Cue(float(start), float(end), body))
    return cues


def parse_subtitles(data: bytes, format: SubtitleFormat) -> list[Cue]:
    """Decode ``data`` and return its cues sorted by start time.

    Raises UnsupportedFormat for undecodable or structurally wrong input,
    MalformedTimestamp (with a line number) for broken cue timing, and
    EmptyFile when no cue survives parsing.
    """
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise UnsupportedFormat(f"input does not decode as UTF-8: {exc}") from exc

    if format is SubtitleFormat.WEBVTT:
        cues = _parse_blockwise(text, _VTT_TS, skip_headers=True)
    elif format is SubtitleFormat.SRT:
        cues = _parse_blockwise(text, _SRT_TS, skip_headers=False)
    elif format is SubtitleFormat.PLAIN_JSON:
        cues = _parse_json(text)
    else:  # pragma: no cover - enum is closed
        raise UnsupportedFormat(f"unknown subtitle format {format!r}")

    if not cues:
        raise EmptyFile("no cues found in input")
    return sorted(cues, key=lambda c: c.start_s)


def _format_vtt_ts(seconds: float) -> str:
    ms = int(round(seconds * 1000))
    h, rem = divmod(ms, 3600_000)
    m, rem = divmod(rem, 60_000)
    s, ms = divmod(rem, 1000)
    return f"{h:02d}:{m:02d}:{s:02d}.{ms:03d}"


def _format_srt_ts(seconds: float) -> str:
    return _format_vtt_ts(seconds).replace(".", ",")


def serialize_subtitles(cues: list[Cue], format: SubtitleFormat) -> bytes:
    """Render cues back to bytes; inverse of :func:`parse_subtitles`.

    Timestamps are written at millisecond precision, so cues that originate
    from any of the supported formats round-trip exactly.
    """
    if format is SubtitleFormat.WEBVTT:
        parts = ["WEBVTT", ""]
        for cue in cues:
            parts.append(f"{_format_vtt_ts(cue.start_s)} {_ARROW} {_format_vtt_ts(cue.end_s)}")
            parts.append(cue.text)
            parts.append("")
        return "\n".join(parts).encode("utf-8")
    if format is SubtitleFormat.SRT:
        parts = []
        for i, cue in enumerate(cues, start=1):
            parts.append(str(i))
            parts.append(f"{_format_srt_ts(cue.start_s)} {_ARROW} {_format_srt_ts(cue.end_s)}")
            parts.append(cue.text)
            parts.append("")
        return "\n".join(parts).encode("utf-8")
    if format is SubtitleFormat.PLAIN_JSON:
        records = [
            {"start_s": c.start_s, "end_s": c.end_s, "text": c.text} for c in cues
        ]
        return json.dumps(records, ensure_ascii=False, indent=2).encode("utf-8")
    raise UnsupportedFormat(f"unknown subtitle format {format!r}")  # pragma: no cover


def window_transcripts(
    cues: list[Cue],
    window_s: float = 30.0,
    *,
    total_duration_s: float,
    language_tag: str = "und",
) -> list[TranscriptSegment]:
    """Tile ``[0, total_duration_s)`` into windows and collect cue text.

    A cue contributes to every window its half-open span ``[start, end)``
    intersects; texts are joined with single spaces in cue order.  Windows
    without speech get an empty text, never dropped: downstream audio
    segments are indexed against this exact tiling.
    """
    if window_s <= 0:
        raise ValueError(f"window_s must be positive, got {window_s}")
    if cues and total_duration_s < max(c.end_s for c in cues):
        raise ValueError("total_duration_s is shorter than the last cue")

    ordered = sorted(cues, key=lambda c: c.start_s)
    count = math.ceil(round(total_duration_s / window_s, 9))
    segments = []
    for i in range(count):
        lo = i * window_s
        hi = min((i + 1) * window_s, total_duration_s)
        text = " ".join(c.text for c in ordered if c.start_s < hi and c.end_s > lo)
        segments.append(
            TranscriptSegment(
                index=i,
                window_start_s=lo,
                window_end_s=hi,
                text=text,
                language_tag=language_tag,
            )
        )
    return segments


def segments_to_json(segments: list[TranscriptSegment]) -> str:
    """Stable field names: index, window_start_s, window_end_s, text, language_tag."""
    return json.dumps(
        [
            {
                "index": s.index,
                "window_start_s": s.window_start_s,
                "window_end_s": s.window_end_s,
                "text": s.text,
                "language_tag": s.language_tag,
            }
            for s in segments
        ],
        ensure_ascii=False,
        indent=2,
    )


def segments_from_json(payload: str) -> list[TranscriptSegment]:
    return [TranscriptSegment(**record) for record in json.loads(payload)]
