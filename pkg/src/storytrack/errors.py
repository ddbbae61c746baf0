"""Exception types shared across the package."""

from __future__ import annotations


class StorytrackError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(StorytrackError):
    """Run configuration is invalid or references missing files."""


# --------------------------------------------------------------------------
# subtitle ingestion
# --------------------------------------------------------------------------


class UnsupportedFormat(StorytrackError):
    """The input is not in (or does not match) a supported subtitle format."""


class MalformedTimestamp(StorytrackError):
    """A cue timestamp is unparseable or inconsistent (end before start)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyFile(StorytrackError):
    """No cues could be read from the input."""


# --------------------------------------------------------------------------
# model backends
# --------------------------------------------------------------------------


class BackendUnavailable(StorytrackError):
    """A model backend could not be reached after all retries."""


class MalformedResponse(StorytrackError):
    """A backend answered with a payload that violates the wire contract."""


class DurationMismatch(StorytrackError):
    """A music backend returned audio of the wrong length."""


# --------------------------------------------------------------------------
# audio assembly and I/O
# --------------------------------------------------------------------------


class SampleRateMismatch(StorytrackError):
    """Segments with differing sample rates cannot be assembled."""


class NonContiguousIndices(StorytrackError):
    """Segment indices must run 0, 1, 2, ... without gaps."""


class WindowOutOfBounds(StorytrackError):
    """A transition analysis window would extend past the track edge."""


class IoError(StorytrackError):
    """Reading or writing an audio file failed at the OS level."""


class UnsupportedWavLayout(StorytrackError):
    """The WAV file is not uncompressed 16-bit PCM."""


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------


class TooFewSamples(StorytrackError):
    """Fitting a Gaussian needs at least two embedding rows."""


class DimensionMismatch(StorytrackError):
    """Operands have incompatible dimensions."""


class NonFiniteResult(StorytrackError):
    """A covariance is degenerate beyond the clamping tolerance."""


class LengthMismatch(StorytrackError):
    """Paired probability lists must have equal length."""


class NoValidTransitions(StorytrackError):
    """Every transition was skipped; smoothness is undefined."""


class TrackTooShort(StorytrackError):
    """The track is shorter than the requested evaluation window."""


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------


class CacheCorrupt(StorytrackError):
    """A cache entry failed its checksum; it was evicted."""


class MissingReference(StorytrackError):
    """A metric's reference material was not supplied."""
