"""End-to-end orchestration: transcript -> descriptions -> audio -> metrics.

A run is driven by a :class:`RunConfig` (JSON or TOML file plus overrides)
and leaves behind three artifacts in ``output_dir``: the assembled WAV, a
manifest JSON that fully describes what happened (segments, descriptions,
transitions, cache hits, checksums), and - after evaluation - a metric
report.  Backend responses are cached content-addressed under
``output_dir/cache`` so repeated runs skip inference; with deterministic
mock backends and a fixed seed, two runs produce bit-identical audio.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .audio import (
    AudioSegment,
    Track,
    assemble,
    collect_transition_windows,
    pcm16_decode,
    pcm16_encode,
    read_wav,
    write_wav,
)
from .director import DirectorState, Strategy, describe_segment
from .embeddings import resolve_embedding_source
from .errors import ConfigError, StorytrackError, TooFewSamples, TrackTooShort
from .gateway import (
    ApiStyle,
    BackendConfig,
    HttpLlmClient,
    HttpMusicClient,
    LlmBackend,
    LlmRequest,
    MockLlmClient,
    MockMusicClient,
    MusicBackend,
    MusicRequest,
    MOCK_ENDPOINT,
    hash_tail,
)
from .metrics import (
    EmbeddingKind,
    KldDirection,
    fad_score,
    read_embedding_file,
    sample_eval_window,
    softmax,
    story_alignment,
    transition_smoothness,
)
from .report import MetricReport, render_tables, save_report
from .transcripts import SubtitleFormat, parse_subtitles, window_transcripts

log = logging.getLogger(__name__)

__all__ = [
    "RunConfig",
    "RunManifest",
    "ResponseCache",
    "cache_key",
    "run_generate",
    "run_eval",
]

_SUFFIX_FORMATS = {
    ".vtt": SubtitleFormat.WEBVTT,
    ".webvtt": SubtitleFormat.WEBVTT,
    ".srt": SubtitleFormat.SRT,
    ".json": SubtitleFormat.PLAIN_JSON,
}

FAD_SEGMENT_SPAN_S = 30.0
ALIGNMENT_SEGMENT_SPAN_S = 10.0


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


def _mock_backend(style: ApiStyle) -> BackendConfig:
    return BackendConfig(endpoint_url=MOCK_ENDPOINT, api_style=style)


@dataclass
class RunConfig:
    """Everything one reproducible run needs, seed included."""

    campaign_name: str = "campaign"
    transcript_path: Path | None = None
    strategy: Strategy = Strategy.BASELINE
    window_s: float = 30.0
    sample_rate_hz: int = 32000
    crossfade_ms: float = 0.0
    tail_s: float = 10.0
    temperature: float = 0.7
    language_tag: str = "und"
    llm_backend: BackendConfig = field(default_factory=lambda: _mock_backend(ApiStyle.CHAT_COMPLETION))
    music_backend: BackendConfig = field(default_factory=lambda: _mock_backend(ApiStyle.TEXT_TO_MUSIC))
    embedding_source: object = "builtin:spectral"
    reference_audio_path: Path | None = None
    reference_corpus_path: Path | None = None
    eval_window_minutes: float = 30.0
    transition_half_window_s: float = 10.0
    kld_direction: KldDirection = KldDirection.REFERENCE_FIRST
    seed: int = 0
    output_dir: Path = Path("runs")

    def __post_init__(self):
        if self.window_s <= 0:
            raise ConfigError(f"window_s must be positive, got {self.window_s}")
        for attr in ("transcript_path", "reference_audio_path", "reference_corpus_path"):
            value = getattr(self, attr)
            if value is not None:
                setattr(self, attr, Path(value))
        self.output_dir = Path(self.output_dir)
        if isinstance(self.strategy, str):
            self.strategy = Strategy(self.strategy)
        if isinstance(self.kld_direction, str):
            self.kld_direction = KldDirection(self.kld_direction)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for name, style in (
            ("llm_backend", ApiStyle.CHAT_COMPLETION),
            ("music_backend", ApiStyle.TEXT_TO_MUSIC),
        ):
            if isinstance(kwargs.get(name), dict):
                try:
                    kwargs[name] = BackendConfig(api_style=style, **kwargs[name])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad {name}: {exc}") from exc
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad run config: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if path.suffix.lower() == ".toml":
            if sys.version_info >= (3, 11):
                import tomllib
            else:
                import tomli as tomllib
            try:
                data = tomllib.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
                raise ConfigError(f"bad TOML in {path}: {exc}") from exc
        else:
            try:
                data = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ConfigError(f"bad JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a single object/table")
        return cls.from_dict(data)

    def snapshot(self) -> dict:
        """A JSON-safe copy of the config for the manifest (token redacted)."""

        def scrub(backend: BackendConfig) -> dict:
            return {
                "endpoint_url": backend.endpoint_url,
                "timeout_s": backend.timeout_s,
                "max_retries": backend.max_retries,
                "api_style": backend.api_style.value,
                "auth_token": "***" if backend.auth_token else None,
                "max_in_flight": backend.max_in_flight,
            }

        return {
            "campaign_name": self.campaign_name,
            "transcript_path": str(self.transcript_path) if self.transcript_path else None,
            "strategy": self.strategy.value,
            "window_s": self.window_s,
            "sample_rate_hz": self.sample_rate_hz,
            "crossfade_ms": self.crossfade_ms,
            "tail_s": self.tail_s,
            "temperature": self.temperature,
            "language_tag": self.language_tag,
            "llm_backend": scrub(self.llm_backend),
            "music_backend": scrub(self.music_backend),
            "embedding_source": str(self.embedding_source),
            "reference_audio_path": str(self.reference_audio_path)
            if self.reference_audio_path
            else None,
            "reference_corpus_path": str(self.reference_corpus_path)
            if self.reference_corpus_path
            else None,
            "eval_window_minutes": self.eval_window_minutes,
            "transition_half_window_s": self.transition_half_window_s,
            "kld_direction": self.kld_direction.value,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
        }


# --------------------------------------------------------------------------
# content-addressed response cache
# --------------------------------------------------------------------------


def cache_key(request_payload: dict) -> str:
    """Stable 64-bit hex key over a canonicalized request payload."""
    canonical = json.dumps(request_payload, sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(canonical.encode("utf-8"), digest_size=8).hexdigest()


class ResponseCache:
    """Backend responses stored one file per key, checksummed.

    A corrupted entry (checksum mismatch, unreadable JSON) is evicted and the
    call re-issued; the event lands in the run manifest notes.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.events: list[str] = []

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> bytes | None:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
            payload = base64.b64decode(entry["payload_b64"])
            expected = entry["sha256"]
        except (OSError, ValueError, KeyError, json.JSONDecodeError):
            payload, expected = b"", "unreadable"
        if hashlib.sha256(payload).hexdigest() != expected:
            log.warning("cache entry %s corrupt; evicting and re-issuing", key)
            self.events.append(f"cache entry {key} corrupt; evicted and re-issued")
            path.unlink(missing_ok=True)
            return None
        return payload

    def put(self, key: str, payload: bytes) -> None:
        entry = {
            "key": key,
            "sha256": hashlib.sha256(payload).hexdigest(),
            "payload_b64": base64.b64encode(payload).decode("ascii"),
        }
        self._path(key).write_text(json.dumps(entry), encoding="utf-8")


@dataclass
class _CallStats:
    calls: int = 0
    cache_hits: int = 0
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {"calls": self.calls, "cache_hits": self.cache_hits,
                "seconds": round(self.seconds, 6)}


class _CachingLlm:
    """Wraps any LLM backend with the response cache and per-segment stats."""

    def __init__(self, inner: LlmBackend, cache: ResponseCache):
        self._inner = inner
        self._cache = cache
        self.stats = _CallStats()

    def take_stats(self) -> dict:
        stats, self.stats = self.stats, _CallStats()
        return stats.as_dict()

    def complete(self, request: LlmRequest) -> str:
        key = cache_key(
            {
                "kind": "llm",
                "system": request.system_prompt,
                "messages": [[m.role.value, m.text] for m in request.messages],
                "temperature": request.temperature,
                "seed": request.seed,
            }
        )
        started = time.perf_counter()
        cached = self._cache.get(key)
        if cached is not None:
            self.stats.calls += 1
            self.stats.cache_hits += 1
            self.stats.seconds += time.perf_counter() - started
            return cached.decode("utf-8")
        text = self._inner.complete(request)
        if text.strip():
            # Empty replies are transient failures; caching them would make
            # the retry pointless on warm runs.
            self._cache.put(key, text.encode("utf-8"))
        self.stats.calls += 1
        self.stats.seconds += time.perf_counter() - started
        return text


class _CachingMusic:
    """Same idea for the music backend; payloads are quantized PCM bytes."""

    def __init__(self, inner: MusicBackend, cache: ResponseCache):
        self._inner = inner
        self._cache = cache
        self.stats = _CallStats()

    def take_stats(self) -> dict:
        stats, self.stats = self.stats, _CallStats()
        return stats.as_dict()

    def generate(self, request: MusicRequest) -> AudioSegment:
        key = cache_key(
            {
                "kind": "music",
                "description": request.description,
                "tail_hash": hash_tail(request.previous_audio_tail),
                "duration_s": request.duration_s,
                "sample_rate_hz": request.sample_rate_hz,
            }
        )
        started = time.perf_counter()
        cached = self._cache.get(key)
        if cached is not None:
            self.stats.calls += 1
            self.stats.cache_hits += 1
            self.stats.seconds += time.perf_counter() - started
            return AudioSegment(pcm16_decode(cached), request.sample_rate_hz)
        segment = self._inner.generate(request)
        self._cache.put(key, pcm16_encode(segment.samples))
        self.stats.calls += 1
        self.stats.seconds += time.perf_counter() - started
        # Return the quantized form so cold and warm runs are bit-identical.
        return AudioSegment(pcm16_decode(pcm16_encode(segment.samples)), request.sample_rate_hz)


# --------------------------------------------------------------------------
# manifest
# --------------------------------------------------------------------------


@dataclass
class RunManifest:
    """A full account of one run; enough to re-execute or audit it."""

    config: dict
    segments: list[dict] = field(default_factory=list)
    transitions: list[float] = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    status: str = "incomplete"
    notes: list[str] = field(default_factory=list)
    metrics: dict | None = None

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "segments": self.segments,
            "transitions": self.transitions,
            "artifacts": self.artifacts,
            "timings": self.timings,
            "status": self.status,
            "notes": self.notes,
            "metrics": self.metrics,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def _make_llm(config: BackendConfig) -> LlmBackend:
    return MockLlmClient() if config.is_mock else HttpLlmClient(config)


def _make_music(config: BackendConfig) -> MusicBackend:
    return MockMusicClient() if config.is_mock else HttpMusicClient(config)


def _description_record(description) -> dict:
    return {
        "index": description.index,
        "strategy": description.strategy.value,
        "text": description.text,
        "emotion": description.emotion.value if description.emotion else None,
        "continued_from_previous": description.continued_from_previous,
    }


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _artifact_stem(config: RunConfig) -> str:
    safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in config.campaign_name)
    return f"{safe}_{config.strategy.value}"


# --------------------------------------------------------------------------
# generation
# --------------------------------------------------------------------------


def run_generate(
    config: RunConfig,
    llm: LlmBackend | None = None,
    music: MusicBackend | None = None,
) -> RunManifest:
    """Produce the soundtrack WAV, the per-window descriptions, and a manifest.

    Audio generation is strictly sequential because each segment continues
    the previous one's tail.  Any backend error aborts the run; the partial
    manifest is still written, flagged incomplete, before the error is
    re-raised.
    """
    started_at = datetime.now(timezone.utc).isoformat()
    clock_start = time.perf_counter()

    if config.transcript_path is None or not config.transcript_path.exists():
        raise ConfigError(f"transcript not found: {config.transcript_path}")
    suffix = config.transcript_path.suffix.lower()
    if suffix not in _SUFFIX_FORMATS:
        raise ConfigError(f"cannot infer subtitle format from suffix {suffix!r}")
    cues = parse_subtitles(config.transcript_path.read_bytes(), _SUFFIX_FORMATS[suffix])

    # Round the timeline up to whole windows so every generated segment has
    # the full configured length and transitions stay on the window grid.
    last_cue_end = max(c.end_s for c in cues)
    total_duration = math.ceil(round(last_cue_end / config.window_s, 9)) * config.window_s
    segments = window_transcripts(
        cues,
        config.window_s,
        total_duration_s=total_duration,
        language_tag=config.language_tag,
    )

    config.output_dir.mkdir(parents=True, exist_ok=True)
    cache = ResponseCache(config.output_dir / "cache")
    caching_llm = _CachingLlm(llm if llm is not None else _make_llm(config.llm_backend), cache)
    caching_music = _CachingMusic(
        music if music is not None else _make_music(config.music_backend), cache
    )

    manifest = RunManifest(config=config.snapshot())
    state = DirectorState()
    audio: list[AudioSegment] = []
    try:
        for segment in segments:
            description = describe_segment(
                segment,
                config.strategy,
                caching_llm,
                state,
                temperature=config.temperature,
                seed=config.seed,
            )
            tail = audio[-1].tail(config.tail_s) if audio else None
            request = MusicRequest(
                description=description.text,
                previous_audio_tail=tail,
                duration_s=config.window_s,
                sample_rate_hz=config.sample_rate_hz,
            )
            rendered = caching_music.generate(request)
            audio.append(replace(rendered, index=segment.index))
            manifest.segments.append(
                {
                    "index": segment.index,
                    "window_start_s": segment.window_start_s,
                    "window_end_s": segment.window_end_s,
                    "transcript": segment.text,
                    "description": _description_record(description),
                    "llm": caching_llm.take_stats(),
                    "music": caching_music.take_stats(),
                }
            )

        track = assemble(audio, crossfade_ms=config.crossfade_ms)
        wav_path = config.output_dir / f"{_artifact_stem(config)}.wav"
        write_wav(track, wav_path)
        manifest.transitions = list(track.transitions)
        manifest.artifacts = {
            "track_wav": str(wav_path),
            "track_sha256": _sha256_file(wav_path),
            "duration_s": track.duration_s,
        }
        manifest.status = "complete"
    except StorytrackError as exc:
        manifest.status = "incomplete"
        manifest.notes.append(f"aborted: {exc}")
        raise
    finally:
        manifest.notes.extend(cache.events)
        manifest.timings = {
            "started_at": started_at,
            "finished_at": datetime.now(timezone.utc).isoformat(),
            "wall_s": round(time.perf_counter() - clock_start, 6),
        }
        manifest.save(config.output_dir / f"{_artifact_stem(config)}.manifest.json")
    return manifest


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


def _grid_transitions(duration_s: float, window_s: float) -> list[float]:
    out = []
    k = 1
    while k * window_s < duration_s - 1e-9:
        out.append(k * window_s)
        k += 1
    return out


def _crop(track: Track, offset_s: float, window_s: float) -> np.ndarray:
    lo = int(round(offset_s * track.sample_rate_hz))
    hi = int(round((offset_s + window_s) * track.sample_rate_hz))
    return track.samples[lo : min(hi, len(track.samples))]


def _load_corpus_matrix(config: RunConfig, provider):
    path = config.reference_corpus_path
    if path.suffix.lower() == ".emb":
        matrix, _ = read_embedding_file(path)
        if matrix.source_tag != provider.source_tag:
            raise ConfigError(
                f"corpus embeddings come from {matrix.source_tag!r} but this "
                f"report uses {provider.source_tag!r}; one source per report"
            )
        return matrix
    corpus = read_wav(path)
    return provider.embed(
        corpus.samples,
        corpus.sample_rate_hz,
        segment_span_s=FAD_SEGMENT_SPAN_S,
        kind=EmbeddingKind.EMBEDDING,
    )


def run_eval(config: RunConfig, generated_track: str | Path) -> MetricReport:
    """Score a generated track; metrics without references are noted, not faked.

    The random evaluation crop is seeded and shared: the same offset is
    applied to the reference campaign audio and the generated track so that
    alignment windows stay paired by timeline position.
    """
    track_path = Path(generated_track)
    if not track_path.exists():
        raise ConfigError(f"generated track not found: {track_path}")
    track = read_wav(track_path)

    manifest_path = track_path.parent / (track_path.stem + ".manifest.json")
    if manifest_path.exists():
        transitions = [float(t) for t in RunManifest.load(manifest_path).transitions]
    else:
        transitions = _grid_transitions(track.duration_s, config.window_s)
        log.info("no manifest next to %s; assuming %g s transition grid",
                 track_path, config.window_s)
    track = Track(track.samples, track.sample_rate_hz, transitions)

    provider = resolve_embedding_source(config.embedding_source)
    report = MetricReport(campaign=config.campaign_name, strategy=config.strategy.value)
    report.metadata = {
        "kld_direction": config.kld_direction.value,
        "std_convention": "population",
        "embedding_source": provider.source_tag,
        "seed": config.seed,
        "track": str(track_path),
    }

    reference = None
    if config.reference_audio_path is not None:
        if not config.reference_audio_path.exists():
            raise ConfigError(f"reference audio not found: {config.reference_audio_path}")
        reference = read_wav(config.reference_audio_path)

    crop_basis = min(track.duration_s, reference.duration_s) if reference else track.duration_s
    try:
        offset = sample_eval_window(crop_basis, config.eval_window_minutes, config.seed)
        crop_window = config.eval_window_minutes * 60.0
    except TrackTooShort:
        offset, crop_window = 0.0, crop_basis
        report.notes.append(
            f"evaluation window: track shorter than {config.eval_window_minutes:g} min; "
            "whole track used"
        )
    report.metadata["crop_offset_s"] = offset
    report.metadata["crop_window_s"] = crop_window

    # Audio quality: generated crop vs. the studio reference corpus.
    if config.reference_corpus_path is not None:
        if not config.reference_corpus_path.exists():
            raise ConfigError(f"reference corpus not found: {config.reference_corpus_path}")
        corpus_matrix = _load_corpus_matrix(config, provider)
        generated_matrix = provider.embed(
            _crop(track, offset, crop_window),
            track.sample_rate_hz,
            segment_span_s=FAD_SEGMENT_SPAN_S,
            kind=EmbeddingKind.EMBEDDING,
        )
        try:
            report.fad = fad_score(corpus_matrix, generated_matrix)
        except TooFewSamples as exc:
            report.notes.append(f"FAD skipped: {exc}")
        if reference is not None:
            human_matrix = provider.embed(
                _crop(reference, offset, crop_window),
                reference.sample_rate_hz,
                segment_span_s=FAD_SEGMENT_SPAN_S,
                kind=EmbeddingKind.EMBEDDING,
            )
            try:
                report.human_fad = fad_score(corpus_matrix, human_matrix)
            except TooFewSamples as exc:
                report.notes.append(f"human FAD skipped: {exc}")
    else:
        report.notes.append("FAD skipped: no reference corpus")

    # Story alignment: paired windows of reference vs. generated, same crop.
    if reference is not None:
        generated_logits = provider.embed(
            _crop(track, offset, crop_window),
            track.sample_rate_hz,
            segment_span_s=ALIGNMENT_SEGMENT_SPAN_S,
            kind=EmbeddingKind.LOGITS,
        )
        reference_logits = provider.embed(
            _crop(reference, offset, crop_window),
            reference.sample_rate_hz,
            segment_span_s=ALIGNMENT_SEGMENT_SPAN_S,
            kind=EmbeddingKind.LOGITS,
        )
        paired = min(generated_logits.n, reference_logits.n)
        if generated_logits.n != reference_logits.n:
            report.notes.append(
                f"alignment pairing truncated to {paired} windows "
                f"(reference {reference_logits.n}, generated {generated_logits.n})"
            )
        if paired >= 1:
            report.story = story_alignment(
                [softmax(row) for row in reference_logits.rows[:paired]],
                [softmax(row) for row in generated_logits.rows[:paired]],
                direction=config.kld_direction,
            )
        else:
            report.notes.append("story alignment skipped: no paired windows")
    else:
        report.notes.append("story alignment skipped: no reference audio")

    # Transition smoothness over the generated track's own boundaries.
    half = config.transition_half_window_s
    if crop_window < track.duration_s - 1e-9:
        in_crop = [t for t in track.transitions if offset + half <= t <= offset + crop_window - half]
        track = Track(track.samples, track.sample_rate_hz, in_crop)
    windows, skipped = collect_transition_windows(track, half)
    for t in skipped:
        report.notes.append(f"transition at {t:g} s skipped: too close to track edge")
    if windows:
        pairs = []
        for _, before, after in windows:
            before_logits = provider.embed(
                before.samples, track.sample_rate_hz, segment_span_s=half,
                kind=EmbeddingKind.LOGITS,
            )
            after_logits = provider.embed(
                after.samples, track.sample_rate_hz, segment_span_s=half,
                kind=EmbeddingKind.LOGITS,
            )
            pairs.append((softmax(before_logits.rows[0]), softmax(after_logits.rows[0])))
        report.transition = transition_smoothness(pairs)
    else:
        report.notes.append("transition KLD skipped: no valid transitions")

    config.output_dir.mkdir(parents=True, exist_ok=True)
    stem = _artifact_stem(config)
    save_report(report, config.output_dir / f"{stem}.report.json")
    (config.output_dir / f"{stem}.report.txt").write_text(
        render_tables([report]), encoding="utf-8"
    )
    if manifest_path.exists():
        manifest = RunManifest.load(manifest_path)
        manifest.metrics = report.to_json_dict()
        manifest.save(manifest_path)
    return report
