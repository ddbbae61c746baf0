"""Clients for the LLM and text-to-music backends, plus deterministic mocks.

The wire protocol is deliberately minimal JSON over HTTP so that thin
adapters can wrap an off-the-shelf chat server or a text-to-music synthesis
server:

* chat:  request ``{system, messages[{role, text}], temperature, seed}`` ->
  response ``{text}``
* music: request ``{description, previous_audio_b64?, duration_s,
  sample_rate_hz}`` -> response ``{audio_b64, sample_rate_hz}``

Audio travels as base64 little-endian 16-bit PCM.  The mock backends are
pure functions of their inputs, which is what makes end-to-end runs
reproducible and cacheable without a GPU in sight.
"""

from __future__ import annotations

import base64
import hashlib
import os
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Protocol, Sequence

import numpy as np
import requests

from . import prompts
from .audio import AudioSegment, pcm16_decode, pcm16_encode
from .errors import BackendUnavailable, DurationMismatch, MalformedResponse

__all__ = [
    "Role",
    "ChatMessage",
    "LlmRequest",
    "MusicRequest",
    "ApiStyle",
    "BackendConfig",
    "LlmBackend",
    "MusicBackend",
    "HttpLlmClient",
    "HttpMusicClient",
    "MockLlmClient",
    "MockMusicClient",
    "llm_complete",
    "music_generate",
    "mock_music_synthesize",
    "stable_hash64",
    "hash_tail",
    "MOCK_ENDPOINT",
]

MOCK_ENDPOINT = "mock:"
AUTH_TOKEN_ENV = "STORYTRACK_AUTH_TOKEN"

# Number of samples the mock copies from the tail into a new segment so that
# continuations are sample-continuous at the seam.
SEED_RAMP_SAMPLES = 128
FADE_IN_S = 1.0

# Patched by tests to avoid real waiting during retry/backoff checks.
_sleep = time.sleep


class Role(Enum):
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    text: str


@dataclass(frozen=True)
class LlmRequest:
    """One chat-completion call: system prompt, history, and the live turn."""

    system_prompt: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.7
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("LlmRequest needs at least one message")
        if self.messages[-1].role is not Role.USER:
            raise ValueError("last message must come from the user")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 1]")

    @property
    def last_user_text(self) -> str:
        return self.messages[-1].text


@dataclass(frozen=True)
class MusicRequest:
    """One synthesis call, optionally continuing the previous segment's tail."""

    description: str
    previous_audio_tail: AudioSegment | None = None
    duration_s: float = 30.0
    sample_rate_hz: int = 32000

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError(f"duration_s must be positive, got {self.duration_s}")
        tail = self.previous_audio_tail
        if tail is not None and tail.sample_rate_hz != self.sample_rate_hz:
            raise ValueError(
                f"tail at {tail.sample_rate_hz} Hz, request at {self.sample_rate_hz} Hz"
            )


class ApiStyle(Enum):
    CHAT_COMPLETION = "chat_completion"
    TEXT_TO_MUSIC = "text_to_music"


@dataclass(frozen=True)
class BackendConfig:
    endpoint_url: str
    timeout_s: float = 30.0
    max_retries: int = 2
    api_style: ApiStyle = ApiStyle.CHAT_COMPLETION
    auth_token: str | None = None
    max_in_flight: int = 2

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError(f"timeout_s must be positive, got {self.timeout_s}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")

    @property
    def is_mock(self) -> bool:
        return self.endpoint_url.startswith(MOCK_ENDPOINT)


class LlmBackend(Protocol):
    def complete(self, request: LlmRequest) -> str: ...


class MusicBackend(Protocol):
    def generate(self, request: MusicRequest) -> AudioSegment: ...


def stable_hash64(*parts: str | bytes | int) -> int:
    """A stable 64-bit content hash (unlike ``hash()``, stable across runs)."""
    digest = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, int):
            part = part.to_bytes(8, "little", signed=False)
        elif isinstance(part, str):
            part = part.encode("utf-8")
        digest.update(len(part).to_bytes(4, "little"))
        digest.update(part)
    return int.from_bytes(digest.digest(), "little")


def hash_tail(tail: AudioSegment | None) -> int:
    """Hash of the quantized tail bytes; 0 when no tail conditions the call."""
    if tail is None:
        return 0
    return stable_hash64(pcm16_encode(tail.samples))


class _HttpClient:
    """Shared POST-with-retries plumbing for both backend kinds."""

    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session if session is not None else requests.Session()
        self._gate = threading.BoundedSemaphore(max(1, config.max_in_flight))

    def _headers(self) -> dict[str, str]:
        token = self.config.auth_token or os.environ.get(AUTH_TOKEN_ENV)
        if token:
            return {"Authorization": f"Bearer {token}"}
        return {}

    def _post(self, payload: dict, raw: bool = False) -> dict | bytes:
        attempts = self.config.max_retries + 1
        delay = 1.0
        failure: Exception | None = None
        for attempt in range(attempts):
            try:
                with self._gate:
                    response = self._session.post(
                        self.config.endpoint_url,
                        json=payload,
                        headers=self._headers(),
                        timeout=self.config.timeout_s,
                    )
                if response.status_code >= 500:
                    raise requests.ConnectionError(f"server error {response.status_code}")
                if response.status_code != 200:
                    raise MalformedResponse(
                        f"backend answered HTTP {response.status_code}"
                    )
                if raw:
                    return response.content
                try:
                    return response.json()
                except ValueError as exc:
                    raise MalformedResponse(f"response body is not JSON: {exc}") from exc
            except requests.RequestException as exc:
                failure = exc
                if attempt + 1 < attempts:
                    _sleep(delay)
                    delay *= 2
        raise BackendUnavailable(
            f"{self.config.endpoint_url} unreachable after {attempts} attempts: {failure}"
        )


class HttpLlmClient(_HttpClient):
    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        if config.api_style is not ApiStyle.CHAT_COMPLETION:
            raise ValueError("HttpLlmClient needs a CHAT_COMPLETION backend config")
        super().__init__(config, session)

    def complete(self, request: LlmRequest) -> str:
        payload = {
            "system": request.system_prompt,
            "messages": [{"role": m.role.value, "text": m.text} for m in request.messages],
            "temperature": request.temperature,
            "seed": request.seed,
        }
        data = self._post(payload)
        text = data.get("text")
        if not isinstance(text, str):
            raise MalformedResponse(f"missing 'text' field in LLM response: {data!r}")
        return text


class HttpMusicClient(_HttpClient):
    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        if config.api_style is not ApiStyle.TEXT_TO_MUSIC:
            raise ValueError("HttpMusicClient needs a TEXT_TO_MUSIC backend config")
        super().__init__(config, session)

    def generate(self, request: MusicRequest) -> AudioSegment:
        payload: dict = {
            "description": request.description,
            "duration_s": request.duration_s,
            "sample_rate_hz": request.sample_rate_hz,
        }
        if request.previous_audio_tail is not None:
            payload["previous_audio_b64"] = base64.b64encode(
                pcm16_encode(request.previous_audio_tail.samples)
            ).decode("ascii")
        data = self._post(payload)
        if data.get("sample_rate_hz") != request.sample_rate_hz:
            raise MalformedResponse(
                f"backend returned rate {data.get('sample_rate_hz')}, "
                f"requested {request.sample_rate_hz}"
            )
        try:
            raw = base64.b64decode(data["audio_b64"], validate=True)
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedResponse(f"bad or missing 'audio_b64' field: {exc}") from exc
        samples = pcm16_decode(raw)
        expected = int(round(request.duration_s * request.sample_rate_hz))
        if len(samples) != expected:
            raise DurationMismatch(
                f"backend returned {len(samples)} samples, expected {expected}"
            )
        return AudioSegment(samples, request.sample_rate_hz)


def llm_complete(request: LlmRequest, config: BackendConfig) -> str:
    """One-shot chat completion against ``config`` (mock-aware)."""
    if config.is_mock:
        return MockLlmClient().complete(request)
    return HttpLlmClient(config).complete(request)


def music_generate(request: MusicRequest, config: BackendConfig) -> AudioSegment:
    """One-shot music synthesis against ``config`` (mock-aware)."""
    if config.is_mock:
        return MockMusicClient().generate(request)
    return HttpMusicClient(config).generate(request)


# --------------------------------------------------------------------------
# deterministic mocks
# --------------------------------------------------------------------------

_MOODS = ("Somber", "Triumphant", "Mysterious", "Playful",
          "Brooding", "Serene", "Frantic", "Solemn")
_INSTRUMENTS = ("strings", "lute", "brass", "choir",
                "harp", "percussion", "woodwinds", "organ")
_TEXTURES = ("a slow pulse", "rising arpeggios", "distant drums", "soft drones",
             "martial rhythms", "shimmering pads", "sparse plucks", "low swells")
_EMOTION_WORDS = ("Happy", "Calm", "Agitated", "Suspenseful")


def _invented_description(bits: int) -> str:
    mood = _MOODS[bits % 8]
    instrument = _INSTRUMENTS[(bits >> 8) % 8]
    texture = _TEXTURES[(bits >> 16) % 8]
    return f"{mood} {instrument} theme with {texture}"


class MockLlmClient:
    """A scripted or content-hashed stand-in for the chat backend.

    ``responses`` are consumed in order when given; otherwise the first
    ``script`` key contained in the live user turn selects its canned reply.
    With neither, the reply is a pure function of the request (prompt text,
    temperature, seed), so identical runs of the pipeline stay bit-identical.
    """

    def __init__(
        self,
        script: Mapping[str, str] | None = None,
        responses: Sequence[str] | None = None,
    ):
        self._script = dict(script) if script else {}
        self._queue = list(responses) if responses else []

    def complete(self, request: LlmRequest) -> str:
        if self._queue:
            return self._queue.pop(0)
        user_text = request.last_user_text
        for needle, reply in self._script.items():
            if needle in user_text:
                return reply
        bits = stable_hash64(
            "mock-llm",
            request.system_prompt,
            *[f"{m.role.value}:{m.text}" for m in request.messages],
            f"{request.temperature:.6f}",
            str(request.seed),
        )
        if prompts.EMOTION_CLASSIFICATION_PROMPT in user_text:
            return _EMOTION_WORDS[bits % 4]
        if prompts.CONTINUATION_PROMPT in user_text and bits % 2 == 0:
            return prompts.SAME_SCENE_SENTINEL
        return _invented_description(bits)


def mock_music_synthesize(
    description: str,
    tail_hash: int,
    duration_s: float = 30.0,
    sample_rate_hz: int = 32000,
) -> AudioSegment:
    """Synthesize a deterministic stand-in segment for a description.

    Three sine tones at 0.3 amplitude with a 1-second linear fade-in.  The
    tone frequencies are keyed to the description alone while the tail hash
    only shifts their phases: an unchanged description therefore keeps the
    same spectrum from one segment to the next, mimicking how the real
    backend leans on the previous audio when the prompt barely changes, and
    giving smoothness comparisons between strategies something to measure.
    """
    tone_bits = stable_hash64("mock-music-tones", description)
    phase_bits = stable_hash64("mock-music-phase", description, tail_hash)
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n, dtype=np.float64) / sample_rate_hz
    samples = np.zeros(n, dtype=np.float64)
    for k in range(3):
        pitch = ((tone_bits >> (16 * k)) & 0xFFFF) / 65535.0
        freq = 110.0 * 2.0 ** (4.0 * pitch)  # log-uniform in [110, 1760] Hz
        phase = 2.0 * np.pi * (((phase_bits >> (16 * k)) & 0xFFFF) / 65536.0)
        samples += 0.3 * np.sin(2.0 * np.pi * freq * t + phase)
    samples *= np.minimum(t / FADE_IN_S, 1.0)
    return AudioSegment(samples, sample_rate_hz)


class MockMusicClient:
    """Deterministic synthesizer standing in for the text-to-music backend.

    Documented continuity behavior: when a tail is supplied, the final
    ``SEED_RAMP_SAMPLES`` samples of the tail are copied verbatim into the
    head of the new segment, so consecutive segments meet sample-exactly.
    """

    def generate(self, request: MusicRequest) -> AudioSegment:
        tail = request.previous_audio_tail
        segment = mock_music_synthesize(
            request.description,
            hash_tail(tail),
            request.duration_s,
            request.sample_rate_hz,
        )
        if tail is not None:
            seed = min(SEED_RAMP_SAMPLES, len(tail.samples), len(segment.samples))
            samples = segment.samples.copy()
            samples[:seed] = tail.samples[len(tail.samples) - seed :]
            segment = AudioSegment(samples, request.sample_rate_hz)
        return segment
