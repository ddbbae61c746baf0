"""Map transcript windows to music descriptions, one strategy at a time.

Four strategies are available:

* ``BASELINE`` forwards the transcript text itself as the description.
* ``EMOTION`` asks the LLM to label the dialogue as Happy, Calm, Agitated,
  or Suspenseful and renders a fixed description template around the label.
* ``DESCRIPTION`` asks the LLM for a fresh music description per window.
* ``DESCRIPTION_CONTINUATION`` additionally lets the LLM keep the previous
  description when the scene has not changed, which keeps the soundtrack
  stable across a scene.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum

from . import prompts
from .gateway import ChatMessage, LlmBackend, LlmRequest, Role
from .transcripts import TranscriptSegment

__all__ = [
    "Strategy",
    "Emotion",
    "MusicDescription",
    "DirectorState",
    "system_prompt",
    "describe_baseline",
    "classify_emotion",
    "render_emotion_template",
    "describe_full",
    "describe_continuation",
    "describe_segment",
]

# Bounds prompt growth for long sessions; the strategies only ever need
# recent scene context.
MAX_CONTEXT_EXCHANGES = 8

DEFAULT_TEMPERATURE = 0.7


class Strategy(Enum):
    BASELINE = "baseline"
    EMOTION = "emotion"
    DESCRIPTION = "description"
    DESCRIPTION_CONTINUATION = "dc"


class Emotion(Enum):
    HAPPY = "Happy"
    CALM = "Calm"
    AGITATED = "Agitated"
    SUSPENSEFUL = "Suspenseful"


@dataclass(frozen=True)
class MusicDescription:
    """A description of the music wanted for one transcript window."""

    index: int
    text: str
    strategy: Strategy
    emotion: Emotion | None = None
    continued_from_previous: bool = False

    def __post_init__(self):
        if not self.text:
            raise ValueError("description text must be non-empty")
        if self.continued_from_previous and self.strategy is not Strategy.DESCRIPTION_CONTINUATION:
            raise ValueError("continuation flag only valid under the DC strategy")
        if (self.emotion is not None) != (self.strategy is Strategy.EMOTION):
            raise ValueError("emotion must be set exactly when strategy is EMOTION")


@dataclass
class DirectorState:
    """Carried between windows: the last description and recent exchanges."""

    previous_description: MusicDescription | None = None
    conversation_context: list[tuple[str, str]] = field(default_factory=list)

    def record(self, prompt: str, response: str) -> None:
        self.conversation_context.append((prompt, response))
        del self.conversation_context[:-MAX_CONTEXT_EXCHANGES]

    def context_messages(self) -> list[ChatMessage]:
        out = []
        for user_text, assistant_text in self.conversation_context:
            out.append(ChatMessage(Role.USER, user_text))
            out.append(ChatMessage(Role.ASSISTANT, assistant_text))
        return out


def system_prompt() -> str:
    """The initial prompt shared by every strategy; byte-stable."""
    return prompts.SYSTEM_PROMPT


def _request(
    user_text: str,
    state: DirectorState | None = None,
    temperature: float = DEFAULT_TEMPERATURE,
    seed: int | None = None,
) -> LlmRequest:
    history = state.context_messages() if state is not None else []
    return LlmRequest(
        system_prompt=system_prompt(),
        messages=tuple(history) + (ChatMessage(Role.USER, user_text),),
        temperature=temperature,
        seed=seed,
    )


def _complete_with_retry(llm: LlmBackend, request: LlmRequest) -> str:
    """One retry on an empty reply; the caller falls back if still empty."""
    text = llm.complete(request).strip()
    if not text:
        text = llm.complete(request).strip()
    return text


def describe_baseline(segment: TranscriptSegment) -> MusicDescription:
    """Use the transcript verbatim as the description (no LLM involved)."""
    text = segment.text if segment.text.strip() else prompts.NEUTRAL_DESCRIPTION
    return MusicDescription(index=segment.index, text=text, strategy=Strategy.BASELINE)


_EMOTION_SCAN = re.compile(
    "|".join(e.value.lower() for e in Emotion), flags=re.IGNORECASE
)


def classify_emotion(
    segment: TranscriptSegment,
    llm: LlmBackend,
    temperature: float = DEFAULT_TEMPERATURE,
    seed: int | None = None,
) -> Emotion:
    """Ask the LLM for the dialogue's emotion; total over any reply.

    The reply is scanned case-insensitively for the first occurrence of one
    of the four labels; anything unrecognizable falls back to CALM, the
    least disruptive background default.
    """
    user_text = f"{prompts.EMOTION_CLASSIFICATION_PROMPT}\n\n{segment.text}"
    response = llm.complete(_request(user_text, temperature=temperature, seed=seed))
    match = _EMOTION_SCAN.search(response)
    if match is None:
        return Emotion.CALM
    return Emotion(match.group(0).capitalize())


def render_emotion_template(emotion: Emotion, index: int = 0) -> MusicDescription:
    """Substitute the label into the fixed emotion description template."""
    return MusicDescription(
        index=index,
        text=prompts.EMOTION_TEMPLATE.format(emotion=emotion.value),
        strategy=Strategy.EMOTION,
        emotion=emotion,
    )


def describe_full(
    segment: TranscriptSegment,
    llm: LlmBackend,
    state: DirectorState | None = None,
    temperature: float = DEFAULT_TEMPERATURE,
    seed: int | None = None,
    _strategy: Strategy = Strategy.DESCRIPTION,
) -> MusicDescription:
    """Ask the LLM for a fresh description of music matching the window."""
    user_text = f"{prompts.DESCRIPTION_PROMPT}\n\n{segment.text}"
    request = _request(user_text, state, temperature, seed)
    text = _complete_with_retry(llm, request) or prompts.NEUTRAL_DESCRIPTION
    if state is not None:
        state.record(user_text, text)
    return MusicDescription(index=segment.index, text=text, strategy=_strategy)


def describe_continuation(
    segment: TranscriptSegment,
    llm: LlmBackend,
    state: DirectorState,
    temperature: float = DEFAULT_TEMPERATURE,
    seed: int | None = None,
) -> MusicDescription:
    """Keep the previous description when the LLM judges the scene unchanged.

    The reply counts as "same scene" when it is exactly the SAME sentinel
    (case-insensitive) or repeats the previous description verbatim; either
    way the previous text is reused and flagged as continued.  The first
    window has nothing to continue and behaves like :func:`describe_full`.
    """
    previous = state.previous_description
    if previous is None:
        return describe_full(
            segment, llm, state, temperature, seed,
            _strategy=Strategy.DESCRIPTION_CONTINUATION,
        )
    user_text = (
        f"{prompts.CONTINUATION_PROMPT} {prompts.SAME_SCENE_INSTRUCTION}\n\n"
        f"Previous music description: {previous.text}\n\n"
        f"Dialogue: {segment.text}"
    )
    request = _request(user_text, state, temperature, seed)
    text = _complete_with_retry(llm, request) or prompts.NEUTRAL_DESCRIPTION
    state.record(user_text, text)
    if text.upper() == prompts.SAME_SCENE_SENTINEL or text == previous.text:
        return replace(previous, index=segment.index, continued_from_previous=True)
    return MusicDescription(
        index=segment.index, text=text, strategy=Strategy.DESCRIPTION_CONTINUATION
    )


def describe_segment(
    segment: TranscriptSegment,
    strategy: Strategy,
    llm: LlmBackend | None,
    state: DirectorState,
    temperature: float = DEFAULT_TEMPERATURE,
    seed: int | None = None,
) -> MusicDescription:
    """Dispatch one window through the configured strategy, updating state."""
    if strategy is Strategy.BASELINE:
        description = describe_baseline(segment)
    elif strategy is Strategy.EMOTION:
        emotion = classify_emotion(segment, llm, temperature, seed)
        description = render_emotion_template(emotion, index=segment.index)
    elif strategy is Strategy.DESCRIPTION:
        description = describe_full(segment, llm, state, temperature, seed)
    elif strategy is Strategy.DESCRIPTION_CONTINUATION:
        description = describe_continuation(segment, llm, state, temperature, seed)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown strategy {strategy!r}")
    state.previous_description = description
    return description
