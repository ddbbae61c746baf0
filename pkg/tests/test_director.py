import re

import pytest

from storytrack import prompts
from storytrack.director import (
    DirectorState,
    Emotion,
    MusicDescription,
    Strategy,
    classify_emotion,
    describe_baseline,
    describe_continuation,
    describe_full,
    describe_segment,
    render_emotion_template,
    system_prompt,
)
from storytrack.gateway import MockLlmClient

from conftest import make_segment


class RecordingLlm:
    """Returns canned replies while keeping every request for inspection."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        return self.replies.pop(0)


class TestSystemPrompt:
    def test_exact_text(self):
        assert system_prompt() == (
            "You are going to receive a series of Role-playing Game (RPG) video "
            "transcript excerpts from players' dialogues playing a campaign"
        )

    def test_byte_stable(self):
        assert system_prompt() is system_prompt() or system_prompt() == system_prompt()

    def test_shared_by_all_strategies(self):
        llm = RecordingLlm(["Calm", "a description", "another one"])
        state = DirectorState()
        classify_emotion(make_segment(), llm)
        describe_full(make_segment(), llm, state)
        describe_continuation(make_segment(1), llm, state)
        assert {r.system_prompt for r in llm.requests} == {system_prompt()}


class TestBaseline:
    def test_identity_mapping(self):
        seg = make_segment(text="You see a dragon in front of you.")
        d = describe_baseline(seg)
        assert d.text == seg.text
        assert d.strategy is Strategy.BASELINE
        assert d.index == seg.index
        assert not d.continued_from_previous

    def test_empty_transcript_falls_back(self):
        d = describe_baseline(make_segment(text="   "))
        assert d.text == prompts.NEUTRAL_DESCRIPTION
        assert not d.continued_from_previous


class TestEmotion:
    def test_direct_label(self):
        emotion = classify_emotion(make_segment(), RecordingLlm(["Suspenseful."]))
        assert emotion is Emotion.SUSPENSEFUL

    def test_first_occurrence_scan(self):
        emotion = classify_emotion(
            make_segment(), RecordingLlm(["I think this is quite agitated, honestly"])
        )
        assert emotion is Emotion.AGITATED

    def test_earliest_label_wins(self):
        emotion = classify_emotion(
            make_segment(), RecordingLlm(["calm, though maybe agitated"])
        )
        assert emotion is Emotion.CALM

    def test_unrecognized_reply_falls_back_to_calm(self):
        assert classify_emotion(make_segment(), RecordingLlm(["joyful"])) is Emotion.CALM

    @pytest.mark.parametrize("reply", ["", "42", "HAPPY!!", "suspenseful and dark"])
    def test_total_over_any_reply(self, reply):
        assert classify_emotion(make_segment(), RecordingLlm([reply])) in Emotion

    def test_classification_prompt_sent_verbatim_with_transcript(self):
        llm = RecordingLlm(["Calm"])
        seg = make_segment(text="We rest at the tavern.")
        classify_emotion(seg, llm)
        sent = llm.requests[0].last_user_text
        assert prompts.EMOTION_CLASSIFICATION_PROMPT in sent
        assert seg.text in sent

    def test_template_rendering(self):
        d = render_emotion_template(Emotion.SUSPENSEFUL, index=3)
        assert d.text == (
            "Background music for a Role-playing Game (RPG) dialogue, "
            "with the following emotion: Suspenseful"
        )
        assert d.emotion is Emotion.SUSPENSEFUL
        assert d.index == 3
        assert render_emotion_template(Emotion.HAPPY).text.endswith(": Happy")


class TestDescription:
    def test_pass_through(self):
        llm = RecordingLlm(["  An eerie drone with low strings  "])
        d = describe_full(make_segment(text="A battle will start!"), llm, DirectorState())
        assert d.text == "An eerie drone with low strings"
        assert d.strategy is Strategy.DESCRIPTION

    def test_whitespace_twice_falls_back(self):
        llm = RecordingLlm(["   ", "\n\t"])
        d = describe_full(make_segment(), llm, DirectorState())
        assert d.text == prompts.NEUTRAL_DESCRIPTION
        assert len(llm.requests) == 2, "one retry before the fallback"

    def test_deterministic_with_fixed_backend(self):
        mock = MockLlmClient()
        a = describe_full(make_segment(), mock, DirectorState(), seed=7)
        b = describe_full(make_segment(), mock, DirectorState(), seed=7)
        assert a == b

    def test_context_recorded_and_truncated(self):
        state = DirectorState()
        llm = RecordingLlm([f"desc {i}" for i in range(12)])
        for i in range(12):
            describe_full(make_segment(i, text=f"scene {i}"), llm, state)
        assert len(state.conversation_context) == 8
        assert state.conversation_context[-1][1] == "desc 11"
        # Later prompts carry the context as alternating user/assistant turns.
        assert len(llm.requests[-1].messages) == 2 * 8 + 1


class TestContinuation:
    def test_same_sentinel_reuses_previous(self):
        state = DirectorState(
            previous_description=MusicDescription(
                0, "calm tavern lute music", Strategy.DESCRIPTION_CONTINUATION
            )
        )
        d = describe_continuation(make_segment(1), RecordingLlm(["SAME"]), state)
        assert d.text == "calm tavern lute music"
        assert d.continued_from_previous
        assert d.index == 1

    def test_verbatim_previous_counts_as_same_scene(self):
        state = DirectorState(
            previous_description=MusicDescription(
                0, "calm tavern lute music", Strategy.DESCRIPTION_CONTINUATION
            )
        )
        d = describe_continuation(
            make_segment(1), RecordingLlm(["calm tavern lute music"]), state
        )
        assert d.continued_from_previous

    def test_new_description_branch(self):
        state = DirectorState(
            previous_description=MusicDescription(
                0, "old", Strategy.DESCRIPTION_CONTINUATION
            )
        )
        d = describe_continuation(
            make_segment(1), RecordingLlm(["An eerie drone with low strings"]), state
        )
        assert d.text == "An eerie drone with low strings"
        assert not d.continued_from_previous

    def test_first_segment_behaves_like_describe_full(self):
        llm = RecordingLlm(["fresh description"])
        d = describe_continuation(make_segment(0), llm, DirectorState())
        assert d.text == "fresh description"
        assert d.strategy is Strategy.DESCRIPTION_CONTINUATION
        assert not d.continued_from_previous
        assert prompts.DESCRIPTION_PROMPT in llm.requests[0].last_user_text

    def test_prompt_carries_sentinel_instruction_and_previous(self):
        state = DirectorState(
            previous_description=MusicDescription(
                0, "soft harp", Strategy.DESCRIPTION_CONTINUATION
            )
        )
        llm = RecordingLlm(["SAME"])
        describe_continuation(make_segment(1, text="We keep walking."), llm, state)
        sent = llm.requests[0].last_user_text
        assert prompts.CONTINUATION_PROMPT in sent
        assert prompts.SAME_SCENE_INSTRUCTION in sent
        assert "soft harp" in sent
        assert "We keep walking." in sent


class TestInvariants:
    def test_continuation_flag_only_under_dc(self):
        with pytest.raises(ValueError):
            MusicDescription(0, "x", Strategy.DESCRIPTION, continued_from_previous=True)

    def test_emotion_field_iff_emotion_strategy(self):
        with pytest.raises(ValueError):
            MusicDescription(0, "x", Strategy.BASELINE, emotion=Emotion.CALM)
        with pytest.raises(ValueError):
            MusicDescription(0, "x", Strategy.EMOTION)

    def test_emotion_outputs_match_template_form(self):
        template = re.compile(
            r"^Background music for a Role-playing Game \(RPG\) dialogue, "
            r"with the following emotion: (Happy|Calm|Agitated|Suspenseful)$"
        )
        state = DirectorState()
        for i, reply in enumerate(["happy", "nonsense", "SUSPENSEFUL now", "ok, agitated"]):
            d = describe_segment(
                make_segment(i), Strategy.EMOTION, RecordingLlm([reply]), state
            )
            assert template.match(d.text), d.text

    def test_dc_continuation_text_matches_previous_exactly(self):
        state = DirectorState()
        llm = RecordingLlm(["opening theme", "SAME", "SAME"])
        texts = [
            describe_segment(make_segment(i), Strategy.DESCRIPTION_CONTINUATION, llm, state).text
            for i in range(3)
        ]
        assert texts == ["opening theme"] * 3
