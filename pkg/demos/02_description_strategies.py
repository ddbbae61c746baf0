"""
Four ways to turn dialogue into a music description
===================================================

Every strategy maps a transcript window to a description for the
text-to-music backend, but they differ in how much they lean on the LLM:

* baseline      - the transcript text itself is the prompt
* emotion       - the LLM labels the dialogue, a fixed template is rendered
* description   - the LLM writes a fresh description per window
* dc            - like description, but the LLM may answer SAME to keep the
                  previous description while the scene lasts

The deterministic mock LLM stands in for a real chat backend here.
"""

from storytrack import DirectorState, MockLlmClient, Strategy
from storytrack.director import describe_segment, system_prompt
from storytrack.transcripts import TranscriptSegment

windows = [
    "We enter the ruined keep.",
    "A dragon stirs in the dark. A battle will start!",
    "The blade glances off its scales.",
]


def segment(i: int) -> TranscriptSegment:
    return TranscriptSegment(i, i * 30.0, (i + 1) * 30.0, windows[i])


print("shared system prompt:")
print(f"  {system_prompt()!r}")

for strategy in Strategy:
    # A scripted mock for DC makes the continuation visible: the second
    # window is judged to be the same scene, the third is not.
    if strategy is Strategy.DESCRIPTION_CONTINUATION:
        llm = MockLlmClient(responses=[
            "Brooding strings over distant drums",
            "SAME",
            "Frantic percussion with brass stabs",
        ])
    else:
        llm = MockLlmClient()

    print(f"\n--- {strategy.value} ---")
    state = DirectorState()
    for i in range(len(windows)):
        d = describe_segment(segment(i), strategy, llm, state, seed=7)
        marker = " (continued)" if d.continued_from_previous else ""
        emotion = f" [{d.emotion.value}]" if d.emotion else ""
        print(f"window {i}: {d.text}{emotion}{marker}")
