"""Prompt strings sent to the language-model backend.

These are load-bearing constants: the strategy conformance tests assert them
byte-for-byte, and the deterministic mock backend recognizes them to decide
how to answer.  Change them only together with those tests.
"""

SYSTEM_PROMPT = (
    "You are going to receive a series of Role-playing Game (RPG) video "
    "transcript excerpts from players' dialogues playing a campaign"
)

EMOTION_CLASSIFICATION_PROMPT = (
    "Classify each dialogue into one of the following emotions: "
    "Happy, Calm, Agitated, or Suspenseful."
)

EMOTION_TEMPLATE = (
    "Background music for a Role-playing Game (RPG) dialogue, "
    "with the following emotion: {emotion}"
)

DESCRIPTION_PROMPT = (
    "For each transcript excerpt, describe a piece of background music "
    "that matches that excerpt."
)

CONTINUATION_PROMPT = (
    "Determine whether this dialogue is from the same scene as the previous "
    "dialogue and based on this determination, either return the previous "
    "music description or generate a new one"
)

# The continuation prompt above states intent but no wire protocol; the
# sentinel makes "keep the previous description" machine-recognizable.
SAME_SCENE_INSTRUCTION = "If it is the same scene, reply with exactly SAME."

SAME_SCENE_SENTINEL = "SAME"

# Used whenever a transcript window is silent or the backend returns nothing
# usable: the audio timeline must never have a hole.
NEUTRAL_DESCRIPTION = (
    "Calm ambient background music for a Role-playing Game (RPG) dialogue"
)
