"""Transcript-driven soundtrack generation and evaluation.

The package turns timestamped tabletop-RPG transcripts into a continuous
generated soundtrack (through pluggable LLM and text-to-music backends, with
deterministic mocks for GPU-free work) and scores the result for audio
quality, story alignment, and transition smoothness.
"""

from .audio import (
    AudioSegment,
    Track,
    assemble,
    collect_transition_windows,
    extract_transition_windows,
    read_wav,
    write_wav,
)
from .director import (
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
from .embeddings import HttpEmbeddingProvider, SpectralEmbedder, resolve_embedding_source
from .gateway import (
    ApiStyle,
    BackendConfig,
    ChatMessage,
    LlmRequest,
    MockLlmClient,
    MockMusicClient,
    MusicRequest,
    Role,
    llm_complete,
    mock_music_synthesize,
    music_generate,
)
from .metrics import (
    ClassProbabilities,
    EmbeddingKind,
    EmbeddingMatrix,
    GaussianStats,
    KldDirection,
    MeanStd,
    fad_score,
    fit_gaussian,
    frechet_distance,
    kld,
    read_embedding_file,
    sample_eval_window,
    softmax,
    story_alignment,
    transition_smoothness,
    write_embedding_file,
)
from .pipeline import RunConfig, RunManifest, run_eval, run_generate
from .report import MetricReport, load_report, render_tables, save_report
from .transcripts import (
    Cue,
    SubtitleFormat,
    TranscriptSegment,
    parse_subtitles,
    serialize_subtitles,
    window_transcripts,
)

__version__ = "0.1.0"
