"""Story-gap completion workbench.

Predicts where sentences are missing from a story (a variable number,
including zero), generates candidate sentences for each gap, and serves
the whole loop over HTTP for interactive writing assistance.
"""

from .backend import BackendManifest, Candidate, GenerationParams, make_oracle_backend
from .corruption import (
    CNNDM_POLICY,
    ROC_POLICY,
    CorruptedExample,
    CorruptionPolicy,
    corrupt,
    enumerate_corruptions,
    make_static_split,
    sample_corruption,
    sample_missing_count,
)
from .pipeline import AssistResult, PipelineConfig, assist
from .story import Corpus, Story, load_corpus, render_story, save_corpus, segment_text
from .tokens import (
    COMPLETION_MARKER,
    GAP,
    MISSING_MARKER,
    CompletionSequence,
    MaskedStory,
    encode_completion_target,
    encode_masked,
    parse_completion_output,
    parse_masked,
    splice,
)

__version__ = "0.1.0"
