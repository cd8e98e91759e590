"""Domain data model, vocabulary, corpus IO, linearizations, synthetic data."""

from .data import (
    CorpusError,
    CorpusStats,
    Example,
    KnowledgeBase,
    Triple,
    example_from_text,
    load_corpus,
    make_kb,
    save_corpus,
    split,
    stats,
)
from .linearize import LINEARIZE_MODES, linearize
from .synth import DEFAULT_SLOT_TYPES, SynthSchema, synth_corpus
from .text import (
    collapse_values,
    is_unit_token,
    normalize_match,
    render_text,
    segment_values,
    tokenize,
    unit_token,
    unit_value,
)
from .vocab import BOS, EOS, PAD, RESERVED, UNK, LabelVocab, Vocabulary, build_label_vocabs, build_vocab

__all__ = [
    "BOS",
    "CorpusError",
    "CorpusStats",
    "DEFAULT_SLOT_TYPES",
    "EOS",
    "Example",
    "KnowledgeBase",
    "LINEARIZE_MODES",
    "LabelVocab",
    "PAD",
    "RESERVED",
    "SynthSchema",
    "Triple",
    "UNK",
    "Vocabulary",
    "build_label_vocabs",
    "build_vocab",
    "collapse_values",
    "example_from_text",
    "is_unit_token",
    "linearize",
    "load_corpus",
    "make_kb",
    "normalize_match",
    "render_text",
    "save_corpus",
    "segment_values",
    "split",
    "stats",
    "synth_corpus",
    "tokenize",
    "unit_token",
    "unit_value",
]
