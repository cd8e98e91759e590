"""Baseline input linearizations for the four model configurations."""

from __future__ import annotations

from .data import KnowledgeBase

LINEARIZE_MODES = ("seq2seq", "values_only", "typed_pairs", "typed_positions")


def linearize(kb: KnowledgeBase, mode: str):
    """Deterministic model-input sequence for a KB.

    seq2seq          -> flat interleaved [type_1, value_1, type_2, value_2, ...]
    values_only      -> [value_1, value_2, ...]
    typed_pairs      -> [(type_i, value_i), ...]
    typed_positions  -> [(type_i, value_i, row_i, row_back_i), ...]
    """
    if mode == "seq2seq":
        out: list[str] = []
        for t in kb.triples:
            out.append(t.slot_type)
            out.append(t.slot_value)
        return out
    if mode == "values_only":
        return [t.slot_value for t in kb.triples]
    if mode == "typed_pairs":
        return [(t.slot_type, t.slot_value) for t in kb.triples]
    if mode == "typed_positions":
        return [(t.slot_type, t.slot_value, t.row, t.row_back) for t in kb.triples]
    raise ValueError(f"unknown linearization mode {mode!r}; expected one of {LINEARIZE_MODES}")
