"""Input-side model: per-mode source units, field embedding, bi-GRU encoder.

Every model configuration flows through one encoder. A KB is first turned
into a sequence of source units: full (type, value, row, row_back) quadruples
for the position-aware model, typed pairs or bare values for the ablations,
and an interleaved type/value token stream for the plain seq2seq baseline
(types and values alternate as pseudo-triples). Each unit embeds as the
concatenation [type; value; row; row_back] and the sequence runs through a
bi-directional GRU whose two final states concatenate into the decoder's
initial state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus.data import KnowledgeBase
from .corpus.vocab import LabelVocab
from .numkit import funcs as F
from .numkit.tape import Node, ShapeError


@dataclass(frozen=True)
class SourceUnit:
    """One encoder input element. copy_value is the surface string a
    pointer may copy when this unit is attended (None when the unit is not
    a copy target, e.g. in the seq2seq token stream)."""

    slot_type: str | None
    slot_value: str | None
    row: int          # 0 means "no position": the position subvectors are zero
    row_back: int
    copy_value: str | None


def source_units(kb: KnowledgeBase, mode) -> list[SourceUnit]:
    """Model input sequence for a KB under a model mode."""
    name = getattr(mode, "value", mode)
    if name == "seq2seq":
        units: list[SourceUnit] = []
        for t in kb.triples:
            units.append(SourceUnit(t.slot_type, None, 0, 0, None))
            units.append(SourceUnit(None, t.slot_value, 0, 0, None))
        return units
    if name == "pointer":
        return [SourceUnit(None, t.slot_value, 0, 0, t.slot_value) for t in kb.triples]
    if name == "pointer_type":
        return [SourceUnit(t.slot_type, t.slot_value, 0, 0, t.slot_value) for t in kb.triples]
    if name == "pointer_type_position":
        return [
            SourceUnit(t.slot_type, t.slot_value, t.row, t.row_back, t.slot_value)
            for t in kb.triples
        ]
    raise ValueError(f"unknown model mode {name!r}")


def unit_label(unit: SourceUnit) -> str:
    return f"{unit.slot_type or ''}:{unit.slot_value or ''}"


@dataclass
class EmbeddingTables:
    """Lookup tables for the four triple fields. type/value tables are
    (labels, emb_dim); the position tables are (max_rows, pos_emb_dim),
    indexed by row-1."""

    type_table: object
    value_table: object
    pos_fwd_table: object
    pos_back_table: object


def _table_rows(table) -> int:
    v = table.value if isinstance(table, Node) else np.asarray(table)
    return v.shape[0]


def embed_fields(units: list[SourceUnit], tables: EmbeddingTables,
                 type_vocab: LabelVocab, value_vocab: LabelVocab,
                 use_positions: bool):
    """Embed each unit's four fields.

    Returns (concatenated (n, 2*emb + 2*pos_emb) matrix, type stack (n, emb),
    value stack (n, emb)); the stacks are reused by the attention layers.
    Unknown labels fall back to the UNK row; absent fields use the NONE row.
    Position subvectors are zero whenever positions are disabled or a unit
    has no row."""
    type_ids = [type_vocab.id(u.slot_type) if u.slot_type is not None else LabelVocab.NONE_ID
                for u in units]
    value_ids = [value_vocab.id(u.slot_value) if u.slot_value is not None else LabelVocab.NONE_ID
                 for u in units]
    type_stack = F.rows(tables.type_table, type_ids)
    value_stack = F.rows(tables.value_table, value_ids)
    parts = [type_stack, value_stack]
    if use_positions and any(u.row > 0 for u in units):
        max_rows = _table_rows(tables.pos_fwd_table)
        for u in units:
            if u.row > max_rows or u.row_back > max_rows:
                raise ShapeError(
                    f"row position {max(u.row, u.row_back)} exceeds the configured "
                    f"maximum of {max_rows}; resize the position tables"
                )
        parts.append(F.rows(tables.pos_fwd_table, [u.row - 1 for u in units]))
        parts.append(F.rows(tables.pos_back_table, [u.row_back - 1 for u in units]))
    else:
        pos_dim = (tables.pos_fwd_table.value if isinstance(tables.pos_fwd_table, Node)
                   else np.asarray(tables.pos_fwd_table)).shape[1]
        parts.append(np.zeros((len(units), 2 * pos_dim)))
    if any(isinstance(p, Node) for p in parts):
        return F.concat(parts, axis=1), type_stack, value_stack
    return np.concatenate(parts, axis=1), type_stack, value_stack


def embed_units(units: list[SourceUnit], tables: EmbeddingTables,
                type_vocab: LabelVocab, value_vocab: LabelVocab,
                use_positions: bool):
    """(n, 2*emb + 2*pos_emb) matrix of concatenated field embeddings."""
    embedded, _, _ = embed_fields(units, tables, type_vocab, value_vocab, use_positions)
    return embedded


def embed_triples(kb: KnowledgeBase, tables: EmbeddingTables,
                  type_vocab: LabelVocab, value_vocab: LabelVocab):
    """Full-quadruple embedding of a KB's triples, position fields live."""
    return embed_units(source_units(kb, "pointer_type_position"), tables,
                       type_vocab, value_vocab, use_positions=True)


@dataclass
class EncoderOutput:
    """Per-unit hidden states plus the final state used to seed the
    decoder, with the raw type/value embedding stacks retained for the
    attention layers."""

    states: list
    final_state: object
    type_embeddings: object
    value_embeddings: object

    def __len__(self):
        return len(self.states)


def encode(embedded, fwd_params, bwd_params):
    """Bi-directional GRU over the embedded unit sequence.

    Each direction starts from zeros; state i concatenates the forward
    state after units 0..i with the backward state after units n-1..i. The
    final state concatenates each direction's state after consuming the
    whole sequence.
    """
    n = np.shape(embedded.value if isinstance(embedded, Node) else embedded)[0]
    if n == 0:
        raise ValueError("cannot encode an empty unit sequence")
    half = np.shape(fwd_params.u_update.value if isinstance(fwd_params.u_update, Node)
                    else np.asarray(fwd_params.u_update))[0]

    h = np.zeros(half)
    fwd_states = []
    for i in range(n):
        h = F.gru_cell(F.take(embedded, i), h, fwd_params)
        fwd_states.append(h)

    h = np.zeros(half)
    bwd_states_rev = []
    for i in reversed(range(n)):
        h = F.gru_cell(F.take(embedded, i), h, bwd_params)
        bwd_states_rev.append(h)
    bwd_states = list(reversed(bwd_states_rev))

    states = [F.concat([f, b]) for f, b in zip(fwd_states, bwd_states)]
    final_state = F.concat([fwd_states[-1], bwd_states[0]])
    return states, final_state
