"""Attention over input triples.

Two mechanisms:

* slot-aware attention: per decode step, each triple is scored from the
  decoder state, its slot-type and slot-value embeddings, and its coverage
  (the summed attention it has already received), then normalized to a
  distribution used both to read context vectors and to drive copying.

* table-position self-attention: a static n x n matrix over triples computed
  once per example from row-position embeddings via in-link/out-link
  projections and a bilinear score. Row i holds triple i's distribution over
  its context triples; it never changes during decoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkit import funcs as F
from .numkit.tape import Node


@dataclass
class SlotAttentionParams:
    """Projections to the attention width plus the scoring vector.

    proj_state: (hidden, attn); proj_type/proj_value: (emb, attn);
    proj_cov: (attn,) applied to the scalar coverage of each triple;
    bias: (attn,); score: (attn,).
    """

    proj_state: object
    proj_type: object
    proj_value: object
    proj_cov: object
    bias: object
    score: object


@dataclass
class PositionAttentionParams:
    """In/out-link projections of [row; row_back] embeddings and the
    bilinear link scorer. proj_in/proj_out: (2*pos_emb, width);
    bilinear: (width, width)."""

    proj_in: object
    proj_out: object
    bilinear: object


class CoverageVector:
    """Running sum of past attention distributions: starts at zero,
    gains exactly alpha_t each step, never decreases."""

    __slots__ = ("values",)

    def __init__(self, values):
        self.values = values

    @classmethod
    def zeros(cls, n: int) -> "CoverageVector":
        return cls(np.zeros(n))

    def advanced(self, alpha) -> "CoverageVector":
        if isinstance(alpha, Node):
            return CoverageVector(alpha + self.values)
        return CoverageVector(self.values + alpha)


def attention_scores(state_vec, type_proj, value_proj, coverage, params: SlotAttentionParams):
    """Raw scores e_t over triples given precomputed type/value projections
    (each (n, attn) or None when the term is disabled)."""
    pre = value_proj + F.outer(coverage, params.proj_cov)
    if type_proj is not None:
        pre = pre + type_proj
    pre = pre + (F.matmul(state_vec, params.proj_state) + params.bias)
    return F.matmul(F.tanh(pre), params.score)


def slot_attention(state_vec, type_embs, value_embs, coverage, params: SlotAttentionParams,
                   use_types: bool = True):
    """Attention distribution over n triples and its raw scores.

    type_embs/value_embs are (n, emb) stacks of the triple embeddings;
    coverage is the length-n coverage vector for this step.
    """
    n = np.shape(value_embs.value if isinstance(value_embs, Node) else value_embs)[0]
    if n == 0:
        raise ValueError("slot attention over zero triples")
    cov = coverage.values if isinstance(coverage, CoverageVector) else coverage
    type_proj = F.matmul(type_embs, params.proj_type) if use_types else None
    value_proj = F.matmul(value_embs, params.proj_value)
    scores = attention_scores(state_vec, type_proj, value_proj, cov, params)
    return F.softmax(scores), scores


def position_self_attention(position_embs, params: PositionAttentionParams):
    """Static link matrix F over triples.

    position_embs: (n, 2*pos_emb) rows of [row_emb; row_back_emb]. Row i of
    the result is a probability distribution over context triples j.
    """
    g_in = F.tanh(F.matmul(position_embs, params.proj_in))
    g_out = F.tanh(F.matmul(position_embs, params.proj_out))
    scores = F.matmul(F.matmul(g_in, params.bilinear), F.transpose(g_out))
    return F.softmax_rows(scores)


def position_contexts(link_matrix, type_embs, value_embs):
    """Position-aware representations: each triple's type/value context is
    the link-weighted mix of all triples' embeddings."""
    return F.matmul(link_matrix, type_embs), F.matmul(link_matrix, value_embs)


def context_vectors(alpha, type_mat, value_mat):
    """Attention-weighted type and value context vectors. In position mode,
    pass the position-aware matrices; type_mat may be None (type context
    disabled), which yields a zero vector."""
    value_ctx = F.matmul(alpha, value_mat)
    if type_mat is None:
        width = np.shape(value_ctx.value if isinstance(value_ctx, Node) else value_ctx)[0]
        return np.zeros(width), value_ctx
    return F.matmul(alpha, type_mat), value_ctx
