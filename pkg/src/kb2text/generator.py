"""Decoder, copy gate, mixture distribution, losses, and training.

The decoder is a forward GRU seeded by the encoder's final state. At each
step it attends over the source units (slot-aware attention with coverage),
reads type/value context vectors, and produces a vocabulary distribution.
In pointer modes a sigmoid gate mixes that with a copy distribution obtained
by pooling attention mass per unique slot value; the final probability of a
token is gate * P_vocab + (1 - gate) * P_copy. The loss is the negative log
likelihood of the reference plus a coverage penalty sum_i min(alpha_i, c_i)
that punishes re-attending.

One code path serves all four model configurations:

  seq2seq                interleaved type/value stream, no copying
  pointer                values only, type attention term disabled
  pointer_type           typed pairs, full slot-aware attention
  pointer_type_position  quadruples, static position links re-route contexts
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from . import attention as A
from . import encoder as E
from .config import ModelConfig, RunConfig
from .corpus.data import Example, KnowledgeBase
from .corpus.text import is_unit_token, unit_token, unit_value
from .corpus.vocab import BOS, EOS, LabelVocab, Vocabulary, build_label_vocabs, build_vocab
from .numkit import Tape, adam_step, backward, clip_gradients, init_adam, make_rng
from .numkit import funcs as F
from .numkit.tape import Node
from .params import ModelParams, bind_view, init_params


class ModelMode(str, enum.Enum):
    SEQ2SEQ = "seq2seq"
    POINTER = "pointer"
    POINTER_TYPE = "pointer_type"
    POINTER_TYPE_POSITION = "pointer_type_position"

    @property
    def uses_copy(self) -> bool:
        return self is not ModelMode.SEQ2SEQ

    @property
    def uses_types(self) -> bool:
        # only the bare pointer drops the slot-type attention term; the
        # seq2seq stream keeps it (value elements carry the NONE type)
        return self is not ModelMode.POINTER

    @property
    def uses_positions(self) -> bool:
        return self is ModelMode.POINTER_TYPE_POSITION

    @classmethod
    def parse(cls, name: str) -> "ModelMode":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown model mode {name!r}; valid modes: {valid}") from None


@dataclass
class Model:
    """Trained (or initialized) generator: parameters plus the vocabularies
    they were built against."""

    config: ModelConfig
    mode: ModelMode
    params: ModelParams
    vocab: Vocabulary
    type_vocab: LabelVocab
    value_vocab: LabelVocab


def new_model(config: ModelConfig, mode: ModelMode, vocab: Vocabulary,
              type_vocab: LabelVocab, value_vocab: LabelVocab, rng) -> Model:
    params = init_params(config, len(type_vocab), len(value_vocab), len(vocab), rng)
    return Model(config=config, mode=mode, params=params, vocab=vocab,
                 type_vocab=type_vocab, value_vocab=value_vocab)


# ---------------------------------------------------------------------------
# per-example decode context
# ---------------------------------------------------------------------------


@dataclass
class DecodeContext:
    """Everything about one example that is fixed across decode steps."""

    kb: KnowledgeBase
    mode: ModelMode
    units: list
    n: int
    enc: E.EncoderOutput
    type_proj: object          # (n, attn) or None in pointer mode
    value_proj: object         # (n, attn)
    link_matrix: object | None  # static position self-attention F, (n, n)
    ctx_type_mat: object | None  # matrix read by the type context (None: zeros)
    ctx_value_mat: object
    copy_matrix: np.ndarray | None  # (n, n_unique) 0/1 aggregation, constant
    unique_values: list[str]
    unit_vocab_ids: list[int | None]  # vocab id of each unique value's unit token
    view: object


def prepare_context(kb: KnowledgeBase, model: Model, view=None, units=None) -> DecodeContext:
    """Run the encoder and precompute the step-invariant pieces (attention
    projections, position links, copy aggregation). ``units`` overrides the
    mode's default source-unit sequence (e.g. a permuted order)."""
    view = view if view is not None else model.params.view()
    mode = model.mode
    units = E.source_units(kb, mode) if units is None else list(units)
    embedded, type_stack, value_stack = E.embed_fields(
        units, view.tables, model.type_vocab, model.value_vocab, mode.uses_positions
    )
    states, final_state = E.encode(embedded, view.enc_fwd, view.enc_bwd)
    enc = E.EncoderOutput(states=states, final_state=final_state,
                          type_embeddings=type_stack, value_embeddings=value_stack)

    type_proj = F.matmul(type_stack, view.attn.proj_type) if mode.uses_types else None
    value_proj = F.matmul(value_stack, view.attn.proj_value)

    link_matrix = None
    ctx_type_mat: object | None = type_stack if mode.uses_types else None
    ctx_value_mat = value_stack
    if mode.uses_positions:
        pos_embs = F.concat(
            [F.rows(view.tables.pos_fwd_table, [u.row - 1 for u in units]),
             F.rows(view.tables.pos_back_table, [u.row_back - 1 for u in units])],
            axis=1,
        )
        link_matrix = A.position_self_attention(pos_embs, view.posattn)
        ctx_type_mat, ctx_value_mat = A.position_contexts(link_matrix, type_stack, value_stack)

    copy_matrix = None
    unique_values: list[str] = []
    unit_vocab_ids: list[int | None] = []
    if mode.uses_copy:
        index: dict[str, int] = {}
        for u in units:
            if u.copy_value is not None and u.copy_value not in index:
                index[u.copy_value] = len(index)
        unique_values = list(index)
        copy_matrix = np.zeros((len(units), len(unique_values)))
        for i, u in enumerate(units):
            if u.copy_value is not None:
                copy_matrix[i, index[u.copy_value]] = 1.0
        for v in unique_values:
            tok = unit_token(v)
            unit_vocab_ids.append(model.vocab.token_to_id.get(tok))

    return DecodeContext(
        kb=kb, mode=mode, units=units, n=len(units), enc=enc,
        type_proj=type_proj, value_proj=value_proj, link_matrix=link_matrix,
        ctx_type_mat=ctx_type_mat, ctx_value_mat=ctx_value_mat,
        copy_matrix=copy_matrix, unique_values=unique_values,
        unit_vocab_ids=unit_vocab_ids, view=view,
    )


@dataclass
class DecoderState:
    """Step-local decoder state. The context carries the cached static
    pieces (position links, starred context matrices)."""

    ctx: DecodeContext
    hidden: object
    coverage: A.CoverageVector
    prev_token: str
    step: int = 0


def initial_state(ctx: DecodeContext) -> DecoderState:
    return DecoderState(
        ctx=ctx,
        hidden=ctx.enc.final_state,
        coverage=A.CoverageVector.zeros(ctx.n),
        prev_token=BOS,
        step=0,
    )


@dataclass
class StepOutput:
    """Raw pieces of one decode step, before a token is chosen."""

    hidden: object
    alpha: object
    scores: object
    p_gen: object | None      # None in seq2seq mode
    vocab_dist: object
    copy_dist: object | None  # distribution over ctx.unique_values
    coverage_before: A.CoverageVector
    state_after: DecoderState


def token_embedding(token: str, model: Model, view) -> object:
    """Previous-token embedding: slot-value unit tokens look up the value
    table, everything else the target table (OOV words hit UNK)."""
    if is_unit_token(token):
        value = unit_value(token)
        if value in model.value_vocab:
            return F.take(view.tables.value_table, model.value_vocab.id(value))
        return F.take(view.tables.value_table, LabelVocab.UNK_ID)
    return F.take(view.target_table, model.vocab.id(token))


def step_core(state: DecoderState, model: Model, p_gen_override: float | None = None) -> StepOutput:
    """One decode step: advance the GRU, attend, and build the vocabulary
    and copy distributions. Works on arrays or tape nodes alike."""
    ctx = state.ctx
    view = ctx.view
    y_emb = token_embedding(state.prev_token, model, view)
    hidden = F.gru_cell(y_emb, state.hidden, view.dec)

    scores = A.attention_scores(hidden, ctx.type_proj, ctx.value_proj,
                                state.coverage.values, view.attn)
    alpha = F.softmax(scores)

    type_ctx, value_ctx = A.context_vectors(alpha, ctx.ctx_type_mat, ctx.ctx_value_mat)
    features = F.concat([hidden, type_ctx, value_ctx])
    vocab_dist = F.softmax(F.matmul(features, view.out_proj) + view.out_bias)

    p_gen = None
    copy_dist = None
    if ctx.mode.uses_copy:
        if p_gen_override is not None:
            p_gen = float(p_gen_override)
        else:
            gate_pre = (F.dot(view.gate.w_type, type_ctx) + F.dot(view.gate.w_value, value_ctx)
                        + F.dot(view.gate.w_state, hidden) + F.dot(view.gate.w_prev, y_emb)
                        + view.gate.bias)
            p_gen = F.sigmoid(gate_pre)
        copy_dist = F.matmul(alpha, ctx.copy_matrix)

    next_state = DecoderState(
        ctx=ctx,
        hidden=hidden,
        coverage=state.coverage.advanced(alpha),
        prev_token=state.prev_token,  # placeholder until the token is chosen
        step=state.step + 1,
    )
    return StepOutput(hidden=hidden, alpha=alpha, scores=scores, p_gen=p_gen,
                      vocab_dist=vocab_dist, copy_dist=copy_dist,
                      coverage_before=state.coverage, state_after=next_state)


def source_distribution(alpha, kb: KnowledgeBase) -> tuple[np.ndarray, list[str]]:
    """Aggregate attention mass per unique slot value: the copy
    distribution. Returns (probabilities, value strings)."""
    values = kb.values()
    index: dict[str, int] = {}
    for v in values:
        index.setdefault(v, len(index))
    alpha = np.asarray(alpha)
    if alpha.shape != (len(values),):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({len(values)},)")
    out = np.zeros(len(index))
    for a, v in zip(alpha, values):
        out[index[v]] += a
    return out, list(index)


# ---------------------------------------------------------------------------
# final mixture over vocabulary + copyable values (plain arrays only)
# ---------------------------------------------------------------------------


@dataclass
class ExtendedVocab:
    """The decode-time token space: the vocabulary plus this KB's
    out-of-vocabulary slot values appended at the end."""

    vocab: Vocabulary
    extra_tokens: list[str]  # unit tokens of OOV unique values

    def __len__(self):
        return len(self.vocab) + len(self.extra_tokens)

    def token(self, idx: int) -> str:
        if idx < len(self.vocab):
            return self.vocab.token(idx)
        return self.extra_tokens[idx - len(self.vocab)]


def extended_vocab(ctx: DecodeContext, vocab: Vocabulary) -> ExtendedVocab:
    extra = [unit_token(v) for v, tid in zip(ctx.unique_values, ctx.unit_vocab_ids) if tid is None]
    return ExtendedVocab(vocab=vocab, extra_tokens=extra)


def final_distribution(out: StepOutput, ctx: DecodeContext) -> np.ndarray:
    """Mixture gate * P_vocab + (1 - gate) * P_copy over the extended token
    space. In seq2seq mode this is exactly the vocabulary distribution."""
    vocab_dist = np.asarray(out.vocab_dist.value if isinstance(out.vocab_dist, Node) else out.vocab_dist)
    if not ctx.mode.uses_copy:
        return vocab_dist.copy()
    p_gen = float(out.p_gen.value if isinstance(out.p_gen, Node) else out.p_gen)
    copy_dist = np.asarray(out.copy_dist.value if isinstance(out.copy_dist, Node) else out.copy_dist)
    n_extra = sum(1 for tid in ctx.unit_vocab_ids if tid is None)
    dist = np.zeros(vocab_dist.size + n_extra)
    dist[:vocab_dist.size] = p_gen * vocab_dist
    extra_at = vocab_dist.size
    for j, tid in enumerate(ctx.unit_vocab_ids):
        mass = (1.0 - p_gen) * copy_dist[j]
        if tid is None:
            dist[extra_at] += mass
            extra_at += 1
        else:
            dist[tid] += mass
    return dist


def decode_step(state: DecoderState, model: Model, p_gen_override: float | None = None):
    """Public single step: returns (final distribution over vocab + copyable
    values, alpha, p_gen, successor state). The successor still needs the
    chosen token fed via ``feed_token``."""
    out = step_core(state, model, p_gen_override=p_gen_override)
    dist = final_distribution(out, state.ctx)
    p_gen = out.p_gen
    if isinstance(p_gen, Node):
        p_gen = float(p_gen.value)
    alpha = out.alpha.value if isinstance(out.alpha, Node) else out.alpha
    return dist, np.asarray(alpha), p_gen, out.state_after


def feed_token(state: DecoderState, token: str) -> DecoderState:
    return replace(state, prev_token=token)


# ---------------------------------------------------------------------------
# sequence loss
# ---------------------------------------------------------------------------


@dataclass
class LossBreakdown:
    loss: object          # scalar (node during training)
    nll: float
    coverage_penalty: float
    n_tokens: int
    oov_targets: int      # reference tokens scored as UNK

    @property
    def loss_value(self) -> float:
        return float(self.loss.value) if isinstance(self.loss, Node) else float(self.loss)

    @property
    def nll_per_token(self) -> float:
        return self.nll / max(1, self.n_tokens)

    @property
    def loss_per_token(self) -> float:
        return self.loss_value / max(1, self.n_tokens)


def _target_prob(out: StepOutput, ctx: DecodeContext, model: Model, token: str):
    """Probability node/scalar of the reference token under the step's
    mixture, mirroring ``final_distribution`` entry by entry."""
    vocab = model.vocab
    if not ctx.mode.uses_copy:
        return F.take(out.vocab_dist, vocab.id(token)), token not in vocab

    copy_index = None
    if is_unit_token(token):
        value = unit_value(token)
        try:
            copy_index = ctx.unique_values.index(value)
        except ValueError:
            copy_index = None
    one_minus = 1.0 - out.p_gen
    if copy_index is not None:
        tid = ctx.unit_vocab_ids[copy_index]
        copy_part = one_minus * F.take(out.copy_dist, copy_index)
        if tid is None:
            return copy_part, False
        return out.p_gen * F.take(out.vocab_dist, tid) + copy_part, False
    oov = token not in vocab
    return out.p_gen * F.take(out.vocab_dist, vocab.id(token)), oov


def sequence_loss(example: Example, model: Model, view=None,
                  coverage_weight: float | None = None) -> LossBreakdown:
    """Teacher-forced loss over the reference plus the end-of-sequence
    token: sum of -log P(y_t) plus the weighted coverage penalty."""
    lam = model.config.coverage_weight if coverage_weight is None else coverage_weight
    ctx = prepare_context(example.kb, model, view=view)
    state = initial_state(ctx)
    targets = list(example.reference) + [EOS]

    total = None
    nll_val = 0.0
    cov_val = 0.0
    oov = 0
    for token in targets:
        out = step_core(state, model)
        prob, was_oov = _target_prob(out, ctx, model, token)
        oov += int(was_oov)
        term = -F.log(prob) if isinstance(prob, Node) else -np.log(prob)
        nll_val += float(term.value) if isinstance(term, Node) else float(term)
        if lam != 0.0:
            overlap = F.sum_all(F.minimum(out.alpha, out.coverage_before.values))
            cov_val += float(overlap.value) if isinstance(overlap, Node) else float(overlap)
            term = term + lam * overlap
        total = term if total is None else total + term
        state = feed_token(out.state_after, token)

    return LossBreakdown(loss=total, nll=nll_val, coverage_penalty=cov_val,
                         n_tokens=len(targets), oov_targets=oov)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class EpochLog:
    epoch: int
    train_loss_per_token: float
    train_nll_per_token: float
    dev_nll_per_token: float
    dev_loss_per_token: float
    is_best: bool

    def as_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss_per_token": self.train_loss_per_token,
            "train_nll_per_token": self.train_nll_per_token,
            "dev_nll_per_token": self.dev_nll_per_token,
            "dev_loss_per_token": self.dev_loss_per_token,
            "is_best": self.is_best,
        }


def evaluate_nll(examples: list[Example], model: Model,
                 coverage_weight: float | None = None) -> tuple[float, float]:
    """(nll per token, full loss per token) on plain arrays, no tape."""
    view = model.params.view()
    nll = loss = tokens = 0
    for ex in examples:
        br = sequence_loss(ex, model, view=view, coverage_weight=coverage_weight)
        nll += br.nll
        loss += br.loss_value
        tokens += br.n_tokens
    return nll / max(1, tokens), loss / max(1, tokens)


def train(train_examples: list[Example], dev_examples: list[Example],
          config: RunConfig, log_fn=None) -> tuple[Model, list[EpochLog]]:
    """Adam training with teacher forcing, batch-averaged gradients, global
    norm clipping, and best-dev checkpoint selection. Deterministic given
    config.seed."""
    if not train_examples:
        raise ValueError("empty training split")
    mode = ModelMode.parse(config.mode)
    vocab = build_vocab(train_examples, min_freq=config.min_freq)
    type_vocab, value_vocab = build_label_vocabs(train_examples)
    rng = make_rng(config.seed)
    model = new_model(config.model_config(), mode, vocab, type_vocab, value_vocab, rng)

    adam = init_adam(model.params.arrays, learning_rate=config.learning_rate)
    best_arrays = model.params.arrays
    best_dev = float("inf")
    logs: list[EpochLog] = []

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_examples))
        epoch_loss = epoch_nll = 0.0
        epoch_tokens = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_examples[i] for i in order[start:start + config.batch_size]]
            grads_sum: dict[str, np.ndarray] | None = None
            for ex in batch:
                tape = Tape()
                view = bind_view(tape.leaves(model.params.raw()))
                br = sequence_loss(ex, model, view=view)
                if not np.isfinite(br.loss_value):
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch} on {ex.kb.entity_id}"
                    )
                grads = backward(tape, br.loss)
                if grads_sum is None:
                    grads_sum = {k: g.data.copy() for k, g in grads.items()}
                else:
                    for k, g in grads.items():
                        grads_sum[k] += g.data
                epoch_loss += br.loss_value
                epoch_nll += br.nll
                epoch_tokens += br.n_tokens
            scale = 1.0 / len(batch)
            grads_avg = {k: g * scale for k, g in grads_sum.items()}
            clipped = clip_gradients(grads_avg, max_norm=config.grad_clip)
            try:
                new_arrays, adam = adam_step(model.params.arrays, clipped, adam)
            except ValueError as e:
                raise TrainingDiverged(f"diverged during update at epoch {epoch}: {e}") from e
            model.params = model.params.replace_arrays(new_arrays)

        dev_nll, dev_loss = evaluate_nll(dev_examples, model) if dev_examples else (
            epoch_nll / max(1, epoch_tokens), epoch_loss / max(1, epoch_tokens))
        is_best = dev_nll < best_dev
        if is_best:
            best_dev = dev_nll
            best_arrays = model.params.arrays
        entry = EpochLog(
            epoch=epoch,
            train_loss_per_token=epoch_loss / max(1, epoch_tokens),
            train_nll_per_token=epoch_nll / max(1, epoch_tokens),
            dev_nll_per_token=dev_nll,
            dev_loss_per_token=dev_loss,
            is_best=is_best,
        )
        logs.append(entry)
        if log_fn is not None:
            log_fn(entry)

    model.params = model.params.replace_arrays(best_arrays)
    return model, logs
