"""Decoding: greedy, beam search with copy support, attention export."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus.data import KnowledgeBase
from .corpus.text import render_text
from .corpus.vocab import EOS
from .encoder import unit_label
from .generator import (
    DecoderState,
    Model,
    extended_vocab,
    feed_token,
    final_distribution,
    initial_state,
    prepare_context,
    step_core,
)


@dataclass
class StepTrace:
    alpha: np.ndarray
    p_gen: float | None


@dataclass
class DecodeResult:
    tokens: list[str]          # emitted tokens, EOS excluded
    logprob: float             # sum of log P of every chosen token, EOS included
    trace: list[StepTrace]     # one entry per executed step (incl. the EOS step)
    link_matrix: np.ndarray | None
    unit_labels: list[str]

    @property
    def text(self) -> str:
        return render_text(self.tokens)


@dataclass
class Hypothesis:
    """A (possibly finished) beam item."""

    tokens: tuple[str, ...]
    logprob: float
    state: DecoderState
    trace: tuple[StepTrace, ...] = ()
    finished: bool = False

    @property
    def normalized(self) -> float:
        return self.logprob / max(1, len(self.tokens) + (1 if self.finished else 0))

    @property
    def text(self) -> str:
        return render_text(list(self.tokens))


def _safe_log(dist: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(dist)


def _step_distribution(state: DecoderState, model: Model):
    out = step_core(state, model)
    dist = final_distribution(out, state.ctx)
    p_gen = out.p_gen
    if p_gen is not None and not isinstance(p_gen, float):
        p_gen = float(p_gen.value) if hasattr(p_gen, "value") else float(p_gen)
    alpha = np.asarray(out.alpha.value if hasattr(out.alpha, "value") else out.alpha)
    return dist, StepTrace(alpha=alpha, p_gen=p_gen), out.state_after


def _begin(kb: KnowledgeBase, model: Model):
    """Decode setup: (context, extended token space, initial state)."""
    ctx = prepare_context(kb, model)
    return ctx, extended_vocab(ctx, model.vocab), initial_state(ctx)


def greedy_decode(kb: KnowledgeBase, model: Model, max_len: int = 100) -> DecodeResult:
    """Argmax decoding; ties break toward the lowest token id. Stops at the
    end-of-sequence token or after max_len emissions."""
    ctx, ext, state = _begin(kb, model)
    tokens: list[str] = []
    trace: list[StepTrace] = []
    logprob = 0.0
    for _ in range(max_len):
        dist, step_trace, state = _step_distribution(state, model)
        trace.append(step_trace)
        choice = int(np.argmax(dist))  # first maximum = lowest id on ties
        logprob += float(_safe_log(dist)[choice])
        token = ext.token(choice)
        if token == EOS:
            break
        tokens.append(token)
        state = feed_token(state, token)
    link = ctx.link_matrix
    if link is not None and hasattr(link, "value"):
        link = link.value
    return DecodeResult(
        tokens=tokens,
        logprob=logprob,
        trace=trace,
        link_matrix=None if link is None else np.asarray(link),
        unit_labels=[unit_label(u) for u in ctx.units],
    )


def beam_decode(kb: KnowledgeBase, model: Model, beam: int = 4, max_len: int = 100) -> Hypothesis:
    """Length-normalized beam search.

    Finished hypotheses retire to a pool; the search stops once no live
    hypothesis could still beat the pool's best normalized score (extra
    tokens only add non-positive log-probability, so logprob / max_len
    bounds anything a live item can reach). beam=1 reproduces greedy
    decoding token for token.
    """
    if beam < 1:
        raise ValueError(f"beam must be >= 1, got {beam}")
    ctx, ext, start = _begin(kb, model)
    live = [Hypothesis(tokens=(), logprob=0.0, state=start)]
    pool: list[Hypothesis] = []

    for _ in range(max_len):
        if not live:
            break
        candidates: list[tuple[float, int, int, str]] = []
        for h_idx, hyp in enumerate(live):
            dist, step_trace, next_state = _step_distribution(hyp.state, model)
            logs = _safe_log(dist)
            order = np.argsort(-logs, kind="stable")[:beam]
            for tid in order:
                total = hyp.logprob + float(logs[tid])
                if not np.isfinite(total):
                    continue
                candidates.append((total, h_idx, int(tid), ext.token(int(tid))))
            live[h_idx] = Hypothesis(
                tokens=hyp.tokens, logprob=hyp.logprob,
                state=next_state, trace=hyp.trace + (step_trace,),
            )
        if not candidates:
            break
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        new_live: list[Hypothesis] = []
        for total, h_idx, tid, token in candidates[:beam]:
            parent = live[h_idx]
            if token == EOS:
                pool.append(Hypothesis(
                    tokens=parent.tokens, logprob=total,
                    state=parent.state, trace=parent.trace, finished=True,
                ))
            else:
                new_live.append(Hypothesis(
                    tokens=parent.tokens + (token,), logprob=total,
                    state=feed_token(parent.state, token), trace=parent.trace,
                ))
        live = new_live
        if pool:
            best_pool = max(h.normalized for h in pool)
            reachable = max((h.logprob / max_len for h in live), default=-np.inf)
            if best_pool >= reachable:
                break

    for hyp in live:  # length limit reached without EOS
        pool.append(hyp)
    if not pool:
        return Hypothesis(tokens=(), logprob=0.0, state=initial_state(ctx), finished=False)
    best = max(pool, key=lambda h: h.normalized)
    return best


def dump_attention(trace: list[StepTrace], link_matrix: np.ndarray | None,
                   unit_labels: list[str], alpha_path, link_path) -> None:
    """Write the per-step attention table and the static position-link
    matrix as CSV. Floats carry 17 significant digits so a parse round-trip
    reproduces them exactly."""
    alpha_path = Path(alpha_path)
    with alpha_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + unit_labels)
        for i, step in enumerate(trace):
            writer.writerow([i] + [f"{x:.17g}" for x in step.alpha])
    if link_matrix is not None:
        link_path = Path(link_path)
        with link_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([""] + unit_labels)
            for label, row in zip(unit_labels, np.asarray(link_matrix)):
                writer.writerow([label] + [f"{x:.17g}" for x in row])


def load_attention_csv(path) -> np.ndarray:
    """Parse a matrix written by dump_attention (labels stripped)."""
    with Path(path).open("r", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(x) for x in row[1:]] for row in rows[1:]])
