"""Generation metrics: BLEU, ROUGE-L, and KB reconstruction.

KB reconstruction asks how much of the input table survives into the text.
A deterministic normalized-exact-match extractor stands in for a human
reconstructor: it is exact on synthetic corpora (whose templates use values
verbatim) and a documented approximation on natural text. Scores come at two
levels: type/value pairs (overall slot filling) and whole table rows
(inter-dependent slot filling), where a row counts only when all of its
values land together in a single sentence.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .corpus.data import KnowledgeBase
from .corpus.text import normalize_match, segment_values

_TRAILING_PUNCT = ".,;:!?"


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_corpus(pairs: list[tuple[list[str], list[str]]], max_n: int = 4) -> float:
    """Corpus BLEU: clipped n-gram precision up to max_n, geometric mean
    over the orders that have any candidate n-grams, brevity penalty
    exp(1 - r/c) when the candidate is shorter than the reference."""
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hyp, ref in pairs:
        if not ref:
            raise ValueError("BLEU reference must be non-empty")
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngrams(ref, n)
            matches[n - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
            totals[n - 1] += sum(hyp_counts.values())
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    used = 0
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        if m == 0:
            return 0.0
        log_sum += math.log(m / t)
        used += 1
    if used == 0:
        return 0.0
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_sum / used)


def bleu(hypothesis: list[str], reference: list[str], max_n: int = 4) -> float:
    """BLEU of a single pair (a one-sentence corpus)."""
    return bleu_corpus([(list(hypothesis), list(reference))], max_n=max_n)


def bleu_sentence(hypothesis: list[str], reference: list[str], max_n: int = 4) -> float:
    """Add-one smoothed per-sentence BLEU, for diagnostics only."""
    if not reference:
        raise ValueError("BLEU reference must be non-empty")
    if not hypothesis:
        return 0.0
    log_sum = 0.0
    used = 0
    for n in range(1, max_n + 1):
        hyp_counts = _ngrams(list(hypothesis), n)
        total = sum(hyp_counts.values())
        if total == 0:
            continue
        ref_counts = _ngrams(list(reference), n)
        m = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        log_sum += math.log((m + 1) / (total + 1))
        used += 1
    bp = 1.0 if len(hypothesis) >= len(reference) else math.exp(1.0 - len(reference) / len(hypothesis))
    return bp * math.exp(log_sum / used)


# ---------------------------------------------------------------------------
# ROUGE-L
# ---------------------------------------------------------------------------


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(hypothesis: list[str], reference: list[str], beta_sq: float = 1.44) -> float:
    """LCS F-measure with recall-favoring weight beta^2 (default 1.2^2)."""
    if not reference:
        raise ValueError("ROUGE-L reference must be non-empty")
    if not hypothesis:
        return 0.0
    lcs = _lcs_length(list(hypothesis), list(reference))
    if lcs == 0:
        return 0.0
    p = lcs / len(hypothesis)
    r = lcs / len(reference)
    return (1 + beta_sq) * p * r / (r + beta_sq * p)


# ---------------------------------------------------------------------------
# KB reconstruction
# ---------------------------------------------------------------------------


def _match_form(value: str) -> str:
    return normalize_match(value).rstrip(_TRAILING_PUNCT).strip()


@dataclass(frozen=True)
class PairMatch:
    """One gold slot matched in the text (at most once per gold slot)."""

    slot_type: str
    slot_value: str
    row: int
    offset: int  # character offset of the occurrence that claimed the slot


@dataclass(frozen=True)
class RowRecord:
    row: int
    pairs: tuple[PairMatch, ...]   # gold slots of this row found in the text
    sentences: tuple[int, ...]     # sentence indices touching this row
    correct: bool                  # all of the row's values inside one sentence


@dataclass(frozen=True)
class ReconstructedKB:
    """KB pulled back out of generated text, aligned against the gold KB."""

    rows: tuple[RowRecord, ...]
    pairs_predicted: int   # value occurrences found (duplicates included)
    pairs_correct: int     # distinct gold slots matched
    pairs_gold: int
    redundancy: int        # occurrences beyond what the gold slots can absorb
    rows_predicted: int    # (sentence, gold row) contacts
    rows_correct: int
    rows_gold: int


def reconstruct(text: str, gold_kb: KnowledgeBase) -> ReconstructedKB:
    """Extract gold values from text and align them with the gold KB.

    A (type, value) pair is predicted wherever the value string occurs
    (case/whitespace-insensitive, trailing punctuation ignored, longest value
    first). Occurrences claim gold slots greedily in KB order, one slot per
    occurrence; surplus occurrences count as redundancy. At the row level
    every (sentence, row) contact is one predicted row, and a gold row is
    correct only when some single sentence contains all of its values.
    """
    forms: dict[str, list[int]] = {}
    for i, t in enumerate(gold_kb.triples):
        forms.setdefault(_match_form(t.slot_value), []).append(i)

    # segmentation keeps value-internal periods ("F.C.") away from
    # sentence splitting; raw values go in so their own trailing
    # punctuation is consumed with the match
    segments = segment_values(text, [t.slot_value for t in gold_kb.triples])

    # occurrences per form with sentence index and char offset
    occurrences: dict[str, list[tuple[int, int]]] = {f: [] for f in forms}
    sentence_idx = 0
    offset = 0
    any_text_in_sentence = False
    for val, seg in segments:
        if val is not None:
            occurrences[_match_form(val)].append((sentence_idx, offset))
            any_text_in_sentence = True
        else:
            for ch in seg:
                if ch == ".":
                    if any_text_in_sentence:
                        sentence_idx += 1
                        any_text_in_sentence = False
                else:
                    if not ch.isspace():
                        any_text_in_sentence = True
        offset += len(seg)

    pairs_predicted = 0
    redundancy = 0
    matched: dict[int, PairMatch] = {}  # triple index -> match
    forms_by_sentence: dict[int, set[str]] = {}
    for form, occs in occurrences.items():
        pairs_predicted += len(occs)
        slots = forms[form]
        for (sent, off), triple_idx in zip(occs, slots):
            t = gold_kb.triples[triple_idx]
            matched[triple_idx] = PairMatch(
                slot_type=t.slot_type, slot_value=t.slot_value, row=t.row, offset=off
            )
        redundancy += max(0, len(occs) - len(slots))
        for sent, _ in occs:
            forms_by_sentence.setdefault(sent, set()).add(form)

    rows_predicted = 0
    records: list[RowRecord] = []
    rows_correct = 0
    for row_triples in gold_kb.rows_grouped():
        row_no = row_triples[0].row
        row_forms = {_match_form(t.slot_value) for t in row_triples}
        touching = sorted(
            s for s, present in forms_by_sentence.items() if present & row_forms
        )
        rows_predicted += len(touching)
        correct = any(row_forms <= forms_by_sentence[s] for s in touching)
        if correct:
            rows_correct += 1
        row_pairs = tuple(
            matched[i]
            for i, t in enumerate(gold_kb.triples)
            if t.row == row_no and i in matched
        )
        records.append(RowRecord(row=row_no, pairs=row_pairs, sentences=tuple(touching), correct=correct))

    return ReconstructedKB(
        rows=tuple(records),
        pairs_predicted=pairs_predicted,
        pairs_correct=len(matched),
        pairs_gold=len(gold_kb.triples),
        redundancy=redundancy,
        rows_predicted=rows_predicted,
        rows_correct=rows_correct,
        rows_gold=gold_kb.num_rows,
    )


@dataclass(frozen=True)
class ScoreTriple:
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class ReconstructionReport:
    overall: ScoreTriple
    interdependent: ScoreTriple
    counts: dict
    flags: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "overall": self.overall.as_dict(),
            "interdependent": self.interdependent.as_dict(),
            "counts": self.counts,
            "flags": list(self.flags),
        }


def _score_level(predicted: int, correct: int, gold: int) -> tuple[ScoreTriple, list[str]]:
    if correct > predicted or correct > gold:
        raise ValueError(
            f"inconsistent counts: correct={correct}, predicted={predicted}, gold={gold}"
        )
    if predicted < 0 or gold < 0:
        raise ValueError("counts must be nonnegative")
    flags = []
    if predicted == 0:
        flags.append("no predictions: precision defined as 0")
        p = 0.0
    else:
        p = correct / predicted
    r = correct / gold if gold > 0 else 0.0
    f1 = 2 * p * r / (p + r) if (p + r) > 0 else 0.0
    return ScoreTriple(precision=p, recall=r, f1=f1), flags


def score_reconstruction(source) -> ReconstructionReport:
    """P/R/F1 at both levels from a ReconstructedKB or from raw counts.

    Raw counts come as {"overall": (predicted, correct, gold),
    "interdependent": (predicted, correct, gold)}.
    """
    if isinstance(source, ReconstructedKB):
        overall_counts = (source.pairs_predicted, source.pairs_correct, source.pairs_gold)
        inter_counts = (source.rows_predicted, source.rows_correct, source.rows_gold)
    else:
        overall_counts = tuple(source["overall"])
        inter_counts = tuple(source["interdependent"])
    overall, flags_a = _score_level(*overall_counts)
    inter, flags_b = _score_level(*inter_counts)
    return ReconstructionReport(
        overall=overall,
        interdependent=inter,
        counts={
            "overall": {"predicted": overall_counts[0], "correct": overall_counts[1], "gold": overall_counts[2]},
            "interdependent": {"predicted": inter_counts[0], "correct": inter_counts[1], "gold": inter_counts[2]},
        },
        flags=tuple(flags_a + flags_b),
    )
