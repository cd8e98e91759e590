"""Domain data model: triples, knowledge bases, examples, corpus IO,
splits, and dataset statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .text import collapse_values


class CorpusError(ValueError):
    """Corpus parse/validation failure; carries the 1-based line number
    when the problem is tied to a specific JSONL line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Triple:
    """One KB fact: a slot type, its value, and the forward/backward row
    positions. Backward position mirrors the forward one from the end of
    the table: row_back = R - row + 1."""

    slot_type: str
    slot_value: str
    row: int
    row_back: int

    def __post_init__(self):
        if not self.slot_type or not self.slot_value:
            raise CorpusError("slot type and slot value must be non-empty")
        if self.row < 1 or self.row_back < 1:
            raise CorpusError(f"row positions must be >= 1, got ({self.row}, {self.row_back})")


@dataclass(frozen=True)
class KnowledgeBase:
    entity_id: str
    triples: tuple[Triple, ...]

    def __post_init__(self):
        if not self.triples:
            raise CorpusError("knowledge base must contain at least one triple")
        rows = [t.row for t in self.triples]
        if any(b < a for a, b in zip(rows, rows[1:])):
            raise CorpusError(f"rows must be nondecreasing, got {rows}")
        max_row = rows[-1]
        if sorted(set(rows)) != list(range(1, max_row + 1)):
            raise CorpusError(f"non-contiguous rows: {sorted(set(rows))}")
        for t in self.triples:
            if t.row_back != max_row - t.row + 1:
                raise CorpusError(
                    f"row_back {t.row_back} != {max_row} - {t.row} + 1 for triple {t.slot_type!r}"
                )

    @property
    def num_rows(self) -> int:
        return self.triples[-1].row

    def values(self) -> list[str]:
        return [t.slot_value for t in self.triples]

    def unique_values(self) -> list[str]:
        """Distinct slot-value strings in order of first appearance."""
        seen: dict[str, None] = {}
        for t in self.triples:
            seen.setdefault(t.slot_value, None)
        return list(seen)

    def rows_grouped(self) -> list[list[Triple]]:
        groups: list[list[Triple]] = [[] for _ in range(self.num_rows)]
        for t in self.triples:
            groups[t.row - 1].append(t)
        return groups


def make_kb(entity_id: str, typed_rows: list[tuple[str, str, int]]) -> KnowledgeBase:
    """Build a KB from (slot_type, slot_value, row) with row_back derived."""
    if not typed_rows:
        raise CorpusError("knowledge base must contain at least one triple")
    max_row = max(r for _, _, r in typed_rows)
    triples = tuple(
        Triple(slot_type=s, slot_value=v, row=r, row_back=max_row - r + 1)
        for s, v, r in typed_rows
    )
    return KnowledgeBase(entity_id=entity_id, triples=triples)


@dataclass(frozen=True)
class Example:
    """A KB paired with its reference description. ``reference`` is the
    collapsed token sequence; the raw text is kept for surface metrics."""

    kb: KnowledgeBase
    reference: tuple[str, ...]
    reference_text: str

    def __post_init__(self):
        from .text import is_unit_token, unit_value

        if not self.reference:
            raise CorpusError("reference must be non-empty")
        values = set(self.kb.values())
        for tok in self.reference:
            if is_unit_token(tok) and unit_value(tok) not in values:
                raise CorpusError(
                    f"collapsed unit token {tok!r} does not match any KB slot value"
                )


def example_from_text(kb: KnowledgeBase, reference_text: str) -> Example:
    tokens = tuple(collapse_values(reference_text, kb))
    return Example(kb=kb, reference=tokens, reference_text=reference_text)


# ---------------------------------------------------------------------------
# JSONL corpus IO
#
# One object per line:
#   {"entity_id": str,
#    "triples": [{"type": str, "value": str, "row": int}, ...],
#    "reference": str}
# row_back is always derived, never stored.
# ---------------------------------------------------------------------------


def load_corpus(path) -> list[Example]:
    path = Path(path)
    examples: list[Example] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as e:
                raise CorpusError(f"malformed JSON: {e.msg}", line=lineno) from e
            examples.append(_parse_example(obj, lineno))
    if not examples:
        raise CorpusError(f"no examples in {path}")
    return examples


def _parse_example(obj, lineno: int) -> Example:
    if not isinstance(obj, dict):
        raise CorpusError("each line must be a JSON object", line=lineno)
    for key in ("entity_id", "triples", "reference"):
        if key not in obj:
            raise CorpusError(f"missing field {key!r}", line=lineno)
    if not isinstance(obj["reference"], str) or not obj["reference"].strip():
        raise CorpusError("reference must be a non-empty string", line=lineno)
    rows: list[tuple[str, str, int]] = []
    if not isinstance(obj["triples"], list) or not obj["triples"]:
        raise CorpusError("triples must be a non-empty list", line=lineno)
    for i, t in enumerate(obj["triples"]):
        if not isinstance(t, dict):
            raise CorpusError(f"triple {i} must be an object", line=lineno)
        for key in ("type", "value", "row"):
            if key not in t:
                raise CorpusError(f"triple {i} missing field {key!r}", line=lineno)
        if not isinstance(t["row"], int):
            raise CorpusError(f"triple {i} row must be an integer", line=lineno)
        rows.append((str(t["type"]), str(t["value"]), t["row"]))
    try:
        kb = make_kb(str(obj["entity_id"]), rows)
        return example_from_text(kb, obj["reference"])
    except CorpusError as e:
        raise CorpusError(str(e), line=lineno) from e


def save_corpus(examples: list[Example], path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ex in examples:
            obj = {
                "entity_id": ex.kb.entity_id,
                "triples": [
                    {"type": t.slot_type, "value": t.slot_value, "row": t.row}
                    for t in ex.kb.triples
                ],
                "reference": ex.reference_text,
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# splits and statistics
# ---------------------------------------------------------------------------


def split(examples: list[Example], seed: int) -> tuple[list[Example], list[Example], list[Example]]:
    """Shuffled 80/10/10 train/dev/test partition; the remainder of uneven
    divisions goes to train."""
    n = len(examples)
    if n < 10:
        raise CorpusError(f"need at least 10 examples to split, got {n}")
    order = np.random.default_rng(np.random.SeedSequence(seed)).permutation(n)
    n_slice = n // 10
    test_idx = order[:n_slice]
    dev_idx = order[n_slice:2 * n_slice]
    train_idx = order[2 * n_slice:]
    pick = lambda idx: [examples[i] for i in idx]
    return pick(train_idx), pick(dev_idx), pick(test_idx)


@dataclass(frozen=True)
class CorpusStats:
    n_entities: int
    slots_per_sentence: float
    words_per_sentence: float
    slots_per_table: float
    words_per_entity: float
    sentences_per_entity: float

    def as_dict(self) -> dict:
        return {
            "n_entities": self.n_entities,
            "slots_per_sentence": self.slots_per_sentence,
            "words_per_sentence": self.words_per_sentence,
            "slots_per_table": self.slots_per_table,
            "words_per_entity": self.words_per_entity,
            "sentences_per_entity": self.sentences_per_entity,
        }


def stats(examples: list[Example]) -> CorpusStats:
    """Corpus statistics. A sentence boundary is a period token; a
    reference without any period counts as one sentence."""
    if not examples:
        raise CorpusError("cannot compute stats of an empty corpus")
    n = len(examples)
    slots = sum(len(ex.kb.triples) for ex in examples)
    words = sum(sum(1 for t in ex.reference if t != ".") for ex in examples)
    sentences = sum(max(1, sum(1 for t in ex.reference if t == ".")) for ex in examples)
    return CorpusStats(
        n_entities=n,
        slots_per_sentence=slots / sentences,
        words_per_sentence=words / sentences,
        slots_per_table=slots / n,
        words_per_entity=words / n,
        sentences_per_entity=sentences / n,
    )
