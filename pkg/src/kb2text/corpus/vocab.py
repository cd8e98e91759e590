"""Vocabularies: target tokens with OOV policy, plus label maps for slot
types and slot values."""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from pathlib import Path

from .data import CorpusError, Example
from .text import is_unit_token

PAD, UNK, BOS, EOS = "<pad>", "<unk>", "<bos>", "<eos>"
RESERVED = (PAD, UNK, BOS, EOS)


class Vocabulary:
    """token <-> id bijection with fixed reserved ids.

    Tokens below the frequency threshold map to UNK, except slot-value unit
    tokens, which are always retained (they are copy targets).
    """

    PAD_ID, UNK_ID, BOS_ID, EOS_ID = 0, 1, 2, 3

    def __init__(self, tokens: list[str], freqs: dict[str, int] | None = None):
        if list(tokens[: len(RESERVED)]) != list(RESERVED):
            tokens = list(RESERVED) + [t for t in tokens if t not in RESERVED]
        self.tokens: list[str] = list(tokens)
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        if len(self.token_to_id) != len(self.tokens):
            raise CorpusError("duplicate tokens in vocabulary")
        self.freqs: dict[str, int] = dict(freqs or {})

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, self.UNK_ID)

    def token(self, idx: int) -> str:
        return self.tokens[idx]

    def sha256(self) -> str:
        payload = json.dumps(self.tokens, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def to_json_dict(self) -> dict:
        return {
            "reserved": {t: i for i, t in enumerate(RESERVED)},
            "token_to_id": {t: i for i, t in enumerate(self.tokens)},
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Vocabulary":
        mapping = obj["token_to_id"]
        tokens = [None] * len(mapping)
        for t, i in mapping.items():
            tokens[i] = t
        if any(t is None for t in tokens):
            raise CorpusError("vocabulary ids are not dense")
        return cls(tokens)  # reserved header re-derived from the id order

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), ensure_ascii=False, sort_keys=True, indent=0) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocab(examples: list[Example], min_freq: int = 5) -> Vocabulary:
    """Frequency-thresholded vocabulary over collapsed references."""
    if not examples:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    counts: Counter[str] = Counter()
    for ex in examples:
        counts.update(ex.reference)
    kept = [t for t, c in counts.items() if c >= min_freq or is_unit_token(t)]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary(list(RESERVED) + kept, freqs=dict(counts))


class LabelVocab:
    """Index map for slot-type or slot-value labels with UNK fallback and a
    reserved NONE label for pseudo-triples that lack the field."""

    UNK_ID, NONE_ID = 0, 1
    UNK, NONE = "<unk>", "<none>"

    def __init__(self, labels: list[str]):
        base = [self.UNK, self.NONE]
        self.labels: list[str] = base + [l for l in labels if l not in base]
        self.label_to_id: dict[str, int] = {l: i for i, l in enumerate(self.labels)}
        if len(self.label_to_id) != len(self.labels):
            raise CorpusError("duplicate labels in label vocabulary")

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self.label_to_id

    def id(self, label: str) -> int:
        return self.label_to_id.get(label, self.UNK_ID)

    def sha256(self) -> str:
        payload = json.dumps(self.labels, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


def build_label_vocabs(examples: list[Example]) -> tuple[LabelVocab, LabelVocab]:
    """(slot-type vocab, slot-value vocab) over the given examples, ordered
    by descending frequency for determinism."""
    type_counts: Counter[str] = Counter()
    value_counts: Counter[str] = Counter()
    for ex in examples:
        for t in ex.kb.triples:
            type_counts[t.slot_type] += 1
            value_counts[t.slot_value] += 1
    types = sorted(type_counts, key=lambda s: (-type_counts[s], s))
    values = sorted(value_counts, key=lambda s: (-value_counts[s], s))
    return LabelVocab(types), LabelVocab(values)
