"""Versioned checkpoint files.

Layout: an 8-byte magic, a little-endian uint64 header length, a JSON header
(sorted keys), then the parameter buffers concatenated in header order as
little-endian float64. Everything is byte-deterministic: the same model
always serializes to the same bytes, so checkpoints can be compared by hash.
The header embeds the model config, the run config that produced it, all
three vocabularies, and their hashes; loading verifies magic, version,
shapes, and hashes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .config import ModelConfig, RunConfig
from .corpus.vocab import LabelVocab, Vocabulary
from .generator import Model, ModelMode
from .numkit import Tensor
from .params import ModelParams

MAGIC = b"KB2TCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_model(model: Model, path, run_config: RunConfig | None = None) -> None:
    names = sorted(model.params.arrays)
    header = {
        "version": VERSION,
        "mode": model.mode.value,
        "model_config": {
            "emb_dim": model.config.emb_dim,
            "pos_emb_dim": model.config.pos_emb_dim,
            "hidden_dim": model.config.hidden_dim,
            "attn_dim": model.config.attn_dim,
            "pos_attn_dim": model.config.pos_attn_dim,
            "max_rows": model.config.max_rows,
            "coverage_weight": model.config.coverage_weight,
        },
        "run_config": run_config.as_dict() if run_config is not None else None,
        "vocab_tokens": model.vocab.tokens,
        "type_labels": model.type_vocab.labels,
        "value_labels": model.value_vocab.labels,
        "vocab_sha256": model.vocab.sha256(),
        "type_sha256": model.type_vocab.sha256(),
        "value_sha256": model.value_vocab.sha256(),
        "params": [
            {"name": n, "shape": list(model.params.arrays[n].shape)}
            for n in names
        ],
    }
    blob = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(model.params.arrays[n].data, dtype="<f8").tobytes())


def load_model(path, expected_vocab_sha256: str | None = None) -> tuple[Model, dict | None]:
    """Read a checkpoint back; returns (model, embedded run-config dict).

    Verifies the magic/version, parameter shapes against the config, and the
    stored vocabulary hashes. ``expected_vocab_sha256`` additionally pins the
    target vocabulary to an externally supplied hash.
    """
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
    n = int.from_bytes(raw[len(MAGIC):len(MAGIC) + 8], "little")
    header = json.loads(raw[len(MAGIC) + 8:len(MAGIC) + 8 + n].decode("utf-8"))
    if header.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('version')}")

    vocab = Vocabulary(header["vocab_tokens"])
    type_vocab = LabelVocab(header["type_labels"])
    value_vocab = LabelVocab(header["value_labels"])
    for got, want, label in (
        (vocab.sha256(), header["vocab_sha256"], "vocabulary"),
        (type_vocab.sha256(), header["type_sha256"], "slot-type labels"),
        (value_vocab.sha256(), header["value_sha256"], "slot-value labels"),
    ):
        if got != want:
            raise CheckpointError(f"{label} hash mismatch in {path}")
    if expected_vocab_sha256 is not None and vocab.sha256() != expected_vocab_sha256:
        raise CheckpointError(
            f"vocabulary hash mismatch: checkpoint has {vocab.sha256()[:12]}..., "
            f"expected {expected_vocab_sha256[:12]}..."
        )

    config = ModelConfig(**header["model_config"])
    arrays: dict[str, Tensor] = {}
    offset = len(MAGIC) + 8 + n
    for spec in header["params"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        buf = np.frombuffer(raw[offset:offset + nbytes], dtype="<f8").reshape(shape)
        arrays[spec["name"]] = Tensor(buf.astype(np.float64))
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"trailing bytes in {path}")

    params = ModelParams(config=config, arrays=arrays)
    model = Model(config=config, mode=ModelMode.parse(header["mode"]), params=params,
                  vocab=vocab, type_vocab=type_vocab, value_vocab=value_vocab)
    return model, header.get("run_config")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
