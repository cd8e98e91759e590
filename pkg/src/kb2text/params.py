"""Model parameters: flat named arrays plus structured views.

Everything learnable lives in one ordered ``name -> Tensor`` dict so the
optimizer, checkpointing, and gradient checking can treat parameters
uniformly; ``bind_view`` regroups the same storage into the shapes the
forward pass wants (GRU cells, attention projections, gate vectors). Views
bind either raw arrays (inference) or tape nodes (training).
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .attention import PositionAttentionParams, SlotAttentionParams
from .config import ModelConfig
from .encoder import EmbeddingTables
from .numkit import Tensor
from .numkit.funcs import GRUCellParams

INIT_SCALE = 0.08  # uniform [-0.08, 0.08] init for every table and weight

_GRU_FIELDS = ("w_update", "u_update", "b_update", "w_reset", "u_reset", "b_reset",
               "w_cand", "u_cand", "b_cand")


def _gru_shapes(in_dim: int, hid: int) -> dict[str, tuple]:
    shapes = {}
    for f in _GRU_FIELDS:
        if f.startswith("w_"):
            shapes[f] = (hid, in_dim)
        elif f.startswith("u_"):
            shapes[f] = (hid, hid)
        else:
            shapes[f] = (hid,)
    return shapes


def param_shapes(config: ModelConfig, n_types: int, n_values: int, n_vocab: int) -> dict[str, tuple]:
    e, p = config.emb_dim, config.pos_emb_dim
    h, a, w = config.hidden_dim, config.attn_dim, config.pos_attn_dim
    half = h // 2
    shapes: dict[str, tuple] = {
        "emb.type": (n_types, e),
        "emb.value": (n_values, e),
        "emb.pos_fwd": (config.max_rows, p),
        "emb.pos_back": (config.max_rows, p),
        "emb.target": (n_vocab, e),
    }
    for prefix, in_dim, hid in (("enc_fwd", config.triple_width, half),
                                ("enc_bwd", config.triple_width, half),
                                ("dec", e, h)):
        for f, shape in _gru_shapes(in_dim, hid).items():
            shapes[f"{prefix}.{f}"] = shape
    shapes.update({
        "attn.proj_state": (h, a),
        "attn.proj_type": (e, a),
        "attn.proj_value": (e, a),
        "attn.proj_cov": (a,),
        "attn.bias": (a,),
        "attn.score": (a,),
        "posattn.proj_in": (2 * p, w),
        "posattn.proj_out": (2 * p, w),
        "posattn.bilinear": (w, w),
        "out.proj": (h + 2 * e, n_vocab),
        "out.bias": (n_vocab,),
        "gate.w_type": (e,),
        "gate.w_value": (e,),
        "gate.w_state": (h,),
        "gate.w_prev": (e,),
        "gate.bias": (),
    })
    return shapes


@dataclass
class ModelParams:
    """All learnable arrays, keyed by dotted group names."""

    config: ModelConfig
    arrays: dict[str, Tensor]

    def __post_init__(self):
        expected = set(param_shapes(self.config, *self.table_sizes()))
        if set(self.arrays) != expected:
            missing = expected - set(self.arrays)
            extra = set(self.arrays) - expected
            raise ValueError(f"parameter set mismatch: missing={sorted(missing)}, extra={sorted(extra)}")

    def table_sizes(self) -> tuple[int, int, int]:
        return (
            self.arrays["emb.type"].shape[0],
            self.arrays["emb.value"].shape[0],
            self.arrays["emb.target"].shape[0],
        )

    def raw(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.arrays.items()}

    def view(self) -> SimpleNamespace:
        return bind_view(self.raw())

    def replace_arrays(self, arrays: dict[str, Tensor]) -> "ModelParams":
        return ModelParams(config=self.config, arrays=dict(arrays))


def init_params(config: ModelConfig, n_types: int, n_values: int, n_vocab: int,
                rng: np.random.Generator) -> ModelParams:
    shapes = param_shapes(config, n_types, n_values, n_vocab)
    arrays = {
        name: Tensor(rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape))
        for name, shape in shapes.items()
    }
    return ModelParams(config=config, arrays=arrays)


def bind_view(values: dict) -> SimpleNamespace:
    """Group flat (possibly node-valued) storage into structured access."""
    def gru(prefix: str) -> GRUCellParams:
        return GRUCellParams(**{f: values[f"{prefix}.{f}"] for f in _GRU_FIELDS})

    return SimpleNamespace(
        tables=EmbeddingTables(
            type_table=values["emb.type"],
            value_table=values["emb.value"],
            pos_fwd_table=values["emb.pos_fwd"],
            pos_back_table=values["emb.pos_back"],
        ),
        target_table=values["emb.target"],
        enc_fwd=gru("enc_fwd"),
        enc_bwd=gru("enc_bwd"),
        dec=gru("dec"),
        attn=SlotAttentionParams(
            proj_state=values["attn.proj_state"],
            proj_type=values["attn.proj_type"],
            proj_value=values["attn.proj_value"],
            proj_cov=values["attn.proj_cov"],
            bias=values["attn.bias"],
            score=values["attn.score"],
        ),
        posattn=PositionAttentionParams(
            proj_in=values["posattn.proj_in"],
            proj_out=values["posattn.proj_out"],
            bilinear=values["posattn.bilinear"],
        ),
        out_proj=values["out.proj"],
        out_bias=values["out.bias"],
        gate=SimpleNamespace(
            w_type=values["gate.w_type"],
            w_value=values["gate.w_value"],
            w_state=values["gate.w_state"],
            w_prev=values["gate.w_prev"],
            bias=values["gate.bias"],
        ),
    )
