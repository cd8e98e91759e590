"""Adam optimizer with bias correction, plus global gradient-norm clipping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, as_array


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the parameter shapes."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning rate must be nonnegative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.step < 0:
            raise ValueError("step counter must be nonnegative")


def init_adam(params: dict, learning_rate: float = 0.001, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    m = {k: np.zeros_like(as_array(p)) for k, p in params.items()}
    v = {k: np.zeros_like(as_array(p)) for k, p in params.items()}
    return AdamState(m=m, v=v, step=0, learning_rate=learning_rate,
                     beta1=beta1, beta2=beta2, epsilon=epsilon)


def adam_step(params: dict, grads: dict, state: AdamState) -> tuple[dict, AdamState]:
    """One bias-corrected Adam update. Returns fresh params and state.

    Parameter values are re-validated through Tensor, so a diverged update
    (NaN/Inf) raises instead of propagating silently.
    """
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    new_params: dict[str, Tensor] = {}
    new_m, new_v = {}, {}
    for name, p in params.items():
        pv = as_array(p)
        g = as_array(grads[name])
        if g.shape != pv.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {pv.shape} for {name!r}")
        m = b1 * state.m[name] + (1 - b1) * g
        v = b2 * state.v[name] + (1 - b2) * (g * g)
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        new_params[name] = Tensor(pv - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon))
        new_m[name] = m
        new_v[name] = v
    new_state = AdamState(m=new_m, v=new_v, step=t, learning_rate=state.learning_rate,
                          beta1=state.beta1, beta2=state.beta2, epsilon=state.epsilon)
    return new_params, new_state


def clip_gradients(grads: dict, max_norm: float) -> dict:
    """Scale all gradients by a common factor so the global L2 norm is at
    most max_norm."""
    total = 0.0
    for g in grads.values():
        gv = as_array(g)
        total += float(np.sum(gv * gv))
    norm = np.sqrt(total)
    if norm <= max_norm or norm == 0.0:
        return dict(grads)
    scale = max_norm / norm
    return {k: Tensor(as_array(g) * scale) for k, g in grads.items()}
