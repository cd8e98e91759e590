"""Central finite-difference validation of tape gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tape import Node, backward
from .tensor import as_array


class NondeterministicClosure(RuntimeError):
    """Raised when two evaluations of the checked closure disagree."""


@dataclass
class GradCheckReport:
    per_param: dict[str, float]  # max relative error per parameter
    eps: float

    @property
    def max_error(self) -> float:
        return max(self.per_param.values()) if self.per_param else 0.0

    def failing(self, tol: float) -> dict[str, float]:
        return {k: e for k, e in self.per_param.items() if e > tol}

    def ok(self, tol: float) -> bool:
        return not self.failing(tol)


def _rel_err(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-8)


def gradient_check(closure, params: dict, eps: float = 1e-5) -> GradCheckReport:
    """Compare tape gradients against central differences, elementwise.

    ``closure(params) -> scalar loss Node`` must be deterministic: any
    randomness has to be frozen outside. The check evaluates the closure
    twice up front and refuses to continue if the two losses differ bitwise.

    Central estimate: (f(p + eps e_i) - f(p - eps e_i)) / (2 eps), compared
    via |a - n| / max(|a|, |n|, 1e-8).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    base = {k: as_array(v).copy() for k, v in params.items()}

    loss_node = closure(base)
    if not isinstance(loss_node, Node):
        raise TypeError("closure must return a tape Node")
    repeat = closure(base)
    if np.asarray(loss_node.value).tobytes() != np.asarray(repeat.value).tobytes():
        raise NondeterministicClosure(
            f"closure is not deterministic: {loss_node.value!r} != {repeat.value!r}"
        )
    analytic = backward(loss_node.tape, loss_node)

    report: dict[str, float] = {}
    for name in base:
        theta = base[name]
        a_grad = as_array(analytic[name])
        worst = 0.0
        flat = theta.reshape(-1)
        a_flat = a_grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(closure(base).value)
            flat[i] = orig - eps
            f_minus = float(closure(base).value)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            worst = max(worst, _rel_err(float(a_flat[i]), numeric))
        report[name] = worst
    return GradCheckReport(per_param=report, eps=eps)
