"""Dense layers and the adaptive-moment optimizer built on :mod:`eccanc.autodiff`."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import GradientError, ShapeError, Tensor, matmul

ACTIVATIONS = ("tanh", "sigmoid", "identity")


class DenseLayer:
    """Affine map followed by an elementwise activation.

    Weights are drawn uniformly from ``[-1/sqrt(in_dim), 1/sqrt(in_dim)]``;
    biases start at zero.
    """

    def __init__(self, in_dim: int, out_dim: int, activation: str = "tanh",
                 rng: np.random.Generator | None = None, weights=None, bias=None):
        if in_dim < 1 or out_dim < 1:
            raise ShapeError("layer dimensions must be positive")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}; expected one of {ACTIVATIONS}")
        self.activation = activation
        if weights is None:
            rng = rng if rng is not None else np.random.default_rng()
            limit = 1.0 / np.sqrt(in_dim)
            weights = rng.uniform(-limit, limit, size=(in_dim, out_dim))
        if bias is None:
            bias = np.zeros(out_dim)
        weights = np.array(weights, dtype=np.float64)
        bias = np.array(bias, dtype=np.float64)
        if weights.shape != (in_dim, out_dim) or bias.shape != (out_dim,):
            raise ShapeError("weight/bias arrays do not match the layer dimensions")
        self.weights = Tensor(weights, requires_grad=True)
        self.bias = Tensor(bias, requires_grad=True)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[1]

    def parameters(self) -> list[Tensor]:
        return [self.weights, self.bias]

    def __call__(self, x: Tensor) -> Tensor:
        return dense_forward(self, x)

    def __repr__(self):
        return f"DenseLayer({self.in_dim}, {self.out_dim}, {self.activation!r})"


def dense_forward(layer: DenseLayer, x: Tensor) -> Tensor:
    if not isinstance(x, Tensor):
        x = Tensor(x)
    if x.ndim != 2 or x.shape[1] != layer.in_dim:
        raise ShapeError(f"layer expects [N, {layer.in_dim}] input, got {list(x.shape)}")
    z = matmul(x, layer.weights) + layer.bias
    if layer.activation == "tanh":
        return z.tanh()
    if layer.activation == "sigmoid":
        return z.sigmoid()
    return z


@dataclass
class AdamState:
    lr: float = 0.0008
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params: list[Tensor], state: AdamState) -> AdamState:
    """Apply one bias-corrected Adam update in place, then clear gradients.

    Parameters whose ``grad`` is ``None`` are an error: the caller asked to
    step without having run a backward pass.
    """
    missing = [i for i, p in enumerate(params) if p.grad is None]
    if missing:
        raise GradientError(f"parameters {missing} have no gradient; run backward() first")
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    elif len(state.m) != len(params):
        raise ValueError("optimizer state does not match the parameter list")

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    step_size = state.lr / (1.0 - b1 ** state.t)
    bc2 = 1.0 - b2 ** state.t
    for p, m, v in zip(params, state.m, state.v):
        g = p.grad
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= step_size * m / (np.sqrt(v / bc2) + state.eps)
        p.grad = None
    return state
