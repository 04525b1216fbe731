"""Alice, Bob and Eve networks, their losses, and the bit-accuracy metric.

Each network is a multilayer perceptron over the concatenation of a 16-bit
block (plaintext or ciphertext) and a key vector:

* Alice: ``[message | public key]``  -> ciphertext in [-1, 1] (tanh)
* Bob:   ``[ciphertext | private key]`` -> bit estimates in [0, 1] (sigmoid)
* Eve:   ``[ciphertext | public key]``  -> bit estimates in [0, 1] (sigmoid)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import ShapeError, Tensor, concat, l1_batch_loss
from .ecc.curves import CurveParams
from .nn import AdamState, DenseLayer

ROLES = ("alice", "bob", "eve")


@dataclass
class LossRecord:
    iteration: int
    abe_loss: float
    bob_loss: float
    eve_loss: float


@dataclass
class NetworkParams:
    role: str
    layers: list
    inputs: list  # [(name, width), ...] in concatenation order
    optimizer: AdamState = field(default_factory=AdamState)
    trainable: bool = True

    @property
    def input_dim(self) -> int:
        return sum(width for _, width in self.inputs)

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]

    def set_trainable(self, flag: bool):
        self.trainable = flag
        for p in self.parameters():
            p.requires_grad = flag
            if not flag:
                p.grad = None

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x

    def fingerprint(self) -> bytes:
        """Raw bytes of every weight, for exact before/after comparisons."""
        return b"".join(p.data.tobytes() for p in self.parameters())

    def to_dict(self) -> dict:
        return {
            "role": self.role,
            "inputs": [[name, width] for name, width in self.inputs],
            "layers": [
                {"activation": layer.activation,
                 "weights": layer.weights.data.tolist(),
                 "bias": layer.bias.data.tolist()}
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkParams":
        layers = []
        for spec in d["layers"]:
            w = np.asarray(spec["weights"], dtype=np.float64)
            layers.append(DenseLayer(w.shape[0], w.shape[1], spec["activation"],
                                     weights=w, bias=spec["bias"]))
        return cls(role=d["role"], layers=layers,
                   inputs=[(name, int(width)) for name, width in d["inputs"]])


def _mlp(in_dim: int, out_dim: int, out_activation: str, width_mult: int, hidden_layers: int,
         rng: np.random.Generator) -> list:
    width = width_mult * in_dim
    dims = [in_dim] + [width] * hidden_layers
    layers = [DenseLayer(dims[i], dims[i + 1], "tanh", rng=rng) for i in range(hidden_layers)]
    layers.append(DenseLayer(dims[-1], out_dim, out_activation, rng=rng))
    return layers


def build_networks(curve: CurveParams, m_bits: int = 16, seed: int = 0, width_mult: int = 4,
                   hidden_layers: int = 2, lr: float = 0.0008):
    """Fresh Alice, Bob and Eve for ``curve``; identical seeds give identical weights."""
    c_bits = m_bits
    pub, priv = curve.public_len, curve.private_len
    layouts = {
        "alice": ([("message", m_bits), ("public_key", pub)], c_bits, "tanh"),
        "bob": ([("ciphertext", c_bits), ("private_key", priv)], m_bits, "sigmoid"),
        "eve": ([("ciphertext", c_bits), ("public_key", pub)], m_bits, "sigmoid"),
    }
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]
    nets = []
    for role, rng in zip(ROLES, rngs):
        inputs, out_dim, act = layouts[role]
        in_dim = sum(w for _, w in inputs)
        layers = _mlp(in_dim, out_dim, act, width_mult, hidden_layers, rng)
        nets.append(NetworkParams(role, layers, inputs, AdamState(lr=lr)))
    return tuple(nets)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _run(net: NetworkParams, block, key) -> Tensor:
    block, key = _as_tensor(block), _as_tensor(key)
    if block.ndim != 2 or key.ndim != 2:
        raise ShapeError("expected [N, width] inputs")
    if block.shape[0] != key.shape[0]:
        raise ShapeError(f"batch size mismatch: {block.shape[0]} rows vs {key.shape[0]} keys")
    (_, block_w), (_, key_w) = net.inputs
    if block.shape[1] != block_w or key.shape[1] != key_w:
        raise ShapeError(
            f"{net.role} expects widths ({block_w}, {key_w}), got ({block.shape[1]}, {key.shape[1]})")
    return net.forward(concat([block, key], axis=1))


def alice_encrypt(alice: NetworkParams, messages, pub_keys) -> Tensor:
    return _run(alice, messages, pub_keys)


def bob_decrypt(bob: NetworkParams, ciphertext, priv_keys) -> Tensor:
    return _run(bob, ciphertext, priv_keys)


def eve_intercept(eve: NetworkParams, ciphertext, pub_keys) -> Tensor:
    return _run(eve, ciphertext, pub_keys)


def bob_loss(plaintext, bob_out: Tensor) -> Tensor:
    return l1_batch_loss(_as_tensor(bob_out), plaintext)


def eve_loss(plaintext, eve_out: Tensor) -> Tensor:
    return l1_batch_loss(_as_tensor(eve_out), plaintext)


def abe_loss(l_bob, l_eve, m_bits: int = 16):
    """Bob's loss plus a penalty that vanishes when Eve sits at chance (loss m_bits/2).

    Accepts floats or tensors; with tensors the result is differentiable.
    """
    half = m_bits / 2
    return l_bob + (half - l_eve) ** 2 * (1.0 / (half * half))


def decryption_accuracy(plaintext, outputs) -> float:
    """Percentage of bits recovered after thresholding at 0.5 (ties count as 1)."""
    p = np.asarray(plaintext.data if isinstance(plaintext, Tensor) else plaintext)
    o = np.asarray(outputs.data if isinstance(outputs, Tensor) else outputs)
    if p.shape != o.shape:
        raise ShapeError(f"plaintext {p.shape} vs output {o.shape}")
    bits = (o >= 0.5).astype(p.dtype)
    return 100.0 * float(np.count_nonzero(bits == p)) / p.size
