"""Alternating adversarial training of the Alice/Bob pair against Eve.

Every iteration runs one joint Alice+Bob update (with Eve frozen) followed by
``evecycles`` Eve updates (with Alice frozen). Each cycle draws a fresh batch
of messages and a fresh keypair per message row.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .ecc import curve_by_name, sample_keypairs, sample_public_keys
from .ecc.curves import CURVE_NAMES
from .networks import (
    LossRecord,
    NetworkParams,
    abe_loss,
    alice_encrypt,
    bob_decrypt,
    bob_loss,
    build_networks,
    eve_intercept,
    eve_loss,
)
from .nn import adam_step


class ConfigError(ValueError):
    pass


@dataclass
class TrainingConfig:
    curve: str = "secp224r1"
    n_epochs: int = 20
    batch_size: int = 512
    m_bits: int = 16
    abecycles: int = 1
    evecycles: int = 1
    seed: int = 0
    lr: float = 0.0008
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    width_mult: int = 4
    hidden_layers: int = 2

    def validate(self) -> "TrainingConfig":
        if self.curve not in CURVE_NAMES:
            raise ConfigError(f"unknown curve {self.curve!r}; supported: {', '.join(CURVE_NAMES)}")
        for name in ("n_epochs", "batch_size", "m_bits", "abecycles", "evecycles",
                     "width_mult", "hidden_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if (1 << self.m_bits) % self.batch_size:
            raise ConfigError(
                f"message space 2^{self.m_bits} = {1 << self.m_bits} is not divisible by "
                f"batch size {self.batch_size}")
        if self.m_bits % 2:
            raise ConfigError("m_bits must be even")
        return self

    @property
    def iterations_per_epoch(self) -> int:
        return (1 << self.m_bits) // self.batch_size

    @property
    def total_iterations(self) -> int:
        return self.n_epochs * self.iterations_per_epoch

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainingTrace:
    config: TrainingConfig
    records: list = field(default_factory=list)
    alice: NetworkParams | None = None
    bob: NetworkParams | None = None
    eve: NetworkParams | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def sample_messages(n: int, m_bits: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=(n, m_bits)).astype(np.float64)


def train_abe_step(alice: NetworkParams, bob: NetworkParams, eve: NetworkParams,
                   cfg: TrainingConfig, rng: np.random.Generator) -> tuple[float, float]:
    """Joint Alice+Bob update(s) against a frozen Eve.

    Returns ``(abe_loss, bob_loss)`` measured by a fresh forward pass on the
    last cycle's batch after the update.
    """
    curve = curve_by_name(cfg.curve)
    alice.set_trainable(True)
    bob.set_trainable(True)
    eve.set_trainable(False)
    for _ in range(cfg.abecycles):
        msgs = sample_messages(cfg.batch_size, cfg.m_bits, rng)
        priv, pub = sample_keypairs(cfg.batch_size, curve, rng)
        cipher = alice_encrypt(alice, msgs, pub)
        l_bob = bob_loss(msgs, bob_decrypt(bob, cipher, priv))
        l_eve = eve_loss(msgs, eve_intercept(eve, cipher, pub))
        abe_loss(l_bob, l_eve, cfg.m_bits).backward()
        adam_step(alice.parameters(), alice.optimizer)
        adam_step(bob.parameters(), bob.optimizer)

    alice.set_trainable(False)
    bob.set_trainable(False)
    cipher = alice_encrypt(alice, msgs, pub)
    post_bob = bob_loss(msgs, bob_decrypt(bob, cipher, priv)).item()
    post_eve = eve_loss(msgs, eve_intercept(eve, cipher, pub)).item()
    return abe_loss(post_bob, post_eve, cfg.m_bits), post_bob


def train_eve_step(alice: NetworkParams, eve: NetworkParams, cfg: TrainingConfig,
                   rng: np.random.Generator) -> float:
    """``evecycles`` Eve updates through a frozen Alice; returns the last cycle's loss."""
    curve = curve_by_name(cfg.curve)
    alice.set_trainable(False)
    eve.set_trainable(True)
    loss = float("nan")
    for _ in range(cfg.evecycles):
        msgs = sample_messages(cfg.batch_size, cfg.m_bits, rng)
        pub = sample_public_keys(cfg.batch_size, curve, rng)
        cipher = alice_encrypt(alice, msgs, pub)
        l_eve = eve_loss(msgs, eve_intercept(eve, cipher, pub))
        loss = l_eve.item()
        l_eve.backward()
        adam_step(eve.parameters(), eve.optimizer)
    eve.set_trainable(False)
    return loss


def init_networks(cfg: TrainingConfig):
    alice, bob, eve = build_networks(curve_by_name(cfg.curve), cfg.m_bits, cfg.seed,
                                     cfg.width_mult, cfg.hidden_layers, cfg.lr)
    for net in (alice, bob, eve):
        net.optimizer.beta1 = cfg.beta1
        net.optimizer.beta2 = cfg.beta2
        net.optimizer.eps = cfg.eps
    return alice, bob, eve


def data_rng(seed: int) -> np.random.Generator:
    # distinct from the three weight-initialisation streams of build_networks
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(4)[3])


def run_training(cfg: TrainingConfig, progress=None) -> TrainingTrace:
    """Train all three networks for ``cfg.total_iterations`` alternating iterations."""
    cfg.validate()
    alice, bob, eve = init_networks(cfg)
    rng = data_rng(cfg.seed)
    trace = TrainingTrace(cfg, alice=alice, bob=bob, eve=eve)
    for it in range(cfg.total_iterations):
        l_abe, l_bob = train_abe_step(alice, bob, eve, cfg, rng)
        l_eve = train_eve_step(alice, eve, cfg, rng)
        trace.records.append(LossRecord(it, l_abe, l_bob, l_eve))
        if progress is not None:
            progress(trace.records[-1])
    return trace
