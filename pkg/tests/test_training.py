import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eccanc import training
from eccanc.autodiff import tensor
from eccanc.ecc import (
    curve_by_name,
    decode_private_key,
    decode_public_key,
    sample_keypairs,
    scalar_mult,
)
from eccanc.ecc.keys import sample_scalar_bytes
from eccanc.networks import (
    abe_loss,
    alice_encrypt,
    bob_decrypt,
    bob_loss,
    eve_intercept,
    eve_loss,
)
from eccanc.training import (
    ConfigError,
    TrainingConfig,
    data_rng,
    init_networks,
    run_training,
    sample_messages,
    train_abe_step,
    train_eve_step,
)

P224 = curve_by_name("secp224r1")
SMALL = dict(m_bits=8, batch_size=64, n_epochs=3)


class TestConfig:
    def test_defaults(self):
        cfg = TrainingConfig().validate()
        assert cfg.iterations_per_epoch == 128
        assert cfg.total_iterations == 2560

    def test_non_dividing_batch(self):
        with pytest.raises(ConfigError, match="not divisible"):
            TrainingConfig(batch_size=500).validate()

    @pytest.mark.parametrize("field", ["abecycles", "evecycles", "n_epochs"])
    def test_positive(self, field):
        with pytest.raises(ConfigError):
            TrainingConfig(**{field: 0}).validate()

    def test_unknown_curve(self):
        with pytest.raises(ConfigError, match="secp256k1"):
            TrainingConfig(curve="secp192r1").validate()


class TestSampling:
    def test_message_shape_and_determinism(self):
        a = sample_messages(512, 16, np.random.default_rng(1))
        b = sample_messages(512, 16, np.random.default_rng(1))
        assert a.shape == (512, 16)
        np.testing.assert_array_equal(a, b)
        assert set(np.unique(a)) <= {0.0, 1.0}

    def test_message_bits_balanced(self):
        rng = np.random.default_rng(2)
        means = [sample_messages(512, 16, rng).mean() for _ in range(10)]
        assert 0.48 <= np.mean(means) <= 0.52

    def test_keypairs_at_training_batch_size(self):
        priv, pub = sample_keypairs(512, P224, np.random.default_rng(3))
        assert priv.shape == (512, 28) and pub.shape == (512, 29)
        assert priv.min() >= 0 and priv.max() <= 1 and pub.min() >= 0 and pub.max() <= 1
        scalars = [decode_private_key(row, P224) for row in priv]
        assert len(set(scalars)) == 512
        for d, row in zip(scalars[:64], pub[:64]):
            assert decode_public_key(row, P224) == scalar_mult(d, P224.G, P224)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(["secp224r1", "secp521r1"]))
    def test_scalar_rows_in_range(self, seed, name):
        c = curve_by_name(name)
        rows = sample_scalar_bytes(50, c, np.random.default_rng(seed))
        for row in rows:
            d = int.from_bytes(bytes(row), "big")
            assert 1 <= d < c.n

    def test_scalar_rows_cover_top_byte(self):
        # secp521r1's order has 521 bits, so the leading byte is 0 or 1
        c = curve_by_name("secp521r1")
        rows = sample_scalar_bytes(2000, c, np.random.default_rng(4))
        assert set(np.unique(rows[:, 0])) == {0, 1}


@pytest.fixture
def trio():
    cfg = TrainingConfig(curve="secp224r1", batch_size=128, seed=5)
    return cfg, init_networks(cfg)


class TestSteps:
    def test_abe_step_freezes_eve(self, trio):
        cfg, (alice, bob, eve) = trio
        before = [n.fingerprint() for n in (alice, bob, eve)]
        train_abe_step(alice, bob, eve, cfg, np.random.default_rng(6))
        after = [n.fingerprint() for n in (alice, bob, eve)]
        assert after[2] == before[2]
        assert after[0] != before[0] and after[1] != before[1]
        assert eve.optimizer.t == 0

    def test_eve_step_freezes_alice(self, trio):
        cfg, (alice, bob, eve) = trio
        before = [n.fingerprint() for n in (alice, bob, eve)]
        train_eve_step(alice, eve, cfg, np.random.default_rng(7))
        after = [n.fingerprint() for n in (alice, bob, eve)]
        assert after[0] == before[0] and after[1] == before[1]
        assert after[2] != before[2]
        assert alice.optimizer.t == 0

    @pytest.mark.parametrize("evecycles", [1, 2])
    def test_eve_update_count(self, evecycles):
        cfg = TrainingConfig(batch_size=128, evecycles=evecycles)
        alice, _, eve = init_networks(cfg)
        t0 = eve.optimizer.t
        train_eve_step(alice, eve, cfg, np.random.default_rng(8))
        assert eve.optimizer.t - t0 == evecycles

    def test_abe_update_count(self):
        cfg = TrainingConfig(batch_size=128, abecycles=3)
        alice, bob, eve = init_networks(cfg)
        train_abe_step(alice, bob, eve, cfg, np.random.default_rng(9))
        assert alice.optimizer.t == bob.optimizer.t == 3

    def test_recorded_abe_not_below_bob(self, trio):
        cfg, (alice, bob, eve) = trio
        rng = np.random.default_rng(10)
        for _ in range(5):
            l_abe, l_bob = train_abe_step(alice, bob, eve, cfg, rng)
            assert l_abe >= l_bob
        assert abe_loss(l_bob, 8.0, 16) == l_bob

    def test_untrained_eve_starts_at_chance(self, trio):
        cfg, (alice, _, eve) = trio
        assert abs(train_eve_step(alice, eve, cfg, np.random.default_rng(11)) - 8.0) <= 0.5

    def test_frozen_networks_get_no_gradient(self, trio):
        cfg, (alice, bob, eve) = trio
        train_abe_step(alice, bob, eve, cfg, np.random.default_rng(12))
        assert all(p.grad is None for p in eve.parameters())
        train_eve_step(alice, eve, cfg, np.random.default_rng(13))
        assert all(p.grad is None for p in alice.parameters())


def test_strict_alternation(monkeypatch):
    calls = []
    real = training.adam_step

    def spy(params, state):
        calls.append(id(state))
        real(params, state)

    monkeypatch.setattr(training, "adam_step", spy)
    cfg = TrainingConfig(evecycles=2, abecycles=1, **SMALL)
    trace = run_training(cfg)
    roles = {id(n.optimizer): n.role for n in (trace.alice, trace.bob, trace.eve)}
    seq = [roles[c] for c in calls]
    per_iter = ["alice", "bob", "eve", "eve"]
    assert seq == per_iter * cfg.total_iterations


def test_freezing_discipline_over_a_run(monkeypatch):
    """Each network's weights change only inside its own training step."""
    log = []
    real_abe, real_eve = training.train_abe_step, training.train_eve_step

    def fp(nets):
        return [n.fingerprint() for n in nets]

    def abe(alice, bob, eve, cfg, rng):
        before = fp((alice, bob, eve))
        out = real_abe(alice, bob, eve, cfg, rng)
        log.append(("abe", before, fp((alice, bob, eve))))
        return out

    def eve_step(alice, eve, cfg, rng):
        before = fp((alice, eve))
        out = real_eve(alice, eve, cfg, rng)
        log.append(("eve", before, fp((alice, eve))))
        return out

    monkeypatch.setattr(training, "train_abe_step", abe)
    monkeypatch.setattr(training, "train_eve_step", eve_step)
    run_training(TrainingConfig(**SMALL))
    for kind, before, after in log:
        if kind == "abe":
            assert before[2] == after[2]
        else:
            assert before[0] == after[0]
    # consecutive steps see each other's results untouched
    for (k1, _, a1), (k2, b2, _) in zip(log, log[1:]):
        if k1 == "abe":
            assert a1[0] == b2[0] and a1[2] == b2[1]
        else:
            assert a1 == [b2[0], b2[2]]


@pytest.fixture(scope="module")
def trace():
    return run_training(TrainingConfig(evecycles=2, seed=3, **SMALL))


class TestRun:
    def test_length(self, trace):
        assert len(trace.records) == 3 * 4
        assert [r.iteration for r in trace.records] == list(range(12))

    def test_deterministic(self, trace):
        again = run_training(TrainingConfig(evecycles=2, seed=3, **SMALL))
        assert again.records == trace.records
        for a, b in zip((trace.alice, trace.bob, trace.eve), (again.alice, again.bob, again.eve)):
            assert a.fingerprint() == b.fingerprint()

    def test_seed_matters(self, trace):
        other = run_training(TrainingConfig(evecycles=2, seed=4, **SMALL))
        assert other.records != trace.records

    def test_loss_bounds(self, trace):
        m = trace.config.m_bits
        for r in trace.records:
            assert 0 <= r.bob_loss <= m and 0 <= r.eve_loss <= m
            assert 0 <= r.abe_loss <= m + 1
            assert r.abe_loss >= r.bob_loss

    def test_progress_callback(self):
        seen = []
        run_training(TrainingConfig(**SMALL), progress=seen.append)
        assert len(seen) == 12

    def test_data_stream_differs_from_init_streams(self):
        a = data_rng(0).integers(0, 2**31, 8)
        b = np.random.default_rng(np.random.SeedSequence(0).spawn(3)[0]).integers(0, 2**31, 8)
        assert not np.array_equal(a, b)


def _composite_loss(alice, bob, eve, msgs, priv, pub, m_bits):
    cipher = alice_encrypt(alice, msgs, pub)
    return abe_loss(bob_loss(msgs, bob_decrypt(bob, cipher, priv)),
                    eve_loss(msgs, eve_intercept(eve, cipher, pub)), m_bits)


@pytest.mark.parametrize("name", ["secp224r1", "secp256k1"])
def test_abe_composite_gradient_matches_finite_differences(name):
    """Analytic gradient of the full Alice -> (Bob, frozen Eve) loss vs central differences."""
    c = curve_by_name(name)
    cfg = TrainingConfig(curve=name, seed=17)
    alice, bob, eve = init_networks(cfg)
    rng = np.random.default_rng(18)
    msgs = sample_messages(32, 16, rng)
    priv, pub = sample_keypairs(32, c, rng)
    eve.set_trainable(False)
    alice.set_trainable(True)
    bob.set_trainable(True)
    _composite_loss(alice, bob, eve, msgs, priv, pub, 16).backward()

    params = alice.parameters() + bob.parameters()
    picks = []
    for _ in range(120):
        p = params[rng.integers(len(params))]
        picks.append((p, tuple(rng.integers(s) for s in p.shape)))
    h = 1e-6
    for p, idx in picks:
        orig = p.data[idx]
        p.data[idx] = orig + h
        up = _composite_loss(alice, bob, eve, msgs, priv, pub, 16).item()
        p.data[idx] = orig - h
        down = _composite_loss(alice, bob, eve, msgs, priv, pub, 16).item()
        p.data[idx] = orig
        numeric = (up - down) / (2 * h)
        analytic = p.grad[idx]
        assert abs(analytic - numeric) <= 1e-4 * max(abs(analytic), abs(numeric)) + 1e-6


def test_eve_gradient_reaches_through_frozen_alice():
    cfg = TrainingConfig(seed=19)
    alice, _, eve = init_networks(cfg)
    alice.set_trainable(False)
    rng = np.random.default_rng(20)
    msgs = sample_messages(16, 16, rng)
    _, pub = sample_keypairs(16, P224, rng)
    pub_t = tensor(pub, requires_grad=True)
    cipher = alice_encrypt(alice, msgs, pub_t)
    eve_loss(msgs, eve_intercept(eve, cipher, pub_t)).backward()
    assert pub_t.grad is not None and np.any(pub_t.grad != 0)
    assert all(p.grad is None for p in alice.parameters())
    assert all(p.grad is not None for p in eve.parameters())


def test_abe_loss_decreases_early():
    """Least-squares slope of the first 200 recorded ABE losses is negative at defaults."""
    cfg = TrainingConfig(curve="secp224r1", seed=21, n_epochs=2)
    alice, bob, eve = init_networks(cfg)
    rng = data_rng(cfg.seed)
    losses = []
    for _ in range(200):
        losses.append(train_abe_step(alice, bob, eve, cfg, rng)[0])
        train_eve_step(alice, eve, cfg, rng)
    slope = np.polyfit(np.arange(200), losses, 1)[0]
    assert slope < 0
