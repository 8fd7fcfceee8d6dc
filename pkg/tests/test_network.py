"""Staged forward pass vs the monolithic oracle, noise wiring, fast engine pin."""

import numpy as np
import pytest

from qsattn.channels import make_channel
from qsattn.fastsim import FastContext
from qsattn.network import (
    NOISE_FINAL,
    NOISE_PER_GATE,
    accuracy,
    classify,
    forward,
    forward_monolithic,
)
from qsattn.params import ParamStore
from qsattn.topology import Sample, build_topology, init_param_store


def randomize(store: ParamStore, rng) -> None:
    for pid in store.sorted_ids():
        hi = 0.1 if pid.is_embedding else 2 * np.pi
        lo = -0.1 if pid.is_embedding else 0.0
        store.set(pid, float(rng.uniform(lo, hi)))


def iris_sample(rng, n=4):
    return Sample(positions=list(rng.uniform(0, np.pi, size=n)), label=0)


def test_classify_threshold_and_ties():
    assert classify(0.4999) == 0
    assert classify(0.5) == 0  # tie -> class 0
    assert classify(0.5001) == 1
    with pytest.raises(ValueError):
        classify(1.2)


@pytest.mark.parametrize("variant", ["basic", "optimized"])
def test_staged_matches_monolithic_reduced(variant):
    # Reduced instance (N=2, n1=1) fits the monolithic qubit budget.
    topo = build_topology("iris", variant, n_positions=2)
    rng = np.random.default_rng(11)
    store = init_param_store(topo, seed=0)
    for _ in range(20):
        randomize(store, rng)
        sample = iris_sample(rng, n=2)
        staged = forward(topo, sample, store).expect_z
        mono = forward_monolithic(topo, sample, store)
        assert abs(staged - mono) < 1e-10


def test_monolithic_rejects_oversized_instance():
    topo = build_topology("iris", "basic")  # 48 qubits
    store = init_param_store(topo, seed=0)
    with pytest.raises(ValueError):
        forward_monolithic(topo, iris_sample(np.random.default_rng(0)), store)


def test_forward_all_zero_network_is_class_zero():
    # All angles 0 and all features 0: every block fixes |0..0>, so z = +1.
    topo = build_topology("iris", "optimized")
    store = init_param_store(topo, seed=0)
    for pid in store.sorted_ids():
        store.set(pid, 0.0)
    res = forward(topo, Sample([0.0] * 4, 0), store)
    assert np.isclose(res.expect_z, 1.0, atol=1e-12)
    assert res.p1 == pytest.approx(0.0, abs=1e-12)
    assert classify(res.p1) == 0


def test_forward_rejects_wrong_position_count():
    topo = build_topology("iris", "optimized")
    store = init_param_store(topo, seed=0)
    with pytest.raises(ValueError):
        forward(topo, Sample([0.1, 0.2], 0), store)
    with pytest.raises(ValueError):
        forward(topo, iris_sample(np.random.default_rng(0)), store,
                noise_placement="everywhere")


def test_final_noise_scales_z_in_closed_form():
    topo = build_topology("iris", "optimized")
    rng = np.random.default_rng(5)
    store = init_param_store(topo, seed=5)
    sample = iris_sample(rng)
    z0 = forward(topo, sample, store).expect_z
    p = 0.01
    z_bf = forward(topo, sample, store, make_channel("bitflip", p)).expect_z
    assert np.isclose(z_bf, (1 - 2 * p) * z0, atol=1e-12)
    z_dp = forward(topo, sample, store, make_channel("depolarizing", p)).expect_z
    assert np.isclose(z_dp, (1 - 4 * p / 3) * z0, atol=1e-12)
    gamma = 0.3
    z_ad = forward(topo, sample, store, make_channel("ampdamp", gamma)).expect_z
    assert np.isclose(z_ad, (1 - gamma) * z0 + gamma, atol=1e-12)


def test_per_gate_noise_contracts_more_than_final():
    # Zero network: z = +1 noiseless, so contraction factors read off directly.
    topo = build_topology("iris", "optimized")
    store = init_param_store(topo, seed=6)
    for pid in store.sorted_ids():
        store.set(pid, 0.0)
    sample = Sample([0.0] * 4, 0)
    p = 0.05
    chan = make_channel("bitflip", p)
    z_final = forward(topo, sample, store, chan, NOISE_FINAL).expect_z
    z_pg = forward(topo, sample, store, chan, NOISE_PER_GATE).expect_z
    assert np.isclose(z_final, 1 - 2 * p, atol=1e-12)
    # one channel insertion per U3 gate compounds the contraction
    assert z_pg < z_final - 1e-3
    # without a channel the placement flag is inert
    rng = np.random.default_rng(6)
    randomize(store, rng)
    rand_sample = iris_sample(rng)
    a = forward(topo, rand_sample, store, None, NOISE_FINAL).expect_z
    b = forward(topo, rand_sample, store, None, NOISE_PER_GATE).expect_z
    assert np.isclose(a, b, atol=1e-15)


@pytest.mark.parametrize("dataset,variant", [
    ("iris", "basic"), ("iris", "optimized"),
    ("mc", "optimized"), ("rp", "basic"),
])
def test_fast_engine_matches_reference_forward(dataset, variant):
    """The shipped fast engine is pinned to the readable density-matrix path."""
    topo = build_topology(dataset, variant)
    rng = np.random.default_rng(7)
    if dataset == "iris":
        vocab = None
        samples = [iris_sample(rng) for _ in range(3)]
    else:
        vocab = ["alice", "bob", "runs", "<pad>"]
        samples = [Sample(["alice", "runs", "bob", "<pad>"], 1),
                   Sample(["bob", "runs", "alice", "alice"], 0)]
    store = init_param_store(topo, seed=7, vocabulary=vocab)
    ctx = FastContext(topo, store)
    for s in samples:
        want = forward(topo, s, store).expect_z
        assert abs(ctx.forward_z(s) - want) < 1e-12
        assert abs(ctx.forward_p1(s) - (1 - want) / 2) < 1e-12


def test_accuracy_counts_and_predictions():
    topo = build_topology("iris", "optimized")
    store = init_param_store(topo, seed=0)
    for pid in store.sorted_ids():
        store.set(pid, 0.0)
    # zero network predicts class 0 for everything
    samples = [Sample([0.0] * 4, 0), Sample([0.1] * 4, 1), Sample([0.2] * 4, 0)]
    acc, preds = accuracy(topo, samples, store)
    assert preds == [0, 0, 0]
    assert acc == pytest.approx(2 / 3)
