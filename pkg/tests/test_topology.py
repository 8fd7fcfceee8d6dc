"""Network wiring and the complexity accounting goldens."""

import pytest

from qsattn.params import GROUP_U1, GROUP_U2, GROUP_U3
from qsattn.topology import (
    Sample,
    build_topology,
    complexity_report,
    init_param_store,
)

# Golden complexity table: (dataset, variant) -> (qubits, two-qubit gates,
# trainable parameters).
COMPLEXITY_GOLDENS = {
    ("iris", "basic"): (48, 88, 19),
    ("iris", "optimized"): (32, 72, 18),
    ("mc", "basic"): (96, 136, 22),
    ("mc", "optimized"): (64, 104, 20),
    ("rp", "basic"): (96, 136, 22),
    ("rp", "optimized"): (64, 104, 20),
}


@pytest.mark.parametrize("dataset,variant", sorted(COMPLEXITY_GOLDENS))
def test_complexity_goldens(dataset, variant):
    report = complexity_report(dataset, variant)
    qubits, gates, params = COMPLEXITY_GOLDENS[(dataset, variant)]
    assert report["qubits"] == qubits
    assert report["two_qubit_gates"] == gates
    assert report["trainable_params"] == params


def test_embedding_param_accounting():
    assert complexity_report("iris", "basic")["embedding_params"] == 0
    assert complexity_report("mc", "optimized")["embedding_params"] == 17 * 6
    assert complexity_report("rp", "optimized")["embedding_params"] == 115 * 12
    # RP encoders contribute one CNOT per word copy, outside the headline count
    assert complexity_report("rp", "basic")["encoder_two_qubit_gates"] == 16 * 3
    assert complexity_report("rp", "optimized")["encoder_two_qubit_gates"] == 16 * 2
    assert complexity_report("mc", "basic")["encoder_two_qubit_gates"] == 0


def test_unit_slots_by_variant():
    basic = build_topology("iris", "basic")
    opt = build_topology("iris", "optimized")
    # Units carry a one-step position offset: (i, j) -> positions (i+1, j+1).
    assert basic.unit_slots(2, 3) == [3, 0, 0]
    assert opt.unit_slots(2, 3) == [3, 0]
    assert opt.unit_slots(3, 0) == [0, 1]
    assert basic.copies_per_unit == 3 and opt.copies_per_unit == 2


def test_block_sizes():
    topo = build_topology("mc", "basic")
    assert topo.n1 == 2 and topo.unit_width == 6
    assert topo.u1_block.num_qubits == 6
    assert topo.u2_block.num_qubits == 8
    assert topo.u3_block.num_qubits == 8
    assert topo.u1_block.kept == (0, 1)
    assert topo.u2_block.kept == (0, 1)
    assert topo.u3_block.kept == tuple(range(8))
    assert topo.total_qubits == 96


def test_build_topology_validates_inputs():
    with pytest.raises(ValueError):
        build_topology("mnist", "basic")
    with pytest.raises(ValueError):
        build_topology("iris", "fancy")


def test_init_param_store_iris():
    topo = build_topology("iris", "basic")
    store = init_param_store(topo, seed=0)
    assert store.group_size(GROUP_U1) == 3
    assert store.group_size(GROUP_U2) == 8
    assert store.group_size(GROUP_U3) == 8
    assert store.embedding_param_count() == 0
    assert (store.dataset, store.variant, store.seed) == ("iris", "basic", 0)


def test_init_param_store_text_requires_vocabulary():
    topo = build_topology("mc", "optimized")
    with pytest.raises(ValueError):
        init_param_store(topo, seed=0)
    store = init_param_store(topo, seed=0, vocabulary=["woman", "<pad>"])
    assert store.embedding_param_count() == 6  # PAD carries no parameters


def test_init_param_store_is_seed_deterministic():
    topo = build_topology("iris", "optimized")
    a = init_param_store(topo, seed=3)
    b = init_param_store(topo, seed=3)
    c = init_param_store(topo, seed=4)
    assert a.values == b.values
    assert a.values != c.values


def test_sample_holds_positions_and_label():
    s = Sample(positions=[0.1, 0.2, 0.3, 0.4], label=1)
    assert len(s.positions) == 4 and s.label == 1
