"""Network wiring: attention-unit layout for both circuit variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import (
    MC_EMB_ANGLES,
    PAD_TOKEN,
    RP_EMB_ANGLES,
    BlockCircuit,
    build_ansatz_block,
    build_iris_encoder,
    build_word_encoder,
)
from .params import GROUP_U1, GROUP_U2, GROUP_U3, ParamStore, init_ansatz_params, \
    init_embedding_params

VARIANT_BASIC = "basic"
VARIANT_OPTIMIZED = "optimized"
VARIANTS = (VARIANT_BASIC, VARIANT_OPTIMIZED)

DATASETS = ("iris", "mc", "rp")

# Canonical corpus sizes, used by the complexity report.
MC_VOCAB_SIZE = 17
RP_VOCAB_SIZE = 115


@dataclass
class Sample:
    """One classified input: N positions (angles for iris, tokens for text)."""

    positions: list
    label: int


@dataclass
class Topology:
    """Full wiring: N^2 shared-parameter U1 units, N U2 rows, one U3 head.

    Unit (i, j) encodes one query position next to one key position (with
    a second key copy in the basic variant) following `unit_slots`, then
    applies the shared U1 block and keeps its first two qubits.  Row i tensors its N unit outputs
    leading with the diagonal unit (i, i), then the off-diagonal units in
    ascending j; it applies the shared U2 block and keeps two qubits, so
    each row's kept pair descends from its own position's self-attention
    unit.  The N row outputs feed U3; qubit 0 of U3 is measured.
    """

    dataset: str
    variant: str
    n_positions: int
    n1: int
    unit_width: int
    u1_block: BlockCircuit
    u2_block: BlockCircuit
    u3_block: BlockCircuit

    @property
    def copies_per_unit(self) -> int:
        return 3 if self.variant == VARIANT_BASIC else 2

    def unit_slots(self, i: int, j: int) -> list[int]:
        """Positions encoded in unit (i, j), in qubit order.

        Units are wired with a one-step position offset: unit (i, j)
        pairs the query at position i+1 with the key at position j+1
        (mod N).  The measured attention row therefore descends from
        position 1 rather than position 0.
        """
        a = (i + 1) % self.n_positions
        b = (j + 1) % self.n_positions
        return [a, b, b] if self.variant == VARIANT_BASIC else [a, b]

    def row_units(self, i: int) -> list[int]:
        """Unit j-indices of row i in register order: diagonal unit first."""
        return [i] + [j for j in range(self.n_positions) if j != i]

    @property
    def total_qubits(self) -> int:
        return self.n_positions**2 * self.unit_width

    def encoder_block(self, position_value, store: ParamStore) -> BlockCircuit:
        if self.dataset == "iris":
            return build_iris_encoder(position_value)
        return build_word_encoder(position_value, self.dataset, store)


def build_topology(dataset: str, variant: str, n_positions: int = 4) -> Topology:
    if dataset not in DATASETS:
        raise ValueError(f"unsupported dataset {dataset!r}")
    if variant not in VARIANTS:
        raise ValueError(f"unsupported variant {variant!r}")
    n1 = 1 if dataset == "iris" else 2
    copies = 3 if variant == VARIANT_BASIC else 2
    unit_width = copies * n1
    row_width = 2 * n_positions  # two kept qubits per unit, N units per row
    return Topology(
        dataset=dataset,
        variant=variant,
        n_positions=n_positions,
        n1=n1,
        unit_width=unit_width,
        u1_block=build_ansatz_block(unit_width, GROUP_U1),
        u2_block=build_ansatz_block(row_width, GROUP_U2),
        u3_block=build_ansatz_block(row_width, GROUP_U3),
    )


def init_param_store(topology: Topology, seed: int,
                     vocabulary: list[str] | None = None) -> ParamStore:
    """Fresh parameter store: ansatz angles plus embeddings for text datasets."""
    rng = np.random.default_rng(seed)
    store = ParamStore(dataset=topology.dataset, variant=topology.variant, seed=seed)
    init_ansatz_params(store, GROUP_U1, topology.unit_width, rng)
    init_ansatz_params(store, GROUP_U2, 2 * topology.n_positions, rng)
    init_ansatz_params(store, GROUP_U3, 2 * topology.n_positions, rng)
    if topology.dataset != "iris":
        if vocabulary is None:
            raise ValueError(f"{topology.dataset} needs a vocabulary")
        per_token = MC_EMB_ANGLES if topology.dataset == "mc" else RP_EMB_ANGLES
        for token in vocabulary:
            if token != PAD_TOKEN:
                init_embedding_params(store, token, per_token, rng)
    return store


def complexity_report(dataset: str, variant: str) -> dict[str, int]:
    """Qubit, two-qubit-gate and parameter counts for the full N=4 network.

    The headline two-qubit count covers ansatz blocks only; encoder CNOTs
    (present in RP word encoders) are reported separately.
    """
    topo = build_topology(dataset, variant)
    n = topo.n_positions
    g1 = topo.u1_block.two_qubit_gate_count()
    g23 = topo.u2_block.two_qubit_gate_count()
    trainable = (
        len(topo.u1_block.param_ids())
        + len(topo.u2_block.param_ids())
        + len(topo.u3_block.param_ids())
    )
    if dataset == "iris":
        embedding_params = 0
        encoder_cnots = 0
    else:
        vocab = MC_VOCAB_SIZE if dataset == "mc" else RP_VOCAB_SIZE
        per_token = MC_EMB_ANGLES if dataset == "mc" else RP_EMB_ANGLES
        embedding_params = vocab * per_token
        per_encoder = 1 if dataset == "rp" else 0
        encoder_cnots = per_encoder * n**2 * topo.copies_per_unit
    return {
        "qubits": topo.total_qubits,
        "two_qubit_gates": n**2 * g1 + (n + 1) * g23,
        "trainable_params": trainable,
        "embedding_params": embedding_params,
        "encoder_two_qubit_gates": encoder_cnots,
    }
