"""Parameterized circuit blocks: gate ops, encoder and ansatz builders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import GROUP_U1, GROUP_U2, ParamId, ParamStore, embedding_id
from .states import (
    CNOT,
    MixedState,
    PureState,
    apply_to_density,
    apply_to_vector,
    partial_trace,
    rx,
    ry,
    rz,
)

ROTATIONS = {"rx": rx, "ry": ry, "rz": rz}

PAD_TOKEN = "<pad>"
MC_EMB_ANGLES = 6
RP_EMB_ANGLES = 12


@dataclass(frozen=True)
class GateOp:
    """One gate in a block: a (possibly parameterized) rotation or a CNOT."""

    kind: str  # "rx" | "ry" | "rz" | "cnot"
    targets: tuple[int, ...]
    param: ParamId | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.kind == "cnot":
            if len(self.targets) != 2 or self.targets[0] == self.targets[1]:
                raise ValueError(f"cnot needs two distinct targets, got {self.targets}")
            if self.param is not None or self.angle is not None:
                raise ValueError("cnot takes no angle")
        elif self.kind in ROTATIONS:
            if len(self.targets) != 1:
                raise ValueError(f"rotation takes one target, got {self.targets}")
            if (self.param is None) == (self.angle is None):
                raise ValueError("rotation needs exactly one of param or fixed angle")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    def resolve(self, store: ParamStore) -> np.ndarray:
        if self.kind == "cnot":
            return CNOT
        angle = self.angle if self.param is None else store.get(self.param)
        return ROTATIONS[self.kind](angle)


@dataclass(frozen=True)
class BlockCircuit:
    """Gate sequence on a local register, with declared kept qubits."""

    num_qubits: int
    ops: tuple[GateOp, ...]
    kept: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.kept)) != len(self.kept):
            raise ValueError("kept qubits must be distinct")
        for q in self.kept:
            if not 0 <= q < self.num_qubits:
                raise ValueError(f"kept qubit {q} out of range")

    def param_ids(self) -> list[ParamId]:
        return [op.param for op in self.ops if op.param is not None]

    def two_qubit_gate_count(self) -> int:
        return sum(1 for op in self.ops if op.kind == "cnot")


def build_ansatz_block(n: int, group: str) -> BlockCircuit:
    """One Rx layer then a CNOT ring: n trainable angles, n two-qubit gates.

    Ring entanglers point toward lower qubit indices (CNOT with control
    k+1 and target k, wrapping at the edge), so information funnels into
    the exposed qubits: U1/U2 blocks expose their first two qubits to the
    next stage, and U3 keeps the full register with qubit 0 measured.
    On 3-qubit blocks the wrap gate leads the ring, which keeps the
    exposed pair coherent for longer before the third qubit is discarded.
    """
    if n < 2:
        raise ValueError(f"ansatz block needs at least 2 qubits, got {n}")
    ops = [GateOp("rx", (k,), param=ParamId(group, k)) for k in range(n)]
    ring = [n - 1, *range(n - 1)] if n == 3 else range(n)
    ops += [GateOp("cnot", ((k + 1) % n, k)) for k in ring]
    kept = (0, 1) if group in (GROUP_U1, GROUP_U2) else tuple(range(n))
    return BlockCircuit(n, tuple(ops), kept)


def build_iris_encoder(feature: float) -> BlockCircuit:
    """Single fixed-angle Rx on one qubit; feature must already be in [0, pi]."""
    feature = float(feature)
    if not 0.0 <= feature <= np.pi:
        raise ValueError(
            f"encoder angle {feature} outside [0, pi]; scale features first"
        )
    return BlockCircuit(1, (GateOp("rx", (0,), angle=feature),), (0,))


def _rotation_layer(token: str, first_index: int) -> list[GateOp]:
    ops = []
    for q in (0, 1):
        for axis_pos, axis in enumerate(("rx", "ry", "rz")):
            idx = first_index + 3 * q + axis_pos
            ops.append(GateOp(axis, (q,), param=embedding_id(token, idx)))
    return ops


def build_word_encoder(token: str, dataset: str, store: ParamStore) -> BlockCircuit:
    """Two-qubit word encoder: 6 embedding angles for MC, 12 for RP.

    The PAD token encodes as the identity circuit and carries no parameters.
    """
    if dataset not in ("mc", "rp"):
        raise ValueError(f"word encoders exist for mc/rp only, got {dataset!r}")
    if token == PAD_TOKEN:
        return BlockCircuit(2, (), (0, 1))
    count = MC_EMB_ANGLES if dataset == "mc" else RP_EMB_ANGLES
    if embedding_id(token, 0) not in store:
        raise KeyError(f"token {token!r} not in vocabulary")
    ops = _rotation_layer(token, 0)
    if dataset == "rp":
        ops.append(GateOp("cnot", (0, 1)))
        ops += _rotation_layer(token, 6)
    assert len([op for op in ops if op.param is not None]) == count
    return BlockCircuit(2, tuple(ops), (0, 1))


def evolve_pure(block: BlockCircuit, amps: np.ndarray, store: ParamStore) -> np.ndarray:
    for op in block.ops:
        amps = apply_to_vector(amps, op.resolve(store), op.targets, block.num_qubits)
    return amps


def evolve_density(block: BlockCircuit, rho: np.ndarray, store: ParamStore) -> np.ndarray:
    for op in block.ops:
        rho = apply_to_density(rho, op.resolve(store), op.targets, block.num_qubits)
    return rho


def run_block(block: BlockCircuit, state: PureState | MixedState,
              store: ParamStore) -> MixedState:
    """Apply the block's gates, then reduce to its kept qubits."""
    if state.num_qubits != block.num_qubits:
        raise ValueError(
            f"block has {block.num_qubits} qubits, input has {state.num_qubits}"
        )
    if isinstance(state, PureState):
        evolved: PureState | MixedState = PureState(
            block.num_qubits, evolve_pure(block, state.amplitudes, store)
        )
    else:
        evolved = MixedState(block.num_qubits, evolve_density(block, state.rho, store))
    return partial_trace(evolved, block.kept)


def block_unitary(block: BlockCircuit, store: ParamStore) -> np.ndarray:
    """Dense unitary of the whole block (small registers only)."""
    u = np.eye(2**block.num_qubits, dtype=complex)
    for op in block.ops:
        u = apply_to_vector(u, op.resolve(store), op.targets, block.num_qubits)
    return u
