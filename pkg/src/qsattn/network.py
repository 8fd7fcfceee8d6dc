"""Staged forward pass of the attention network, plus a monolithic oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import evolve_density, evolve_pure
from .channels import NoiseChannel, apply_channel_to_density
from .params import ParamStore
from .states import (
    MixedState,
    PureState,
    apply_to_vector,
    expect_z,
    partial_trace,
    tensor,
    tensor_pure,
    zero_state,
)
from .topology import Sample, Topology

NOISE_FINAL = "final"
NOISE_PER_GATE = "per-gate"
NOISE_PLACEMENTS = (NOISE_FINAL, NOISE_PER_GATE)

MONOLITHIC_QUBIT_LIMIT = 12


@dataclass
class ForwardResult:
    expect_z: float
    p1: float


def classify(p1: float) -> int:
    """Predicted label; p1 = 0.5 ties resolve to class 0."""
    if not 0.0 <= p1 <= 1.0:
        raise ValueError(f"p1 must be in [0, 1], got {p1}")
    return int(p1 > 0.5)


def encoder_state(topology: Topology, position_value, store: ParamStore) -> PureState:
    """Evolve |0..0> through one position's encoder circuit."""
    block = topology.encoder_block(position_value, store)
    amps = evolve_pure(block, zero_state(block.num_qubits).amplitudes, store)
    return PureState(block.num_qubits, amps)


def unit_input_state(topology: Topology, encoder_states: list[PureState],
                     i: int, j: int) -> PureState:
    return tensor_pure([encoder_states[p] for p in topology.unit_slots(i, j)])


def _stage1(topology: Topology, sample: Sample, store: ParamStore) -> list[list[MixedState]]:
    n = topology.n_positions
    if len(sample.positions) != n:
        raise ValueError(f"sample has {len(sample.positions)} positions, expected {n}")
    enc = [encoder_state(topology, v, store) for v in sample.positions]
    units = []
    for i in range(n):
        row = []
        for j in range(n):
            psi = unit_input_state(topology, enc, i, j)
            evolved = evolve_pure(topology.u1_block, psi.amplitudes, store)
            row.append(
                partial_trace(PureState(topology.unit_width, evolved),
                              topology.u1_block.kept)
            )
        units.append(row)
    return units


def _stage2(topology: Topology, units: list[list[MixedState]],
            store: ParamStore) -> list[MixedState]:
    sigmas = []
    for i, row in enumerate(units):
        joint = tensor([row[j] for j in topology.row_units(i)])
        rho = evolve_density(topology.u2_block, joint.rho, store)
        sigmas.append(
            partial_trace(MixedState(joint.num_qubits, rho), topology.u2_block.kept)
        )
    return sigmas


def _stage3(topology: Topology, sigmas: list[MixedState], store: ParamStore,
            noise: NoiseChannel | None, noise_placement: str) -> float:
    joint = tensor(sigmas)
    nq = joint.num_qubits
    rho = joint.rho
    if noise is not None and noise_placement == NOISE_PER_GATE:
        for op in topology.u3_block.ops:
            rho = apply_to_vector(rho, op.resolve(store), op.targets, nq)
            rho = apply_to_vector(rho.conj().T, op.resolve(store), op.targets, nq)
            rho = rho.conj().T
            rho = apply_channel_to_density(rho, noise, 0, nq)
    else:
        rho = evolve_density(topology.u3_block, rho, store)
        if noise is not None:
            rho = apply_channel_to_density(rho, noise, 0, nq)
    return expect_z(MixedState(nq, rho), 0)


def forward(topology: Topology, sample: Sample, store: ParamStore,
            noise: NoiseChannel | None = None,
            noise_placement: str = NOISE_FINAL) -> ForwardResult:
    """Staged simulation: unit blocks, row blocks, head block, Z measurement."""
    if noise_placement not in NOISE_PLACEMENTS:
        raise ValueError(f"unknown noise placement {noise_placement!r}")
    units = _stage1(topology, sample, store)
    sigmas = _stage2(topology, units, store)
    z = _stage3(topology, sigmas, store, noise, noise_placement)
    return ForwardResult(expect_z=z, p1=(1.0 - z) / 2.0)


def forward_monolithic(topology: Topology, sample: Sample, store: ParamStore) -> float:
    """Whole-network pure-state simulation; correctness oracle for `forward`.

    Never discards qubits, so only reduced instances fit the qubit budget.
    Returns the Z expectation on the measured qubit.
    """
    n, w = topology.n_positions, topology.unit_width
    total = topology.total_qubits
    if total > MONOLITHIC_QUBIT_LIMIT:
        raise ValueError(f"{total} qubits exceed the monolithic limit "
                         f"of {MONOLITHIC_QUBIT_LIMIT}")
    enc = [encoder_state(topology, v, store) for v in sample.positions]
    parts = [unit_input_state(topology, enc, i, j) for i in range(n) for j in range(n)]
    amps = tensor_pure(parts).amplitudes

    def unit_base(i: int, j: int) -> int:
        return (i * n + j) * w

    def run(block, target_map):
        nonlocal amps
        for op in block.ops:
            globs = tuple(target_map[q] for q in op.targets)
            amps = apply_to_vector(amps, op.resolve(store), globs, total)

    for i in range(n):
        for j in range(n):
            run(topology.u1_block, {q: unit_base(i, j) + q for q in range(w)})
    for i in range(n):
        order = topology.row_units(i)
        run(topology.u2_block,
            {2 * s + k: unit_base(i, order[s]) + k for s in range(n) for k in (0, 1)})
    run(topology.u3_block,
        {2 * i + k: unit_base(i, topology.row_units(i)[0]) + k
         for i in range(n) for k in (0, 1)})
    return expect_z(PureState(total, amps), 0)


def accuracy(topology: Topology, samples: list[Sample], store: ParamStore,
             noise: NoiseChannel | None = None,
             noise_placement: str = NOISE_FINAL) -> tuple[float, list[int]]:
    """Fraction of correctly classified samples and the predicted labels."""
    preds = []
    correct = 0
    for s in samples:
        pred = classify(forward(topology, s, store, noise, noise_placement).p1)
        preds.append(pred)
        correct += int(pred == s.label)
    return correct / len(samples), preds
