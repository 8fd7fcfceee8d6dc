"""Loss and exact gradients: parameter-shift rule with finite-difference oracle.

Shared parameters are differentiated by shifting one gate instance at a
time (the product rule), never all occurrences simultaneously.  The shift
evaluations reuse cached stage outputs: shifting a gate inside one block
only requires re-simulating that block and contracting against an
effective observable lifted backwards through the later stages, which is
algebraically identical to a full shifted forward pass.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .blocks import BlockCircuit
from .params import ParamId, ParamStore
from .states import (
    MixedState,
    PureState,
    apply_to_density,
    apply_to_vector,
    conjugate_observable,
    partial_trace,
    z_observable,
    zero_state,
)
from .network import encoder_state, forward, unit_input_state
from .topology import Sample, Topology

P_CLAMP = 1e-12
SHIFT = np.pi / 2

GRADIENT_SHIFT = "shift"
GRADIENT_FD = "fd"
GRADIENT_MODES = (GRADIENT_SHIFT, GRADIENT_FD)


@dataclass
class LossValue:
    total: float
    per_sample: list[float]


def clamp_probability(p1: float) -> float:
    return float(min(max(p1, P_CLAMP), 1.0 - P_CLAMP))


def bce_loss(p1: float, y: int) -> float:
    """Binary cross-entropy of one sample, with log clamping."""
    p1 = clamp_probability(p1)
    return -(y * np.log(p1) + (1 - y) * np.log(1.0 - p1))


def dloss_dp1(p1: float, y: int) -> float:
    p1 = clamp_probability(p1)
    return -y / p1 + (1 - y) / (1.0 - p1)


def trainable_ids(store: ParamStore) -> list[ParamId]:
    return store.sorted_ids()


# --- per-sample machinery --------------------------------------------------


def _split_ansatz(block: BlockCircuit):
    rots = [op for op in block.ops if op.kind != "cnot"]
    ring = [op for op in block.ops if op.kind == "cnot"]
    return rots, ring


def _conj_through(obs: np.ndarray, ops, store: ParamStore, nq: int) -> np.ndarray:
    for op in reversed(list(ops)):
        obs = conjugate_observable(obs, op.resolve(store), op.targets, nq)
    return obs


def _slot_effective(obs: np.ndarray, mats: list[np.ndarray], skip: int) -> np.ndarray:
    """Contract all slots but `skip` of a multi-slot observable.

    `obs` acts on N slots of dimension 4; `mats` are the 4x4 states sitting
    in each slot.  Returns E with Tr[mats[skip] @ E] equal to the full
    expectation Tr[(kron of mats) @ obs].
    """
    n = len(mats)
    t = obs.reshape((4,) * (2 * n))
    row = string.ascii_lowercase[:n]
    col = string.ascii_uppercase[:n]
    operands = [t]
    subs = [row + col]
    for j, m in enumerate(mats):
        if j == skip:
            continue
        operands.append(m)
        subs.append(col[j] + row[j])
    expr = ",".join(subs) + "->" + row[skip] + col[skip]
    return np.einsum(expr, *operands)


def _trace_prod(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.real(np.einsum("ab,ba->", a, b)))


class _SampleCache:
    """Forward caches and effective observables for one sample."""

    def __init__(self, topology: Topology, sample: Sample, store: ParamStore):
        self.topology = topology
        self.sample = sample
        self.store = store
        n, w = topology.n_positions, topology.unit_width
        self.nq_row = 2 * n

        self.rots1, self.ring1 = _split_ansatz(topology.u1_block)
        self.rots2, self.ring2 = _split_ansatz(topology.u2_block)
        self.rots3, self.ring3 = _split_ansatz(topology.u3_block)

        enc = [encoder_state(topology, v, store) for v in sample.positions]
        self.enc = enc

        # Stage 1: unit inputs, rotation-layer states, unit outputs.
        self.psi = [[None] * n for _ in range(n)]
        self.mid1 = [[None] * n for _ in range(n)]
        self.rho = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                psi = unit_input_state(topology, enc, i, j).amplitudes
                a = psi
                for op in self.rots1:
                    a = apply_to_vector(a, op.resolve(store), op.targets, w)
                phi = a
                for op in self.ring1:
                    phi = apply_to_vector(phi, op.resolve(store), op.targets, w)
                self.psi[i][j] = psi
                self.mid1[i][j] = a
                self.rho[i][j] = partial_trace(
                    PureState(w, phi), topology.u1_block.kept
                ).rho

        # Stage 2: row inputs, rotation-layer densities, row outputs.
        self.row_in = []
        self.mid2 = []
        self.sigma = []
        for i in range(n):
            order = topology.row_units(i)
            r = self.rho[i][order[0]]
            for s in range(1, n):
                r = np.kron(r, self.rho[i][order[s]])
            self.row_in.append(r)
            s = r
            for op in self.rots2:
                s = apply_to_density(s, op.resolve(store), op.targets, self.nq_row)
            self.mid2.append(s)
            full = s
            for op in self.ring2:
                full = apply_to_density(full, op.resolve(store), op.targets, self.nq_row)
            self.sigma.append(
                partial_trace(MixedState(self.nq_row, full),
                              topology.u2_block.kept).rho
            )

        # Stage 3: head input and rotation-layer density.
        s = self.sigma[0]
        for i in range(1, n):
            s = np.kron(s, self.sigma[i])
        self.head_in = s
        m3 = s
        for op in self.rots3:
            m3 = apply_to_density(m3, op.resolve(store), op.targets, self.nq_row)
        self.mid3 = m3

        # Measured observable lifted backwards through the stages.
        z0 = z_observable(self.nq_row, 0)
        self.w3 = _conj_through(z0, self.ring3, store, self.nq_row)
        self.z = _trace_prod(self.mid3, self.w3)
        self.p1 = (1.0 - self.z) / 2.0

        o3 = _conj_through(self.w3, self.rots3, store, self.nq_row)
        eye_rest = np.eye(2 ** (self.nq_row - 2), dtype=complex)
        self.w2 = []
        self.f = []
        for i in range(n):
            e_i = _slot_effective(o3, self.sigma, i)
            lifted = np.kron(e_i, eye_rest)
            w2_i = _conj_through(lifted, self.ring2, store, self.nq_row)
            self.w2.append(w2_i)
            self.f.append(_conj_through(w2_i, self.rots2, store, self.nq_row))

        eye_unit_rest = np.eye(2 ** (w - 2), dtype=complex)
        self.m1 = [[None] * n for _ in range(n)]
        self.h1 = [[None] * n for _ in range(n)]
        for i in range(n):
            order = topology.row_units(i)
            slot_rhos = [self.rho[i][j] for j in order]
            for s in range(n):
                j = order[s]
                g_ij = _slot_effective(self.f[i], slot_rhos, s)
                lifted = np.kron(g_ij, eye_unit_rest)
                m_ij = _conj_through(lifted, self.ring1, store, w)
                self.m1[i][j] = m_ij
                self.h1[i][j] = _conj_through(m_ij, self.rots1, store, w)

    # -- shifted evaluations ------------------------------------------------

    def _shift_rot_density(self, mid: np.ndarray, obs: np.ndarray,
                           op, delta: float, nq: int) -> float:
        from .blocks import ROTATIONS

        g = ROTATIONS[op.kind](delta)
        shifted = apply_to_density(mid, g, op.targets, nq)
        return _trace_prod(shifted, obs)

    def z_shift_u3(self, op, delta: float) -> float:
        return self._shift_rot_density(self.mid3, self.w3, op, delta, self.nq_row)

    def z_shift_u2(self, op, delta: float, row: int) -> float:
        return self._shift_rot_density(self.mid2[row], self.w2[row], op, delta,
                                       self.nq_row)

    def z_shift_u1(self, op, delta: float, i: int, j: int) -> float:
        from .blocks import ROTATIONS

        w = self.topology.unit_width
        g = ROTATIONS[op.kind](delta)
        b = apply_to_vector(self.mid1[i][j], g, op.targets, w)
        return float(np.real(np.vdot(b, self.m1[i][j] @ b)))

    def z_shift_encoder(self, shifted_states: dict, i: int, j: int,
                        slot: int, sign: int) -> float:
        slots = self.topology.unit_slots(i, j)
        parts = []
        for s, p in enumerate(slots):
            parts.append(shifted_states[sign] if s == slot
                         else self.enc[p].amplitudes)
        psi = parts[0]
        for part in parts[1:]:
            psi = np.kron(psi, part)
        return float(np.real(np.vdot(psi, self.h1[i][j] @ psi)))

    # -- per-parameter dz/dtheta ---------------------------------------------

    def z_gradient(self) -> dict[ParamId, float]:
        topo, store = self.topology, self.store
        n = topo.n_positions
        grad: dict[ParamId, float] = {}

        for op in self.rots1:
            total = 0.0
            for i in range(n):
                for j in range(n):
                    total += (self.z_shift_u1(op, SHIFT, i, j)
                              - self.z_shift_u1(op, -SHIFT, i, j)) / 2.0
            grad[op.param] = total
        for op in self.rots2:
            total = 0.0
            for i in range(n):
                total += (self.z_shift_u2(op, SHIFT, i)
                          - self.z_shift_u2(op, -SHIFT, i)) / 2.0
            grad[op.param] = total
        for op in self.rots3:
            grad[op.param] = (self.z_shift_u3(op, SHIFT)
                              - self.z_shift_u3(op, -SHIFT)) / 2.0

        if topo.dataset != "iris":
            self._embedding_gradient(grad)
        return grad

    def _embedding_gradient(self, grad: dict[ParamId, float]) -> None:
        topo, store = self.topology, self.store
        n = topo.n_positions
        # occurrences of each position in (unit, slot) form
        occ: dict[int, list[tuple[int, int, int]]] = {p: [] for p in range(n)}
        for i in range(n):
            for j in range(n):
                for slot, p in enumerate(topo.unit_slots(i, j)):
                    occ[p].append((i, j, slot))
        for p, token in enumerate(self.sample.positions):
            block = topo.encoder_block(token, store)
            emb_ops = [op for op in block.ops if op.param is not None]
            for op in emb_ops:
                shifted = {
                    sign: self._shifted_encoder_amps(block, op, sign * SHIFT)
                    for sign in (+1, -1)
                }
                total = grad.get(op.param, 0.0)
                for (i, j, slot) in occ[p]:
                    total += (self.z_shift_encoder(shifted, i, j, slot, +1)
                              - self.z_shift_encoder(shifted, i, j, slot, -1)) / 2.0
                grad[op.param] = total

    def _shifted_encoder_amps(self, block: BlockCircuit, target_op,
                              delta: float) -> np.ndarray:
        from .blocks import ROTATIONS

        amps = zero_state(block.num_qubits).amplitudes
        for op in block.ops:
            amps = apply_to_vector(amps, op.resolve(self.store), op.targets,
                                   block.num_qubits)
            if op is target_op:
                amps = apply_to_vector(amps, ROTATIONS[op.kind](delta),
                                       op.targets, block.num_qubits)
        return amps


def sample_forward_and_z_gradient(topology: Topology, sample: Sample,
                                  store: ParamStore):
    """p1 for one sample plus d<Z>/dtheta for every parameter it touches."""
    cache = _SampleCache(topology, sample, store)
    return cache.p1, cache.z_gradient()


def parameter_shift_gradient(topology: Topology, samples: list[Sample],
                             store: ParamStore) -> tuple[LossValue, dict[ParamId, float]]:
    """Batch loss and dL/dtheta via the parameter-shift rule."""
    from .fastsim import FastContext

    ctx = FastContext(topology, store)
    grad = {pid: 0.0 for pid in trainable_ids(store)}
    per_sample = []
    for sample in samples:
        z, zgrad = ctx.z_gradient(sample)
        p1 = (1.0 - z) / 2.0
        per_sample.append(float(bce_loss(p1, sample.label)))
        chain = dloss_dp1(p1, sample.label) * (-0.5)
        for pid, dz in zgrad.items():
            grad[pid] += chain * dz
    return LossValue(float(np.sum(per_sample)), per_sample), grad


def batch_loss(topology: Topology, samples: list[Sample],
               store: ParamStore) -> LossValue:
    per_sample = [
        float(bce_loss(forward(topology, s, store).p1, s.label)) for s in samples
    ]
    return LossValue(float(np.sum(per_sample)), per_sample)


def finite_difference_gradient(topology: Topology, samples: list[Sample],
                               store: ParamStore,
                               h: float = 1e-6) -> tuple[LossValue, dict[ParamId, float]]:
    """Central finite differences of the batch loss; the independent oracle."""
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    base = batch_loss(topology, samples, store)
    grad = {}
    for pid in trainable_ids(store):
        theta = store.get(pid)
        store.set(pid, theta + h)
        plus = batch_loss(topology, samples, store).total
        store.set(pid, theta - h)
        minus = batch_loss(topology, samples, store).total
        store.set(pid, theta)
        grad[pid] = (plus - minus) / (2 * h)
    return base, grad


def loss_and_gradient(topology: Topology, samples: list[Sample], store: ParamStore,
                      mode: str = GRADIENT_SHIFT,
                      fd_h: float = 1e-6) -> tuple[LossValue, dict[ParamId, float]]:
    if mode == GRADIENT_SHIFT:
        return parameter_shift_gradient(topology, samples, store)
    if mode == GRADIENT_FD:
        return finite_difference_gradient(topology, samples, store, fd_h)
    raise ValueError(f"unknown gradient mode {mode!r}")
