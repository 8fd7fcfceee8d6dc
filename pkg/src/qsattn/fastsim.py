"""Fast noiseless evaluation engine.

The ansatz blocks built in this package are always one Rx layer followed
by a CNOT ring.  The Rx layer is a tensor product of 2x2 matrices and the
ring is a permutation of basis states, so block outputs and measured
expectations reduce to small per-slot contractions instead of full
2^n x 2^n algebra.  Parameter shifts merge into the Rx layer (rotation
angles add), which makes every shifted evaluation a cheap local update.

The generic path in `network.forward` is the reference implementation;
tests pin this engine against it.
"""

from __future__ import annotations

import numpy as np

from .blocks import BlockCircuit
from .params import ParamId, ParamStore
from .states import rx
from .network import encoder_state, unit_input_state
from .topology import Sample, Topology


def _ring_permutation(block: BlockCircuit) -> np.ndarray:
    """perm[m] = basis index after the block's CNOT gates act on |m>."""
    n = block.num_qubits
    idx = np.arange(2**n)
    for op in block.ops:
        if op.kind != "cnot":
            continue
        c, t = op.targets
        cbit = (idx >> (n - 1 - c)) & 1
        idx = idx ^ (cbit << (n - 1 - t))
    return idx


def _slot_digits(num_slots: int) -> np.ndarray:
    """digits[m, s] = base-4 digit of slot s (two qubits) in index m."""
    dim = 4**num_slots
    m = np.arange(dim)
    return np.stack(
        [(m >> (2 * (num_slots - 1 - s))) & 3 for s in range(num_slots)], axis=1
    )


class AnsatzEngine:
    """[permutation o Rx-layer] decomposition of one ansatz block."""

    def __init__(self, block: BlockCircuit, store: ParamStore):
        self.block = block
        self.n = block.num_qubits
        rots = [op for op in block.ops if op.kind != "cnot"]
        if [op.targets[0] for op in rots] != list(range(self.n)) or any(
            op.kind != "rx" for op in rots
        ):
            raise ValueError("engine expects one Rx per qubit, in qubit order")
        self.param_ids = [op.param for op in rots]
        self.thetas = np.array([store.get(op.param) for op in rots])
        self.perm = _ring_permutation(block)
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(len(self.perm))
        self.perm_inv = inv
        self._slot_mats: dict[tuple[int, int | None, float], np.ndarray] = {}

    def rot_1q(self, qubit: int, delta: float = 0.0) -> np.ndarray:
        return rx(self.thetas[qubit] + delta)

    def slot_mat(self, slot: int, shift_qubit: int | None = None,
                 delta: float = 0.0) -> np.ndarray:
        """4x4 Rx-layer factor of one two-qubit slot."""
        key = (slot, shift_qubit, float(delta))
        mat = self._slot_mats.get(key)
        if mat is None:
            a = self.rot_1q(2 * slot,
                            delta if shift_qubit == 2 * slot else 0.0)
            b = self.rot_1q(2 * slot + 1,
                            delta if shift_qubit == 2 * slot + 1 else 0.0)
            mat = np.kron(a, b)
            self._slot_mats[key] = mat
        return mat


class RowEngine:
    """Two-qubit-slot algebra for the wide (2N-qubit) U2/U3 blocks."""

    def __init__(self, engine: AnsatzEngine):
        self.engine = engine
        self.num_slots = engine.n // 2
        self.digits = _slot_digits(self.num_slots)
        dim4 = 4 ** (self.num_slots - 1)
        # row/column basis indices for the kept slot 0, per (a, b, r)
        a = np.arange(4).reshape(4, 1, 1)
        b = np.arange(4).reshape(1, 4, 1)
        r = np.arange(dim4).reshape(1, 1, dim4)
        zero = np.zeros((4, 4, dim4), dtype=int)
        self.m_row = engine.perm_inv[(a * dim4 + r + zero).reshape(-1)]
        self.m_col = engine.perm_inv[(b * dim4 + r + zero).reshape(-1)]
        self.dm = self.digits[self.m_row]  # (4*4*dim4, N)
        self.dmc = self.digits[self.m_col]
        self.s_idx = np.arange(self.num_slots)
        # Z on qubit 0 of the block output, pulled through the ring.
        n = engine.n
        out_idx = engine.perm
        self.z_signs = 1.0 - 2.0 * ((out_idx >> (n - 1)) & 1)

    def slot_mats(self, rhos: list[np.ndarray], shift_qubit: int | None = None,
                  delta: float = 0.0) -> np.ndarray:
        """q[s] = T_s rho_s T_s^dagger for each slot, stacked (N, 4, 4)."""
        out = np.empty((self.num_slots, 4, 4), dtype=complex)
        for s, rho in enumerate(rhos):
            t = self.engine.slot_mat(s, shift_qubit, delta)
            out[s] = t @ rho @ t.conj().T
        return out

    def keep2(self, q: np.ndarray) -> np.ndarray:
        """sigma = Tr_rest[U (kron rhos) U^dagger] on the first slot."""
        vals = q[self.s_idx, self.dm, self.dmc].prod(axis=1)
        return vals.reshape(4, 4, -1).sum(axis=2)

    def keep2_many(self, qs: np.ndarray) -> np.ndarray:
        """keep2 for a batch of slot-factor stacks, qs shape (B, N, 4, 4)."""
        vals = qs[:, self.s_idx, self.dm, self.dmc].prod(axis=2)
        return vals.reshape(len(qs), 4, 4, -1).sum(axis=3)

    def z_value(self, q: np.ndarray) -> float:
        """<Z_0> after the block, from the slot factors of its input."""
        diag = np.einsum("sxx->sx", q)  # per-slot diagonals
        prods = diag[self.s_idx, self.digits].prod(axis=1)
        return float(np.real(np.sum(self.z_signs * prods)))

    def z_value_many(self, qs: np.ndarray) -> np.ndarray:
        """z_value for a batch of slot-factor stacks, qs shape (B, N, 4, 4)."""
        diag = np.einsum("bsxx->bsx", qs)
        prods = diag[:, self.s_idx, self.digits].prod(axis=2)
        return np.real(prods @ self.z_signs)

    def z_slot_observable(self, q: np.ndarray, slot: int) -> np.ndarray:
        """E with z_value(q) == Tr[rho_slot @ E], contracting the other slots."""
        diag = np.einsum("sxx->sx", q)
        others = [s for s in range(self.num_slots) if s != slot]
        w = self.z_signs.astype(complex)
        for s in others:
            w = w * diag[s, self.digits[:, s]]
        c = np.zeros(4, dtype=complex)
        np.add.at(c, self.digits[:, slot], w)
        t = self.engine.slot_mat(slot)
        return t.conj().T @ np.diag(c) @ t

    def effective_slot_observable(self, q: np.ndarray, obs: np.ndarray,
                                  slot: int) -> np.ndarray:
        """G with Tr[sigma_out obs] == Tr[rho_slot @ G].

        `obs` is a 4x4 observable on the block's kept slot; the remaining
        slot inputs are held at `q`.
        """
        dm, dmc = self.dm, self.dmc
        vals = q[self.s_idx, dm, dmc]
        others = [s for s in range(self.num_slots) if s != slot]
        w = vals[:, others].prod(axis=1)
        ab = np.repeat(np.arange(16), len(self.m_row) // 16)
        e_w = obs.T.reshape(-1)[ab]  # obs[b, a] per (a, b, r) tuple
        weights = w * e_w
        c = np.zeros((4, 4), dtype=complex)
        np.add.at(c, (dm[:, slot], dmc[:, slot]), weights)
        t = self.engine.slot_mat(slot)
        return t.conj().T @ c.T @ t

    def obs_value(self, q: np.ndarray, obs: np.ndarray) -> float:
        """Tr[(block output on kept slot) @ obs] for 4x4 obs."""
        sigma = self.keep2(q)
        return float(np.real(np.einsum("ab,ba->", sigma, obs)))


class UnitEngine:
    """Small-register (unit-width) block evaluation.

    Dense rotation-layer matrices (including the parameter-shift variants,
    which are only a changed angle) are cached, so one block evaluation is
    a single small matmul plus the ring permutation.
    """

    def __init__(self, engine: AnsatzEngine):
        self.engine = engine
        self.n = engine.n
        self._layers: dict[tuple[int | None, float], np.ndarray] = {}

    def rot_layer_matrix(self, shift_qubit: int | None = None,
                         delta: float = 0.0) -> np.ndarray:
        key = (shift_qubit, float(delta))
        mat = self._layers.get(key)
        if mat is None:
            mat = np.eye(1)
            for qubit in range(self.n):
                g = self.engine.rot_1q(qubit,
                                       delta if shift_qubit == qubit else 0.0)
                mat = np.kron(mat, g)
            self._layers[key] = mat
        return mat

    def output_rho(self, psi: np.ndarray, shift_qubit: int | None = None,
                   delta: float = 0.0) -> np.ndarray:
        """Reduced state on the first two qubits after the block."""
        phi = (self.rot_layer_matrix(shift_qubit, delta) @ psi)[self.engine.perm_inv]
        m = phi.reshape(4, -1)
        return m @ m.conj().T

    def ring_lifted(self, obs4: np.ndarray) -> np.ndarray:
        """X = Ring^dagger (obs4 on kept qubits (x) I) Ring.

        <psi| T^dagger X T |psi> == Tr[output_rho(psi) @ obs4].
        """
        rest = 2 ** (self.n - 2)
        lifted = np.kron(obs4, np.eye(rest))
        p = self.engine.perm
        return lifted[np.ix_(p, p)]


class FastContext:
    """Noiseless forward and Z-gradient evaluation for one parameter setting.

    Build once per optimizer step; parameter values are baked in.
    """

    def __init__(self, topology: Topology, store: ParamStore):
        self.topology = topology
        self.store = store
        self.u1 = UnitEngine(AnsatzEngine(topology.u1_block, store))
        self.u2 = RowEngine(AnsatzEngine(topology.u2_block, store))
        self.u3 = RowEngine(AnsatzEngine(topology.u3_block, store))

    # -- forward -------------------------------------------------------------

    def _stage_states(self, sample: Sample):
        topo, store = self.topology, self.store
        n = topo.n_positions
        enc = [encoder_state(topo, v, store) for v in sample.positions]
        psi = [[unit_input_state(topo, enc, i, j).amplitudes for j in range(n)]
               for i in range(n)]
        rho = [[self.u1.output_rho(psi[i][j]) for j in range(n)] for i in range(n)]
        # Row registers lead with the diagonal unit (see Topology.row_units).
        rho = [[rho[i][j] for j in topo.row_units(i)] for i in range(n)]
        q2 = [self.u2.slot_mats(rho[i]) for i in range(n)]
        sigma = [self.u2.keep2(q2[i]) for i in range(n)]
        q3 = self.u3.slot_mats(sigma)
        return enc, psi, rho, q2, sigma, q3

    def forward_z(self, sample: Sample) -> float:
        _, _, _, _, _, q3 = self._stage_states(sample)
        return self.u3.z_value(q3)

    def forward_p1(self, sample: Sample) -> float:
        return (1.0 - self.forward_z(sample)) / 2.0

    # -- gradient --------------------------------------------------------------

    def z_gradient(self, sample: Sample) -> tuple[float, dict[ParamId, float]]:
        """(z, d<Z>/dtheta) via per-instance parameter shifts."""
        topo, store = self.topology, self.store
        n = topo.n_positions
        shift = np.pi / 2
        enc, psi, rho, q2, sigma, q3 = self._stage_states(sample)
        z = self.u3.z_value(q3)
        grad: dict[ParamId, float] = {}

        # Head block: shift each Rx and re-measure, one batched pass.
        head_ids = self.u3.engine.param_ids
        batch3 = np.broadcast_to(q3, (2 * len(head_ids),) + q3.shape).copy()
        for k in range(len(head_ids)):
            s = k // 2
            batch3[2 * k, s] = self._reslot(self.u3, sigma, k, shift, s)
            batch3[2 * k + 1, s] = self._reslot(self.u3, sigma, k, -shift, s)
        zs = self.u3.z_value_many(batch3)
        for k, pid in enumerate(head_ids):
            grad[pid] = float(zs[2 * k] - zs[2 * k + 1]) / 2.0

        # Effective observables on each row output.
        e_row = [self.u3.z_slot_observable(q3, i) for i in range(n)]

        # Row blocks: one shift per (parameter, row instance), batched per row.
        row_ids = self.u2.engine.param_ids
        row_totals = np.zeros(len(row_ids))
        for i in range(n):
            batch2 = np.broadcast_to(q2[i],
                                     (2 * len(row_ids),) + q2[i].shape).copy()
            for k in range(len(row_ids)):
                s = k // 2
                batch2[2 * k, s] = self._reslot(self.u2, rho[i], k, shift, s)
                batch2[2 * k + 1, s] = self._reslot(self.u2, rho[i], k, -shift, s)
            sig = self.u2.keep2_many(batch2)
            vals = np.real(np.einsum("uab,ba->u", sig, e_row[i]))
            row_totals += (vals[0::2] - vals[1::2]) / 2.0
        for k, pid in enumerate(row_ids):
            grad[pid] = float(row_totals[k])

        # Effective observables on each unit output; slot s of row i holds
        # unit (i, row_units(i)[s]).
        g_unit: list[list[np.ndarray]] = [[None] * n for _ in range(n)]
        for i in range(n):
            order = topo.row_units(i)
            for s in range(n):
                g_unit[i][order[s]] = self.u2.effective_slot_observable(
                    q2[i], e_row[i], s)

        # Lift each unit observable through the CNOT ring once; every
        # shifted unit evaluation is then one small quadratic form.
        psi_stack = np.array([psi[i][j] for i in range(n) for j in range(n)])
        x_stack = np.array([self.u1.ring_lifted(g_unit[i][j])
                            for i in range(n) for j in range(n)])

        # Unit blocks: one shift per (parameter, unit instance).
        for k, pid in enumerate(self.u1.engine.param_ids):
            vals = []
            for sign in (+1.0, -1.0):
                t = self.u1.rot_layer_matrix(k, sign * shift)
                phi = psi_stack @ t.T
                vals.append(np.einsum("ux,uxy,uy->u",
                                      phi.conj(), x_stack, phi).real)
            grad[pid] = float(np.sum(vals[0] - vals[1]) / 2.0)

        if topo.dataset != "iris":
            self._embedding_gradient(sample, enc, x_stack, grad)
        return z, grad

    def _reslot(self, row: RowEngine, mats: list[np.ndarray], qubit: int,
                delta: float, slot: int) -> np.ndarray:
        t = row.engine.slot_mat(slot, qubit, delta)
        return t @ mats[slot] @ t.conj().T

    def _embedding_gradient(self, sample: Sample, enc, x_stack, grad) -> None:
        """Product-rule embedding gradient via per-slot effective observables.

        For each unit and slot, the network's Z output is a quadratic form
        <psi_slot| K |psi_slot> once the other slots are held at their
        encoder states; a shifted token state then costs one 4x4 contraction
        per occurrence.
        """
        topo = self.topology
        n = topo.n_positions
        n_slots = len(topo.unit_slots(0, 0))
        d = 2**topo.n1
        t1 = self.u1.rot_layer_matrix()
        low, up = "abc"[:n_slots], "ABC"[:n_slots]
        k_obs: dict[tuple[int, int, int], np.ndarray] = {}
        for i in range(n):
            for j in range(n):
                m = t1.conj().T @ x_stack[i * n + j] @ t1
                mt = m.reshape((d,) * (2 * n_slots))
                states = [enc[p].amplitudes for p in topo.unit_slots(i, j)]
                for s in range(n_slots):
                    scripts, operands = [low + up], [mt]
                    for t in range(n_slots):
                        if t == s:
                            continue
                        scripts += [low[t], up[t]]
                        operands += [states[t].conj(), states[t]]
                    expr = ",".join(scripts) + "->" + low[s] + up[s]
                    k_obs[i, j, s] = np.einsum(expr, *operands)

        occ: dict[int, list[tuple[int, int, int]]] = {p: [] for p in range(n)}
        for i in range(n):
            for j in range(n):
                for slot, p in enumerate(topo.unit_slots(i, j)):
                    occ[p].append((i, j, slot))
        for p, token in enumerate(sample.positions):
            block = topo.encoder_block(token, self.store)
            for op, shifted in self._encoder_shifted_states(block):
                total = grad.get(op.param, 0.0)
                for (i, j, slot) in occ[p]:
                    k = k_obs[i, j, slot]
                    for sign in (+1, -1):
                        v = shifted[sign]
                        total += sign * float(np.real(v.conj() @ k @ v)) / 2.0
                grad[op.param] = total

    def _encoder_shifted_states(self, block):
        """All parameter-shifted encoder output states, one pass per block."""
        from .blocks import ROTATIONS
        from .states import apply_to_vector, zero_state

        nq = block.num_qubits
        dim = 2**nq

        def dense(gate, targets):
            return apply_to_vector(np.eye(dim, dtype=complex), gate, targets, nq)

        mats = [dense(op.resolve(self.store), op.targets) for op in block.ops]
        prefix = [zero_state(nq).amplitudes]
        for m in mats:
            prefix.append(m @ prefix[-1])
        suffix = [np.eye(dim, dtype=complex)] * (len(mats) + 1)
        for idx in range(len(mats) - 1, -1, -1):
            suffix[idx] = suffix[idx + 1] @ mats[idx]
        out = []
        for idx, op in enumerate(block.ops):
            if op.param is None:
                continue
            shifted = {}
            for sign in (+1, -1):
                rot = dense(ROTATIONS[op.kind](sign * np.pi / 2), op.targets)
                shifted[sign] = suffix[idx + 1] @ rot @ prefix[idx + 1]
            out.append((op, shifted))
        return out
