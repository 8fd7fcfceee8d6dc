"""Exact dense simulation of pure states and density matrices.

Convention used throughout the package: qubit 0 is the most significant
bit of the computational-basis index, so the basis state |b0 b1 ... b_{n-1}>
lives at index sum(b_q << (n-1-q)).  np.kron therefore stacks the first
factor on the lower-numbered qubits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_ATOL = 1e-10
PSD_FLOOR = -1e-9


@dataclass
class PureState:
    """Complex statevector over a qubit register."""

    num_qubits: int
    amplitudes: np.ndarray

    def check(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("need at least one qubit")
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError("amplitude vector has wrong length")
        norm = np.sum(np.abs(self.amplitudes) ** 2)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state not normalized: |psi|^2 = {norm}")

    def to_mixed(self) -> "MixedState":
        psi = self.amplitudes
        return MixedState(self.num_qubits, np.outer(psi, psi.conj()))


@dataclass
class MixedState:
    """Density matrix over a qubit register."""

    num_qubits: int
    rho: np.ndarray

    def check(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("need at least one qubit")
        dim = 2**self.num_qubits
        if self.rho.shape != (dim, dim):
            raise ValueError("density matrix has wrong shape")
        if abs(np.trace(self.rho) - 1.0) > NORM_ATOL:
            raise ValueError(f"trace(rho) = {np.trace(self.rho)}, expected 1")
        if np.max(np.abs(self.rho - self.rho.conj().T)) > NORM_ATOL:
            raise ValueError("density matrix not Hermitian")
        evals = np.linalg.eigvalsh(self.rho)
        if np.min(evals) < PSD_FLOOR:
            raise ValueError(f"density matrix not PSD: min eigenvalue {np.min(evals)}")

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


def zero_state(num_qubits: int) -> PureState:
    """|0...0> on the given register size."""
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = 1.0
    return PureState(num_qubits, amps)


# --- gate matrices -------------------------------------------------------

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def _check_angle(theta: float) -> float:
    theta = float(theta)
    if not np.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta}")
    return theta


def rx(theta: float) -> np.ndarray:
    theta = _check_angle(theta)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    theta = _check_angle(theta)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    theta = _check_angle(theta)
    return np.array(
        [[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]], dtype=complex
    )


# --- gate application ----------------------------------------------------


def _check_targets(num_qubits: int, targets: tuple[int, ...], arity: int) -> None:
    if len(targets) != arity:
        raise ValueError(f"gate acts on {arity} qubits, got targets {targets}")
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate targets {targets}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise ValueError(f"target {t} out of range for {num_qubits} qubits")


def _gate_arity(gate: np.ndarray) -> int:
    if gate.shape == (2, 2):
        return 1
    if gate.shape == (4, 4):
        return 2
    raise ValueError(f"unsupported gate shape {gate.shape}")


def apply_to_vector(vec: np.ndarray, gate: np.ndarray, targets: tuple[int, ...],
                    num_qubits: int) -> np.ndarray:
    """Apply a 1- or 2-qubit gate to the row index of `vec`.

    `vec` may be a statevector (2^n,) or any array whose first axis has
    length 2^n (e.g. a matrix, for building dense block unitaries).
    """
    k = _gate_arity(gate)
    _check_targets(num_qubits, targets, k)
    tail = vec.shape[1:]
    t = vec.reshape((2,) * num_qubits + ((-1,) if tail else ()))
    g = gate.reshape((2,) * (2 * k))
    out = np.tensordot(g, t, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot puts the gate's output axes first; move them home.
    out = np.moveaxis(out, list(range(k)), list(targets))
    return out.reshape(vec.shape)


def apply_to_density(rho: np.ndarray, gate: np.ndarray, targets: tuple[int, ...],
                     num_qubits: int) -> np.ndarray:
    """rho -> U rho U^dagger with U acting on `targets`."""
    out = apply_to_vector(rho, gate, targets, num_qubits)
    out = apply_to_vector(out.conj().T, gate, targets, num_qubits)
    return out.conj().T


def conjugate_observable(obs: np.ndarray, gate: np.ndarray,
                         targets: tuple[int, ...], num_qubits: int) -> np.ndarray:
    """obs -> U^dagger obs U (Heisenberg-picture update for one gate)."""
    return apply_to_density(obs, gate.conj().T, targets, num_qubits)


def apply_gate(state: PureState | MixedState, gate: np.ndarray,
               targets: tuple[int, ...] | list[int]) -> PureState | MixedState:
    """Apply a unitary gate to a pure or mixed state, returning a new state."""
    targets = tuple(targets)
    if isinstance(state, PureState):
        return PureState(
            state.num_qubits,
            apply_to_vector(state.amplitudes, gate, targets, state.num_qubits),
        )
    return MixedState(
        state.num_qubits,
        apply_to_density(state.rho, gate, targets, state.num_qubits),
    )


# --- partial trace, tensor, measurement ----------------------------------


def partial_trace(state: PureState | MixedState,
                  keep: tuple[int, ...] | list[int]) -> MixedState:
    """Reduced density matrix on `keep`, in the listed qubit order."""
    keep = tuple(keep)
    n = state.num_qubits
    if not keep:
        raise ValueError("keep list must be nonempty")
    _check_targets(n, keep, len(keep))
    k = len(keep)
    rest = [q for q in range(n) if q not in keep]
    if isinstance(state, PureState):
        t = state.amplitudes.reshape((2,) * n)
        t = np.transpose(t, list(keep) + rest)
        m = t.reshape(2**k, -1)
        return MixedState(k, m @ m.conj().T)
    t = state.rho.reshape((2,) * (2 * n))
    row = list(keep) + rest
    col = [n + q for q in row]
    t = np.transpose(t, row + col)
    t = t.reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k))
    return MixedState(k, np.einsum("aibi->ab", t))


def tensor(states: list[MixedState]) -> MixedState:
    """Kronecker product of density matrices, in list order."""
    if not states:
        raise ValueError("tensor of empty state list")
    rho = states[0].rho
    n = states[0].num_qubits
    for s in states[1:]:
        rho = np.kron(rho, s.rho)
        n += s.num_qubits
    return MixedState(n, rho)


def tensor_pure(states: list[PureState]) -> PureState:
    """Kronecker product of statevectors, in list order."""
    if not states:
        raise ValueError("tensor of empty state list")
    amps = states[0].amplitudes
    n = states[0].num_qubits
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
        n += s.num_qubits
    return PureState(n, amps)


def _z_signs(num_qubits: int, qubit: int) -> np.ndarray:
    idx = np.arange(2**num_qubits)
    bits = (idx >> (num_qubits - 1 - qubit)) & 1
    return 1.0 - 2.0 * bits


def expect_z(state: PureState | MixedState, qubit: int) -> float:
    """Pauli-Z expectation on one qubit; real, clamped to [-1, 1]."""
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    signs = _z_signs(n, qubit)
    if isinstance(state, PureState):
        val = np.sum(signs * np.abs(state.amplitudes) ** 2)
    else:
        diag = np.diagonal(state.rho)
        if np.max(np.abs(diag.imag)) > NORM_ATOL:
            raise ValueError("density matrix diagonal is not real")
        val = np.sum(signs * diag.real)
    return float(np.clip(np.real(val), -1.0, 1.0))


def z_observable(num_qubits: int, qubit: int) -> np.ndarray:
    """Dense Z observable on one qubit of a register (diagonal matrix)."""
    return np.diag(_z_signs(num_qubits, qubit)).astype(complex)
