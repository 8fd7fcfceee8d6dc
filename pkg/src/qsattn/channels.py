"""Single-qubit Kraus noise channels: bit-flip, depolarizing, amplitude damping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .states import IDENTITY_2, PAULI_X, PAULI_Y, PAULI_Z, MixedState, apply_to_vector

KIND_BITFLIP = "bitflip"
KIND_DEPOLARIZING = "depolarizing"
KIND_AMPDAMP = "ampdamp"

CHANNEL_KINDS = (KIND_BITFLIP, KIND_DEPOLARIZING, KIND_AMPDAMP)

TRACE_PRESERVATION_ATOL = 1e-9


@dataclass
class NoiseChannel:
    """A single-qubit channel given by its Kraus operator set."""

    kind: str
    level: float
    kraus: list[np.ndarray] = field(repr=False)

    def check(self) -> None:
        total = sum(k.conj().T @ k for k in self.kraus)
        if np.max(np.abs(total - np.eye(2))) > TRACE_PRESERVATION_ATOL:
            raise ValueError(
                f"{self.kind} channel at level {self.level} is not trace-preserving"
            )


def _check_level(level: float) -> float:
    level = float(level)
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"noise level must be in [0, 1], got {level}")
    return level


def bit_flip(p: float) -> NoiseChannel:
    """Flip the qubit with probability p."""
    p = _check_level(p)
    kraus = [np.sqrt(1 - p) * IDENTITY_2, np.sqrt(p) * PAULI_X]
    return NoiseChannel(KIND_BITFLIP, p, kraus)


def depolarizing(p: float) -> NoiseChannel:
    """Apply each Pauli with probability p/3, identity with 1-p.

    Under this parameterization a Z expectation contracts by (1 - 4p/3).
    """
    p = _check_level(p)
    kraus = [
        np.sqrt(1 - p) * IDENTITY_2,
        np.sqrt(p / 3) * PAULI_X,
        np.sqrt(p / 3) * PAULI_Y,
        np.sqrt(p / 3) * PAULI_Z,
    ]
    return NoiseChannel(KIND_DEPOLARIZING, p, kraus)


def amplitude_damping(gamma: float) -> NoiseChannel:
    """Decay |1> toward |0> with probability gamma."""
    gamma = _check_level(gamma)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return NoiseChannel(KIND_AMPDAMP, gamma, [k0, k1])


def make_channel(kind: str, level: float) -> NoiseChannel:
    if kind == KIND_BITFLIP:
        return bit_flip(level)
    if kind == KIND_DEPOLARIZING:
        return depolarizing(level)
    if kind == KIND_AMPDAMP:
        return amplitude_damping(level)
    raise ValueError(f"unknown channel kind {kind!r}")


def apply_channel_to_density(rho: np.ndarray, channel: NoiseChannel,
                             target: int, num_qubits: int) -> np.ndarray:
    channel.check()
    out = np.zeros_like(rho)
    for k in channel.kraus:
        term = apply_to_vector(rho, k, (target,), num_qubits)
        term = apply_to_vector(term.conj().T, k, (target,), num_qubits)
        out += term.conj().T
    return out


def apply_channel(state: MixedState, channel: NoiseChannel, target: int) -> MixedState:
    """rho -> sum_k K_k rho K_k^dagger with K_k acting on `target`."""
    if not 0 <= target < state.num_qubits:
        raise ValueError(f"target {target} out of range for {state.num_qubits} qubits")
    return MixedState(
        state.num_qubits,
        apply_channel_to_density(state.rho, channel, target, state.num_qubits),
    )
