"""Exact dense state-vector simulation of small qubit registers.

Conventions, fixed once and used everywhere:
  - qubit 0 is the most significant bit of the basis index, so basis index k
    carries qubit q in bit position (n_qubits - 1 - q);
  - rotations are half-angle exponentials R_a(theta) = exp(-i*(theta/2)*P_a)
    with the global phase retained;
  - shot sampling is a per-observable binomial on the Z outcome, statistically
    identical to M independent +/-1 draws.

All operations are pure: the input state is never modified.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 14


@dataclass(frozen=True)
class StateVector:
    """Amplitudes of an n-qubit register in the computational basis."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError(
                f"amplitude array has shape {self.amplitudes.shape}, "
                f"expected ({2**self.n_qubits},)"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class Observable:
    """Single-qubit Pauli-Z readout; no other observable kind is in scope."""

    qubit_index: int
    kind: str = "Z"

    def __post_init__(self) -> None:
        if self.kind != "Z":
            raise ValueError(f"only Pauli-Z observables are supported, got {self.kind!r}")
        if self.qubit_index < 0:
            raise IndexError(f"qubit_index must be non-negative, got {self.qubit_index}")


@dataclass(frozen=True)
class ShotConfig:
    shots: int
    rng_seed: int

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")


def zero_state(n_qubits: int) -> StateVector:
    """|0...0>: amplitude 1 at basis index 0."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """2x2 matrix of R_a(angle) = exp(-i*(angle/2)*P_a)."""
    half = 0.5 * angle
    c, s = np.cos(half), np.sin(half)
    a = axis.lower()
    if a == "x":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if a == "y":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if a == "z":
        return np.array([[c - 1j * s, 0.0], [0.0, c + 1j * s]], dtype=np.complex128)
    raise ValueError(f"axis must be one of x, y, z, got {axis!r}")


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits}-qubit state")


def apply_rotation(state: StateVector, qubit: int, axis: str, angle: float) -> StateVector:
    """Apply R_axis(angle) on one qubit; returns a new state, norm preserved."""
    _check_qubit(state, qubit)
    if not np.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle}")
    mat = rotation_matrix(axis, angle)
    n = state.n_qubits
    arr = state.amplitudes.reshape((2,) * n)
    # contract the gate into tensor slot `qubit`; tensordot puts that slot first
    out = np.tensordot(mat, arr, axes=([1], [qubit]))
    out = np.moveaxis(out, 0, qubit)
    return StateVector(n, np.ascontiguousarray(out).reshape(-1))


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    """Flip the target bit on every amplitude whose control bit is set."""
    if control == target:
        raise ValueError(f"control and target must differ, both are {control}")
    _check_qubit(state, control)
    _check_qubit(state, target)
    n = state.n_qubits
    arr = state.amplitudes.reshape((2,) * n)
    view = np.moveaxis(arr, (control, target), (0, 1))
    out = view.copy()
    out[1, 0] = view[1, 1]
    out[1, 1] = view[1, 0]
    out = np.moveaxis(out, (0, 1), (control, target))
    return StateVector(n, np.ascontiguousarray(out).reshape(-1))


def expectation_z(state: StateVector, obs: Observable) -> float:
    """<Z> on one qubit: signed sum of basis probabilities."""
    _check_qubit(state, obs.qubit_index)
    probs = np.abs(state.amplitudes) ** 2
    split = probs.reshape(2**obs.qubit_index, 2, -1)
    return float(split[:, 0, :].sum() - split[:, 1, :].sum())


def sample_expectation(state: StateVector, obs: Observable, cfg: ShotConfig) -> float:
    """Mean of M i.i.d. +/-1 measurement outcomes, P(+1) = (1 + <Z>)/2.

    Drawn as a single binomial count, which is distribution-identical.
    Deterministic given cfg.rng_seed.
    """
    z = expectation_z(state, obs)
    p_plus = min(max((1.0 + z) / 2.0, 0.0), 1.0)
    rng = np.random.default_rng(cfg.rng_seed)
    plus = int(rng.binomial(cfg.shots, p_plus))
    return (2.0 * plus - cfg.shots) / cfg.shots
