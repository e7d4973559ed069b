"""Shared dense-matrix oracles.

Everything here is built from explicit 2^n x 2^n matrices via np.kron, fully
independent of the package's reshape/tensordot gate application, so agreement
is meaningful. Qubit 0 is the most significant bit of the basis index.
"""
from __future__ import annotations

import numpy as np


def rx_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]], dtype=complex
    )


ROTATION_MATRIX = {"x": rx_matrix, "y": ry_matrix, "z": rz_matrix}


def dense_1q(n_qubits: int, qubit: int, mat: np.ndarray) -> np.ndarray:
    """I ⊗ ... ⊗ mat ⊗ ... ⊗ I with mat at tensor slot `qubit` (MSB first)."""
    full = np.eye(1, dtype=complex)
    for q in range(n_qubits):
        full = np.kron(full, mat if q == qubit else np.eye(2, dtype=complex))
    return full


def dense_cnot(n_qubits: int, control: int, target: int) -> np.ndarray:
    """Permutation matrix: flip target bit wherever the control bit is set."""
    dim = 2**n_qubits
    mat = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        if (k >> (n_qubits - 1 - control)) & 1:
            kk = k ^ (1 << (n_qubits - 1 - target))
        else:
            kk = k
        mat[kk, k] = 1.0
    return mat


def dense_circuit_unitary(n_qubits: int, layers: int, theta: np.ndarray) -> np.ndarray:
    """Unitary of the layered ansatz by literal matrix products.

    Per layer: Rx on qubits 0..n-1, then Ry on all, then Rz on all (parameters
    laid out axis-major within the layer), then the CNOT chain q -> q+1.
    """
    dim = 2**n_qubits
    unitary = np.eye(dim, dtype=complex)
    p = 0
    for _ in range(layers):
        for axis in ("x", "y", "z"):
            for q in range(n_qubits):
                gate = dense_1q(n_qubits, q, ROTATION_MATRIX[axis](theta[p]))
                unitary = gate @ unitary
                p += 1
        for q in range(n_qubits - 1):
            unitary = dense_cnot(n_qubits, q, q + 1) @ unitary
    return unitary


def dense_expectation_z(n_qubits: int, qubit: int, amps: np.ndarray) -> float:
    signs = np.array(
        [1.0 if not (k >> (n_qubits - 1 - qubit)) & 1 else -1.0 for k in range(2**n_qubits)]
    )
    return float(np.real(np.sum(signs * np.abs(amps) ** 2)))
