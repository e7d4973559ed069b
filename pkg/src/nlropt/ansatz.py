"""Layered hardware-style ansatz: encoding, prediction, loss, accuracy.

The circuit applies, per layer, trainable rotations on every qubit followed by
a linear CNOT chain (control q -> target q+1). Parameters are laid out
axis-major within each layer: layer l occupies indices [3*n*l, 3*n*(l+1)) as
all Rx angles (qubit ascending), then all Ry, then all Rz. The model's
prediction is the Pauli-Z expectation on qubit 0 of the output state, so
predictions live in [-1, 1] and pair with labels in {-1, +1} under a squared
error loss.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _engine
from .qsim import MAX_QUBITS, Observable, ShotConfig, StateVector, expectation_z


@dataclass(frozen=True)
class CircuitSpec:
    """Structure of the layered ansatz; all trainable angles live elsewhere."""

    n_qubits: int
    layers: int

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")

    @property
    def parameter_count(self) -> int:
        return 3 * self.n_qubits * self.layers

    @property
    def rotation_axes(self) -> tuple[str, str, str]:
        return ("x", "y", "z")

    @property
    def entangler(self) -> tuple[tuple[int, int], ...]:
        """Nearest-neighbor CNOT pairs applied after each layer's rotations."""
        return tuple((q, q + 1) for q in range(self.n_qubits - 1))


@dataclass(frozen=True)
class Sample:
    """One classification example: feature vector plus a label in {-1, +1}."""

    features: np.ndarray
    label: int

    def __post_init__(self) -> None:
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label}")


def build_ansatz(n_qubits: int, layers: int) -> CircuitSpec:
    """Circuit with 3*n_qubits*layers parameters and a per-layer CNOT chain."""
    if n_qubits < 2:
        raise ValueError(f"n_qubits must be >= 2 (entangler undefined), got {n_qubits}")
    return CircuitSpec(n_qubits=n_qubits, layers=layers)


def amplitude_encode(features: np.ndarray, n_qubits: int) -> StateVector:
    """Normalized features as amplitudes, zero-padded to 2**n_qubits."""
    feats = np.asarray(features, dtype=np.float64).ravel()
    dim = 2**n_qubits
    if not 1 <= feats.size <= dim:
        raise ValueError(f"feature count {feats.size} not in [1, {dim}] for {n_qubits} qubits")
    norm = float(np.linalg.norm(feats))
    if norm == 0.0:
        raise ValueError("cannot amplitude-encode an all-zero feature vector")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[: feats.size] = feats / norm
    return StateVector(n_qubits, amps)


def _check_theta(spec: CircuitSpec, theta: np.ndarray) -> np.ndarray:
    th = np.asarray(theta, dtype=np.float64).ravel()
    if th.size != spec.parameter_count:
        raise ValueError(
            f"parameter vector has length {th.size}, spec needs {spec.parameter_count}"
        )
    if not np.all(np.isfinite(th)):
        raise ValueError("parameter vector contains non-finite values")
    return th


def run_circuit(spec: CircuitSpec, theta: np.ndarray, input_state: StateVector) -> StateVector:
    """Apply every layer (rotations, then entangler) to the input state."""
    th = _check_theta(spec, theta)
    if input_state.n_qubits != spec.n_qubits:
        raise ValueError(
            f"input state has {input_state.n_qubits} qubits, spec has {spec.n_qubits}"
        )
    work = input_state.amplitudes[None, :].copy()
    _engine.evolve_states(work, th[None, :], spec.n_qubits, spec.layers)
    return StateVector(spec.n_qubits, work[0])


def encode_batch(samples: Sequence[Sample], n_qubits: int) -> np.ndarray:
    """(B, 2**n) matrix of encoded inputs, one row per sample."""
    return np.stack([amplitude_encode(s.features, n_qubits).amplitudes for s in samples])


def batch_expectations(spec: CircuitSpec, theta: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Exact <Z_0> for every encoded input row under one parameter vector."""
    th = _check_theta(spec, theta)
    thetas = np.broadcast_to(th, (inputs.shape[0], th.size))
    return _engine.forward_expectations(thetas, inputs, spec.n_qubits, spec.layers)


def predict(
    spec: CircuitSpec,
    theta: np.ndarray,
    sample: Sample,
    shots: ShotConfig | None = None,
) -> float:
    """Model output for one sample: <Z_0>, exact or finite-shot sampled."""
    state = run_circuit(spec, theta, amplitude_encode(sample.features, spec.n_qubits))
    if shots is None:
        return expectation_z(state, Observable(0))
    from .qsim import sample_expectation

    return sample_expectation(state, Observable(0), shots)


def _sampled_from_exact(exact: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Finite-shot estimates of a vector of exact expectations."""
    p_plus = np.clip((1.0 + exact) / 2.0, 0.0, 1.0)
    counts = rng.binomial(shots, p_plus)
    return (2.0 * counts - shots) / shots


def batch_loss(
    spec: CircuitSpec,
    theta: np.ndarray,
    batch: Sequence[Sample],
    shots: ShotConfig | None = None,
) -> float:
    """Mean squared error (y - yhat)^2 over the batch.

    Shot mode draws each sample's estimate from a stream derived from
    (rng_seed, sample index), so the value is independent of evaluation order.
    """
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    inputs = encode_batch(batch, spec.n_qubits)
    exact = batch_expectations(spec, theta, inputs)
    if shots is None:
        preds = exact
    else:
        preds = np.empty(len(batch))
        for i, z in enumerate(exact):
            rng = np.random.default_rng(np.random.SeedSequence([shots.rng_seed, i]))
            preds[i] = _sampled_from_exact(np.array([z]), shots.shots, rng)[0]
    labels = np.array([s.label for s in batch], dtype=np.float64)
    return float(np.mean((labels - preds) ** 2))


def accuracy(spec: CircuitSpec, theta: np.ndarray, dataset) -> float:
    """Percent of samples whose prediction sign matches the label.

    sign(0) counts as +1. Always uses exact expectations: this is a model
    quality measure, not part of the training loop.
    """
    samples = list(getattr(dataset, "samples", dataset))
    if len(samples) == 0:
        raise ValueError("dataset must be non-empty")
    inputs = encode_batch(samples, spec.n_qubits)
    preds = batch_expectations(spec, theta, inputs)
    labels = np.array([s.label for s in samples])
    predicted = np.where(preds >= 0.0, 1, -1)
    return float(np.mean(predicted == labels) * 100.0)
