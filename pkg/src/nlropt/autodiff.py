"""Gradients of circuit losses: parameter-shift rule plus a finite-difference oracle.

The shift rule gives the exact derivative of the expectation through each
rotation angle: df/dtheta_d = (f(theta + (pi/2) e_d) - f(theta - (pi/2) e_d)) / 2.
The squared-error loss gradient follows by the chain rule, per sample
-2 (y - yhat) * dyhat/dtheta_d, averaged over the batch.

Shifting parameter d only changes gates from its layer onward, so shifted
evaluations resume from a snapshot of the state before that layer rather than
re-running the whole circuit. finite_difference_gradient deliberately avoids
that machinery (full re-evaluation per shifted loss) so the two paths share as
little code as possible.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import _engine
from .ansatz import CircuitSpec, Sample, amplitude_encode, encode_batch
from .qsim import ShotConfig, StateVector


def gradient_norm(g: np.ndarray) -> float:
    """Euclidean norm of a gradient vector."""
    return float(np.linalg.norm(np.asarray(g, dtype=np.float64)))


def _check_theta(spec: CircuitSpec, theta: np.ndarray) -> np.ndarray:
    th = np.asarray(theta, dtype=np.float64).ravel()
    if th.size != spec.parameter_count:
        raise ValueError(
            f"parameter vector has length {th.size}, spec needs {spec.parameter_count}"
        )
    return th


def _layer_snapshots(
    spec: CircuitSpec, theta: np.ndarray, inputs: np.ndarray
) -> list[np.ndarray]:
    """States before each layer; snaps[l] feeds layer l, snaps[layers] is final."""
    n, layers = spec.n_qubits, spec.layers
    per_layer = 3 * n
    states = np.ascontiguousarray(inputs, dtype=np.complex128).copy()
    snaps = [states.copy()]
    for layer in range(layers):
        block = theta[per_layer * layer : per_layer * (layer + 1)]
        _engine.evolve_states(
            states, np.broadcast_to(block, (states.shape[0], per_layer)), n, 1
        )
        snaps.append(states.copy())
    return snaps


def _shifted_expectations(
    spec: CircuitSpec, theta: np.ndarray, snaps: list[np.ndarray], shift: float
) -> np.ndarray:
    """(P, 2, B) array of <Z_0> at theta +/- shift*e_p for every parameter p."""
    n, layers = spec.n_qubits, spec.layers
    per_layer = 3 * n
    B = snaps[0].shape[0]
    out = np.empty((spec.parameter_count, 2, B))
    for layer in range(layers):
        tail = theta[per_layer * layer :]
        variants = np.tile(tail, (2 * per_layer, 1))
        for j in range(per_layer):
            variants[2 * j, j] += shift
            variants[2 * j + 1, j] -= shift
        rows_theta = np.repeat(variants, B, axis=0)
        rows_state = np.tile(snaps[layer], (2 * per_layer, 1))
        exps = _engine.forward_expectations(
            rows_theta, rows_state, n, layers - layer
        ).reshape(2 * per_layer, B)
        base = per_layer * layer
        out[base : base + per_layer, 0] = exps[0::2]
        out[base : base + per_layer, 1] = exps[1::2]
    return out


def _sample_binomial(exact: np.ndarray, shots: int, seed_path: list[int]) -> np.ndarray:
    """Finite-shot estimates from a stream derived from the given seed path."""
    rng = np.random.default_rng(np.random.SeedSequence(seed_path))
    p_plus = np.clip((1.0 + exact) / 2.0, 0.0, 1.0)
    counts = rng.binomial(shots, p_plus)
    return (2.0 * counts - shots) / shots


def parameter_shift_gradient(
    spec: CircuitSpec,
    theta: np.ndarray,
    batch: Sequence[Sample],
    shots: ShotConfig | None = None,
) -> np.ndarray:
    """Gradient of the mean squared-error batch loss via the shift rule.

    Shot mode draws every evaluation from its own stream derived from
    (rng_seed, parameter, shift direction), with the unshifted predictions on
    a separate stream, so the estimator is unbiased and independent of
    evaluation order.
    """
    th = _check_theta(spec, theta)
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    inputs = encode_batch(batch, spec.n_qubits)
    labels = np.array([s.label for s in batch], dtype=np.float64)
    snaps = _layer_snapshots(spec, th, inputs)
    preds = _engine.expectations_z0(snaps[-1])
    fpm = _shifted_expectations(spec, th, snaps, np.pi / 2)
    if shots is not None:
        P = spec.parameter_count
        preds = _sample_binomial(preds, shots.shots, [shots.rng_seed, 2 * P])
        for p in range(P):
            fpm[p, 0] = _sample_binomial(fpm[p, 0], shots.shots, [shots.rng_seed, 2 * p])
            fpm[p, 1] = _sample_binomial(fpm[p, 1], shots.shots, [shots.rng_seed, 2 * p + 1])
    dpred = 0.5 * (fpm[:, 0, :] - fpm[:, 1, :])
    residual = labels - preds
    return (-2.0 / len(batch)) * (dpred @ residual)


def expectation_gradient(
    spec: CircuitSpec, theta: np.ndarray, sample: Sample | StateVector
) -> np.ndarray:
    """Raw d<Z_0>/dtheta for one input, exact expectations only."""
    th = _check_theta(spec, theta)
    if isinstance(sample, StateVector):
        state = sample
    else:
        state = amplitude_encode(sample.features, spec.n_qubits)
    snaps = _layer_snapshots(spec, th, state.amplitudes[None, :])
    fpm = _shifted_expectations(spec, th, snaps, np.pi / 2)
    return 0.5 * (fpm[:, 0, 0] - fpm[:, 1, 0])


def finite_difference_gradient(
    spec: CircuitSpec, theta: np.ndarray, batch: Sequence[Sample], h: float
) -> np.ndarray:
    """Central differences of the exact batch loss; the verification oracle.

    Every shifted loss is evaluated by a full independent forward pass.
    """
    if not 0.0 < h < 0.1:
        raise ValueError(f"h must satisfy 0 < h < 0.1, got {h}")
    th = _check_theta(spec, theta)
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    P = spec.parameter_count
    inputs = encode_batch(batch, spec.n_qubits)
    labels = np.array([s.label for s in batch], dtype=np.float64)
    B = len(batch)
    variants = np.tile(th, (2 * P, 1))
    for d in range(P):
        variants[2 * d, d] += h
        variants[2 * d + 1, d] -= h
    rows_theta = np.repeat(variants, B, axis=0)
    rows_state = np.tile(inputs, (2 * P, 1))
    preds = _engine.forward_expectations(
        rows_theta, rows_state, spec.n_qubits, spec.layers
    ).reshape(2 * P, B)
    losses = np.mean((labels[None, :] - preds) ** 2, axis=1)
    return (losses[0::2] - losses[1::2]) / (2.0 * h)
