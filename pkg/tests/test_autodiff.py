import numpy as np
import pytest

from nlropt.ansatz import CircuitSpec, Sample, amplitude_encode, batch_loss
from nlropt.autodiff import (
    expectation_gradient,
    finite_difference_gradient,
    gradient_norm,
    parameter_shift_gradient,
)
from nlropt.qsim import ShotConfig

from conftest import dense_circuit_unitary, dense_expectation_z


def random_batch(rng, n_qubits, size):
    batch = []
    for _ in range(size):
        f = rng.normal(size=2**n_qubits)
        batch.append(Sample(features=f, label=int(rng.choice([-1, 1]))))
    return batch


def test_single_qubit_ry_expectation_derivative():
    spec = CircuitSpec(n_qubits=1, layers=1)
    theta = np.array([0.0, np.pi / 3, 0.0])
    state = amplitude_encode(np.array([1.0]), n_qubits=1)
    grad = expectation_gradient(spec, theta, state)
    assert abs(grad[1] - (-np.sin(np.pi / 3))) < 1e-12
    assert abs(grad[0]) < 1e-12


def test_rz_component_is_exactly_zero_on_diagonal_state():
    # with all Rx/Ry angles zero the state stays |0>, so Rz only adds phase
    spec = CircuitSpec(n_qubits=2, layers=1)
    theta = np.zeros(6)
    theta[4] = 0.7
    theta[5] = -0.3
    state = amplitude_encode(np.array([1.0]), n_qubits=2)
    grad = expectation_gradient(spec, theta, state)
    assert grad[4] == 0.0
    assert grad[5] == 0.0


def test_expectation_gradient_matches_dense_oracle():
    rng = np.random.default_rng(7)
    for n_qubits, layers in [(1, 1), (2, 2), (3, 2)]:
        spec = CircuitSpec(n_qubits=n_qubits, layers=layers)
        theta = rng.uniform(-np.pi, np.pi, size=spec.parameter_count)
        features = rng.normal(size=2**n_qubits)
        state = amplitude_encode(features, n_qubits)
        grad = expectation_gradient(spec, theta, state)
        h = 1e-6
        for d in range(spec.parameter_count):
            tp, tm = theta.copy(), theta.copy()
            tp[d] += h
            tm[d] -= h
            fp = dense_expectation_z(
                n_qubits, 0, dense_circuit_unitary(n_qubits, layers, tp) @ state.amplitudes
            )
            fm = dense_expectation_z(
                n_qubits, 0, dense_circuit_unitary(n_qubits, layers, tm) @ state.amplitudes
            )
            assert abs(grad[d] - (fp - fm) / (2 * h)) < 1e-8


def test_parameter_shift_matches_finite_difference():
    rng = np.random.default_rng(11)
    for n_qubits, layers, size in [(2, 1, 3), (3, 2, 4), (4, 3, 5)]:
        spec = CircuitSpec(n_qubits=n_qubits, layers=layers)
        theta = rng.uniform(-np.pi, np.pi, size=spec.parameter_count)
        batch = random_batch(rng, n_qubits, size)
        ps = parameter_shift_gradient(spec, theta, batch)
        fd = finite_difference_gradient(spec, theta, batch, h=1e-5)
        assert np.max(np.abs(ps - fd)) < 1e-6


def test_gradient_zero_at_perfect_prediction():
    # theta = 0 leaves |0..0> unchanged, so the prediction is exactly +1
    spec = CircuitSpec(n_qubits=2, layers=2)
    theta = np.zeros(spec.parameter_count)
    batch = [Sample(features=np.array([1.0, 0.0, 0.0, 0.0]), label=1)]
    grad = parameter_shift_gradient(spec, theta, batch)
    assert np.all(grad == 0.0)


def test_finite_difference_descends_loss():
    rng = np.random.default_rng(3)
    spec = CircuitSpec(n_qubits=2, layers=1)
    theta = rng.uniform(-1, 1, size=spec.parameter_count)
    batch = random_batch(rng, 2, 4)
    g = finite_difference_gradient(spec, theta, batch, h=1e-5)
    before = batch_loss(spec, theta, batch)
    after = batch_loss(spec, theta - 1e-3 * g, batch)
    assert after <= before


def test_finite_difference_step_validation():
    spec = CircuitSpec(n_qubits=2, layers=1)
    theta = np.zeros(spec.parameter_count)
    batch = [Sample(features=np.array([1.0, 0.0, 0.0, 0.0]), label=1)]
    for h in [0.2, 0.1, 0.0, -1e-3]:
        with pytest.raises(ValueError):
            finite_difference_gradient(spec, theta, batch, h=h)


def test_empty_batch_rejected():
    spec = CircuitSpec(n_qubits=2, layers=1)
    theta = np.zeros(spec.parameter_count)
    with pytest.raises(ValueError):
        parameter_shift_gradient(spec, theta, [])
    with pytest.raises(ValueError):
        finite_difference_gradient(spec, theta, [], h=1e-5)


def test_wrong_parameter_count_rejected():
    spec = CircuitSpec(n_qubits=2, layers=1)
    batch = [Sample(features=np.array([1.0, 0.0, 0.0, 0.0]), label=1)]
    with pytest.raises(ValueError):
        parameter_shift_gradient(spec, np.zeros(5), batch)


def test_shot_gradient_deterministic_and_distinct_across_seeds():
    rng = np.random.default_rng(5)
    spec = CircuitSpec(n_qubits=2, layers=1)
    theta = rng.uniform(-np.pi, np.pi, size=spec.parameter_count)
    batch = random_batch(rng, 2, 3)
    g1 = parameter_shift_gradient(spec, theta, batch, shots=ShotConfig(500, 42))
    g2 = parameter_shift_gradient(spec, theta, batch, shots=ShotConfig(500, 42))
    g3 = parameter_shift_gradient(spec, theta, batch, shots=ShotConfig(500, 43))
    assert np.array_equal(g1, g2)
    assert not np.array_equal(g1, g3)


def test_shot_gradient_is_unbiased():
    rng = np.random.default_rng(17)
    spec = CircuitSpec(n_qubits=2, layers=1)
    theta = rng.uniform(-np.pi, np.pi, size=spec.parameter_count)
    batch = random_batch(rng, 2, 2)
    exact = parameter_shift_gradient(spec, theta, batch)
    n_seeds = 200
    draws = np.array(
        [
            parameter_shift_gradient(spec, theta, batch, shots=ShotConfig(2000, s))
            for s in range(n_seeds)
        ]
    )
    mean = draws.mean(axis=0)
    stderr = draws.std(axis=0, ddof=1) / np.sqrt(n_seeds)
    assert np.all(np.abs(mean - exact) <= 4 * stderr + 1e-12)


def test_gradient_norm():
    assert gradient_norm(np.array([3.0, 4.0])) == 5.0
    assert gradient_norm(np.zeros(7)) == 0.0
