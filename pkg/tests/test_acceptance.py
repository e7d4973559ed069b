"""End-to-end acceptance checks, one test per shipped claim.

Each test prints a single `criterion NN <slug>: PASS/FAIL (...)` line with the
measured numbers (visible with -s or -rP; the test outcome itself mirrors it).
Training runs are cached per config digest and shared across criteria, so the
whole file costs one pass over the distinct configurations.
"""
import hashlib
from pathlib import Path

import numpy as np
import pytest

from nlropt.ansatz import Sample, batch_loss, build_ansatz
from nlropt.autodiff import parameter_shift_gradient
from nlropt.harness import ExperimentConfig, execute
from nlropt.harness.cli import main
from nlropt.landscape import (
    NoisyObjective,
    PlateauObjective,
    PlateauSurface,
    estimate_diffusion,
    measure_exit_time,
    post_escape_convergence,
    sample_plateau_start,
    violation_rate_vs_gradient,
)
from nlropt.optim import (
    ArmijoBacktracking,
    Nlr,
    NlrConfig,
    guideline_eta_prime,
)
from nlropt.qsim import (
    Observable,
    ShotConfig,
    StateVector,
    apply_cnot,
    apply_rotation,
    expectation_z,
    rotation_matrix,
    sample_expectation,
    zero_state,
)


def report(number: int, slug: str, ok: bool, detail: str) -> None:
    print(f"criterion {number:02d} {slug}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {number:02d} {slug}: {detail}"


# ---------------------------------------------------------------------------
# shared training runs (criteria 3-6): cached by config digest


_RUN_CACHE: dict[str, object] = {}


def training_run(opt: str, seed: int, **overrides):
    cfg = ExperimentConfig(opt=opt, seed=seed, shots=0, **overrides)
    key = cfg.digest()
    if key not in _RUN_CACHE:
        _RUN_CACHE[key] = execute(cfg)
    return _RUN_CACHE[key]


def mean_final_loss(opt: str, seeds, **overrides) -> float:
    return float(np.mean([training_run(opt, s, **overrides).final_loss for s in seeds]))


def mean_accuracy(opt: str, seeds, **overrides) -> float:
    return float(
        np.mean([training_run(opt, s, **overrides).accuracy_percent for s in seeds])
    )


# ---------------------------------------------------------------------------
# criterion 1: simulator vs dense matrix-product oracle


def dense_rotation(n: int, qubit: int, axis: str, angle: float) -> np.ndarray:
    gate = rotation_matrix(axis, angle)
    full = np.array([[1.0]], dtype=np.complex128)
    for q in range(n):
        full = np.kron(full, gate if q == qubit else np.eye(2))
    return full


def dense_cnot(n: int, control: int, target: int) -> np.ndarray:
    dim = 2**n
    full = np.zeros((dim, dim))
    for k in range(dim):
        if (k >> (n - 1 - control)) & 1:
            full[k ^ (1 << (n - 1 - target)), k] = 1.0
        else:
            full[k, k] = 1.0
    return full


def random_gate(rng: np.random.Generator, n: int):
    if n >= 2 and rng.random() < 0.3:
        control, target = rng.choice(n, size=2, replace=False)
        return ("cnot", int(control), int(target))
    return (
        str(rng.choice(["x", "y", "z"])),
        int(rng.integers(n)),
        float(rng.uniform(-np.pi, np.pi)),
    )


def test_criterion_01_simulator_matches_dense_oracle():
    rng = np.random.default_rng(20260816)
    max_err = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 4))
        state = zero_state(n)
        vec = np.zeros(2**n, dtype=np.complex128)
        vec[0] = 1.0
        for _ in range(int(rng.integers(5, 26))):
            gate = random_gate(rng, n)
            if gate[0] == "cnot":
                state = apply_cnot(state, gate[1], gate[2])
                vec = dense_cnot(n, gate[1], gate[2]) @ vec
            else:
                axis, qubit, angle = gate
                state = apply_rotation(state, qubit, axis, angle)
                vec = dense_rotation(n, qubit, axis, angle) @ vec
        max_err = max(max_err, float(np.max(np.abs(state.amplitudes - vec))))

    state = zero_state(3)
    for _ in range(10_000):
        gate = random_gate(rng, 3)
        if gate[0] == "cnot":
            state = apply_cnot(state, gate[1], gate[2])
        else:
            state = apply_rotation(state, gate[1], gate[0], gate[2])
    drift = abs(state.norm - 1.0)
    report(
        1,
        "simulator-oracle",
        max_err < 1e-12 and drift < 1e-10,
        f"max amplitude error {max_err:.2e}, norm drift {drift:.2e} over 1e4 gates",
    )


# ---------------------------------------------------------------------------
# criterion 2: parameter-shift vs central finite differences


def test_criterion_02_parameter_shift_matches_finite_differences():
    rng = np.random.default_rng(7)
    spec = build_ansatz(4, 3)
    h = 1e-5
    worst = 0.0
    for _ in range(100):
        theta = rng.uniform(-np.pi, np.pi, spec.parameter_count)
        batch = []
        for _ in range(int(rng.integers(2, 5))):
            features = rng.normal(size=16)
            features /= np.linalg.norm(features)
            batch.append(Sample(features=features, label=int(rng.choice([-1, 1]))))
        shift = parameter_shift_gradient(spec, theta, batch)
        fd = np.empty_like(shift)
        for i in range(theta.size):
            up, down = theta.copy(), theta.copy()
            up[i] += h
            down[i] -= h
            fd[i] = (batch_loss(spec, up, batch) - batch_loss(spec, down, batch)) / (
                2 * h
            )
        worst = max(worst, float(np.max(np.abs(shift - fd))))
    report(2, "gradient-fidelity", worst < 1e-6, f"max component error {worst:.2e}")


# ---------------------------------------------------------------------------
# criteria 3-5: training orderings at the calibrated defaults


SEEDS = range(5)


def test_criterion_03_headline_convergence_ordering():
    nlr_loss = mean_final_loss("nlr", SEEDS)
    sgd_loss = mean_final_loss("sgd", SEEDS)
    nlr_acc = mean_accuracy("nlr", SEEDS)
    sgd_acc = mean_accuracy("sgd", SEEDS)
    ok = nlr_loss <= 0.5 * sgd_loss and nlr_acc >= sgd_acc
    report(
        3,
        "headline-ordering",
        ok,
        f"final loss nlr {nlr_loss:.4f} vs sgd {sgd_loss:.4f} "
        f"(ratio {nlr_loss / sgd_loss:.3f}, need <= 0.5); "
        f"accuracy nlr {nlr_acc:.2f}% vs sgd {sgd_acc:.2f}%",
    )


def test_criterion_04_optimizer_ranking():
    losses = {
        opt: mean_final_loss(opt, SEEDS)
        for opt in ("nlr", "sgd", "momentum", "rmsprop", "adam")
    }
    others = {k: v for k, v in losses.items() if k != "nlr"}
    ok = losses["nlr"] < min(others.values())
    ranking = " < ".join(f"{k}:{v:.4f}" for k, v in sorted(losses.items(), key=lambda kv: kv[1]))
    report(4, "optimizer-ranking", ok, ranking)


def test_criterion_05_ablation_ordering():
    nlr = mean_final_loss("nlr", SEEDS)
    baselines = {
        opt: mean_final_loss(opt, SEEDS)
        for opt in ("perturb_gauss", "perturb_uniform", "reinit")
    }
    ok = all(nlr < v for v in baselines.values())
    detail = f"nlr {nlr:.4f} vs " + ", ".join(
        f"{k} {v:.4f}" for k, v in baselines.items()
    )
    report(5, "ablation-ordering", ok, detail)


def test_criterion_06_eta_prime_sweep_shape():
    values = (0.005, 0.01, 0.02, 0.05, 0.1)
    means = {
        ep: mean_final_loss("nlr", range(3), eta_prime=ep) for ep in values
    }
    best = min(means, key=means.get)
    worst = max(means, key=means.get)
    ok = best <= 0.05 and worst == 0.1
    detail = ", ".join(f"{ep}:{means[ep]:.4f}" for ep in values) + (
        f"; best at {best}, worst at {worst}"
    )
    report(6, "eta-prime-sweep", ok, detail)


# ---------------------------------------------------------------------------
# criteria 7-9: diffusion theory on the synthetic plateau


def test_criterion_07_diffusion_ordering():
    surface = PlateauSurface()
    make_obj = lambda rng: NoisyObjective(PlateauObjective(surface), 1.0, rng)
    sampler = lambda rng: sample_plateau_start(surface, rng)
    nlr = estimate_diffusion(
        lambda rng: Nlr(NlrConfig(eta=0.05, eta_prime=0.1)),
        make_obj,
        sampler,
        200,
        500,
        seed=11,
    )
    backtrack = estimate_diffusion(
        lambda rng: ArmijoBacktracking(eta=0.05), make_obj, sampler, 200, 500, seed=11
    )
    ok = (
        nlr.d_hat - nlr.confidence_halfwidth
        > backtrack.d_hat + backtrack.confidence_halfwidth
    )
    report(
        7,
        "diffusion-ordering",
        ok,
        f"D(nlr) {nlr.d_hat:.2e} +/- {nlr.confidence_halfwidth:.1e} vs "
        f"D(backtrack) {backtrack.d_hat:.2e} +/- {backtrack.confidence_halfwidth:.1e}",
    )


def test_criterion_08_exit_time_scaling():
    surface = PlateauSurface()
    make_obj = lambda rng: NoisyObjective(PlateauObjective(surface), 1.5, rng)
    make_opt = lambda rng: Nlr(NlrConfig(eta=0.2, eta_prime=0.4))
    sampler = lambda rng: sample_plateau_start(surface, rng)
    diffusion = estimate_diffusion(make_opt, make_obj, sampler, 100, 200, seed=3)
    measured = {}
    checks = []
    for radius in (0.5, 1.0):
        outcome = measure_exit_time(
            make_opt, make_obj, np.array([1.0, 1.0]), radius, 100, 50_000, seed=3
        )
        predicted = radius**2 / (2 * diffusion.d_hat)
        measured[radius] = outcome
        checks.append(
            predicted / 3 <= outcome.mean_exit_step <= predicted * 3
            and outcome.censoring_fraction < 0.2
        )
    monotone = measured[0.5].mean_exit_step < measured[1.0].mean_exit_step
    ok = all(checks) and monotone
    detail = "; ".join(
        f"R={r}: mean {measured[r].mean_exit_step:.1f} vs predicted "
        f"{r ** 2 / (2 * diffusion.d_hat):.1f}, censored "
        f"{measured[r].censoring_fraction:.0%}"
        for r in (0.5, 1.0)
    )
    report(8, "exit-time-scaling", ok, detail)


def test_criterion_09_post_escape_behavior():
    sigma = 0.5
    table = violation_rate_vs_gradient(
        lambda rng: Nlr(NlrConfig(eta=0.05, eta_prime=0.1)),
        [10 * sigma],
        sigma=sigma,
        trials_per_scale=4000,
        seed=2,
    )
    p_hat = table[0][1]
    kwargs = dict(dimension=10, curvature=0.5, steps=2000, n_seeds=50, seed=1)
    cfg = NlrConfig(eta=0.05, eta_prime=0.1)
    high = post_escape_convergence(cfg, sigma=sigma, **kwargs)
    low = post_escape_convergence(cfg, sigma=sigma / np.sqrt(2), **kwargs)
    floor_ratio = high.floor_estimate / low.floor_estimate
    ok = p_hat < 0.05 and abs(floor_ratio - 2.0) / 2.0 < 0.30
    report(
        9,
        "post-escape",
        ok,
        f"violation rate {p_hat:.3f} at ||grad||=10*sigma (need < 0.05); "
        f"floor ratio {floor_ratio:.2f} for sigma^2 halved (need 2.0 +/- 30%)",
    )


# ---------------------------------------------------------------------------
# criterion 10: reversal-rate guideline formula


def test_criterion_10_guideline_formula():
    exact = abs(guideline_eta_prime(0.01, 0.0, 5, 5.0) - 0.01)
    hand = abs(guideline_eta_prime(0.01, 0.05, 5, 5.0) - 0.01 * (1 + np.log(1.25)))
    ok = exact == 0.0 and hand < 1e-12
    report(
        10,
        "guideline-formula",
        ok,
        f"nu=0 returns eta exactly (err {exact:.1e}); hand-computed example err {hand:.1e}",
    )


# ---------------------------------------------------------------------------
# criterion 11: byte-identical reruns


TINY_FLAGS = (
    "--qubits", "3", "--layers", "2", "--dimension", "4", "--train-size", "24",
    "--train-fraction", "0.5", "--batch", "4", "--steps", "5", "--shots", "0",
    "--full-loss-every", "2", "--seed", "3",
)


def sha_files(*paths) -> list[str]:
    return [hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in paths]


def test_criterion_11_determinism(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("NLROPT_OUT", str(tmp_path / "root"))
    main(["train", *TINY_FLAGS, "--out", str(tmp_path / "a")])
    main(["train", *TINY_FLAGS, "--out", str(tmp_path / "b")])
    names = ("config.txt", "report.json", "trace.csv")
    train_ok = sha_files(*(tmp_path / "a" / n for n in names)) == sha_files(
        *(tmp_path / "b" / n for n in names)
    )
    sweep_flags = ("sweep", "--parameter", "eta_prime", "--value", "0.01",
                   "--value", "0.05", "--n-seeds", "2", *TINY_FLAGS)
    main([*sweep_flags, "--out", str(tmp_path / "sa")])
    main([*sweep_flags, "--out", str(tmp_path / "sb")])
    sweep_names = sorted(
        p.relative_to(tmp_path / "sa").as_posix()
        for p in (tmp_path / "sa").rglob("*")
        if p.is_file()
    )
    sweep_ok = bool(sweep_names) and sha_files(
        *(tmp_path / "sa" / n for n in sweep_names)
    ) == sha_files(*(tmp_path / "sb" / n for n in sweep_names))
    capsys.readouterr()
    report(
        11,
        "determinism",
        train_ok and sweep_ok,
        f"train outputs {names} and {len(sweep_names)} sweep files byte-identical",
    )


# ---------------------------------------------------------------------------
# criterion 12: shot-mode estimator accuracy


def test_criterion_12_shot_mode_sanity():
    rng = np.random.default_rng(123)
    tolerance = 4 / np.sqrt(100 * 1000)
    worst = 0.0
    for _ in range(20):
        raw = rng.normal(size=16) + 1j * rng.normal(size=16)
        state = StateVector(4, raw / np.linalg.norm(raw))
        obs = Observable(int(rng.integers(4)))
        exact = expectation_z(state, obs)
        draws = [
            sample_expectation(state, obs, ShotConfig(1000, seed))
            for seed in range(100)
        ]
        worst = max(worst, abs(float(np.mean(draws)) - exact))
    report(
        12,
        "shot-mode-sanity",
        worst < tolerance,
        f"max |mean estimate - exact| {worst:.5f} over 20 states (tolerance {tolerance:.5f})",
    )
