import time
import numpy as np
from nlropt.harness import ExperimentConfig, execute

OPTS = ["nlr", "sgd", "momentum", "rmsprop", "adam",
        "perturb_gauss", "perturb_uniform", "reinit"]

def run(opt, seed, eta_prime=0.02):
    cfg = ExperimentConfig(opt=opt, seed=seed, shots=0, eta_prime=eta_prime)
    r = execute(cfg)
    return r.final_loss, r.accuracy_percent, r.reversal_count

t0 = time.time()
results = {}
for opt in OPTS:
    for seed in range(5):
        results[(opt, seed, 0.02)] = run(opt, seed)
        print(f"done {opt} seed={seed} {time.time()-t0:.0f}s", flush=True)
for ep in (0.005, 0.01, 0.05, 0.1):
    for seed in range(3):
        results[("nlr", seed, ep)] = run("nlr", seed, ep)
        print(f"done nlr ep={ep} seed={seed} {time.time()-t0:.0f}s", flush=True)

print("=== criterion 3/4/5: per-optimizer over seeds 0-4 ===")
stats = {}
for opt in OPTS:
    rows = [results[(opt, s, 0.02)] for s in range(5)]
    losses = [r[0] for r in rows]; accs = [r[1] for r in rows]
    stats[opt] = (float(np.mean(losses)), float(np.mean(accs)))
    print(f"{opt:15s} loss mean={np.mean(losses):.4f} (per-seed: "
          + " ".join(f"{v:.3f}" for v in losses) + f") acc={np.mean(accs):6.2f}%")
print(f"C3 ratio nlr/sgd = {stats['nlr'][0]/stats['sgd'][0]:.3f} (need <= 0.5)"
      f"  acc nlr {stats['nlr'][1]:.2f} vs sgd {stats['sgd'][1]:.2f} (need >=)")
ranked = sorted(stats.items(), key=lambda kv: kv[1][0])
print("ranking: " + " < ".join(f"{k}:{v[0]:.4f}" for k, v in ranked))
print("=== criterion 6: eta_prime sweep, mean over seeds 0-2 ===")
for ep in (0.005, 0.01, 0.02, 0.05, 0.1):
    losses = [results[("nlr", s, ep)][0] for s in range(3)]
    print(f"eta_prime={ep:<6} mean={np.mean(losses):.4f} per-seed: "
          + " ".join(f"{v:.3f}" for v in losses))
print(f"elapsed {time.time()-t0:.0f}s")
