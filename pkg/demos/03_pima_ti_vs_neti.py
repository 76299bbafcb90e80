"""Pima logistic regression: does age add anything?

Runs NETI-DIFF and equilibrium TI (power ladder, K=20) at the same
budget and compares spread across repeats. TI estimates each model's
evidence separately and subtracts, so its errors do not cancel.
"""

from evidencepath.benchmarks import BenchmarkSpec, build_pair, default_config, eval_metrics, run_repeats

spec = BenchmarkSpec("pima")
pair = build_pair(spec)
n_iter = 50_000
for method in ("neti-diff", "ti-standard"):
    runs = run_repeats(spec, default_config(method, n_iter, K=20, repeats=5), pair=pair)
    m = eval_metrics([e.estimate for e, _ in runs], truth=-2.6177)
    print(f"{method:12s} mean {m.mean:+.4f}  variance {m.variance:.4f}  mean abs error {m.mean_abs_error:.4f}")
