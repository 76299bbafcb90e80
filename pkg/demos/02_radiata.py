"""Radiata pine: two single-covariate regressions with a closed-form answer.

Model 1 regresses strength on density, model 2 on resin-adjusted density.
Both share the intercept, so the union space has three coefficients and
each design matrix zero-pads the column it does not use.
"""

import numpy as np

from evidencepath.benchmarks import BenchmarkSpec, build_pair, default_config, eval_metrics, run_repeats

spec = BenchmarkSpec("radiata")
pair = build_pair(spec)
exact = pair.log_bayes_factor()
print(f"exact log BF (adjusted vs plain density): {exact:.6f}")

for n_iter in (16_000, 64_000):
    runs = run_repeats(spec, default_config("neti-diff", n_iter, repeats=5), pair=pair,
                       keep_traces=True)
    m = eval_metrics([e.estimate for e, _ in runs], truth=exact)
    print(f"NETI-DIFF {n_iter:>6}: mean {m.mean:.4f}  sd {m.sd:.4f}  mean abs error {m.mean_abs_error:.4f}")

est, trace = runs[0]
half = np.searchsorted(trace.tau, 0.5)
print(f"one sweep: {len(trace)} trace points, phi at tau=0 {trace.phi[0]:.2f}, "
      f"at 0.5 {trace.phi[half]:.2f}, at 1 {trace.phi[-1]:.2f}")
