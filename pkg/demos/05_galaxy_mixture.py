"""Galaxy velocities: three versus four Gaussian components.

Each mixture is tempered through its complete-data likelihood. The two
models share no parameters, so each rung updates both and costs two
sweeps of the budget.
"""

from evidencepath.benchmarks import BenchmarkSpec, default_config, eval_metrics, run_repeats

spec = BenchmarkSpec("galaxy")
runs = run_repeats(spec, default_config("neti-diff", 200_000, repeats=3))
m = eval_metrics([e.estimate for e, _ in runs], truth=0.4685)
print(f"log BF (4 vs 3 components): mean {m.mean:.3f}, sd {m.sd:.3f}; reference 0.4685")
