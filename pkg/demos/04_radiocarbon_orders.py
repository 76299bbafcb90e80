"""Polynomial regressions of increasing order on the radiocarbon stand-in.

The exact log Bayes factor is available for every pair of orders, so the
error can be tracked as the two models grow further apart.
"""

from evidencepath.benchmarks import BenchmarkSpec, build_pair, default_config, eval_metrics, run_repeats

for orders in ((1, 2), (4, 6), (2, 7), (1, 9)):
    spec = BenchmarkSpec("radiocarbon", orders=orders)
    pair = build_pair(spec)
    exact = pair.log_bayes_factor()
    runs = run_repeats(spec, default_config("neti-diff", 64_000, repeats=5), pair=pair)
    m = eval_metrics([e.estimate for e, _ in runs], truth=exact)
    print(f"orders {orders}: exact {exact:9.4f}  NETI-DIFF mean {m.mean:9.4f}  mean abs error {m.mean_abs_error:.4f}")
