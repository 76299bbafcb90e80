"""Posterior probabilities over several polynomial orders from pairwise Bayes factors.

Every order is compared with order 6 by NETI-DIFF, then the log Bayes
factors are combined with a uniform prior over models.
"""

import numpy as np

from evidencepath.benchmarks import BenchmarkSpec, build_pair, default_config, run_repeats
from evidencepath.estimators import model_posteriors_from_bfs

orders = [6, 7, 8, 9]
cfg = default_config("neti-diff", 20_000, repeats=1)
log_bf = [0.0]
for k in orders[1:]:
    spec = BenchmarkSpec("radiocarbon", orders=(6, k))
    log_bf.append(run_repeats(spec, cfg)[0][0].estimate)
post = model_posteriors_from_bfs(log_bf, np.full(len(orders), 1 / len(orders)))
exact = [0.0] + [build_pair(BenchmarkSpec("radiocarbon", orders=(6, k))).log_bayes_factor() for k in orders[1:]]
post_exact = model_posteriors_from_bfs(exact, np.full(len(orders), 1 / len(orders)))
for k, p, q in zip(orders, post, post_exact):
    print(f"order {k}: posterior {p:.4f} (exact {q:.4f})")
