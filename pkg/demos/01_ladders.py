"""Compare the two temperature ladders.

The power ladder crowds rungs near tau=0, where the expected log
likelihood changes fastest for a single model. The sigmoid ladder is
mirrored through 0.5, so it is dense at both ends and treats the two
models of a Bayes-factor path alike.
"""

import numpy as np

from evidencepath.ladders import power_law_ladder, sigmoid_ladder

print("power, K=11, alpha=5")
print(np.round(power_law_ladder(11, 5.0), 5))
print("sigmoid, N=11, alpha=5")
s = sigmoid_ladder(11, 5.0)
print(np.round(s, 5))
print("mirror error:", np.max(np.abs(s + s[::-1] - 1)))
