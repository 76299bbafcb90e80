"""Inverse-temperature ladders.

All ladders are strictly increasing arrays inside ``[0, 1]``. The power
ladder includes both endpoints; the sigmoid ladder is symmetric about 0.5
and excludes them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class LadderKind(str, enum.Enum):
    POWER = "power"
    SIGMOID = "sigmoid"
    OPTIMAL = "optimal"


@dataclass(frozen=True)
class LadderConfig:
    kind: LadderKind = LadderKind.POWER
    count: int = 20
    alpha: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LadderKind(self.kind))
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class Ladder:
    taus: np.ndarray
    config: LadderConfig

    def __len__(self) -> int:
        return self.taus.shape[0]


def power_law_ladder(K: int, alpha: float = 5.0) -> np.ndarray:
    """``tau_k = ((k-1)/(K-1))**alpha`` for ``k = 1..K``."""
    if K < 2:
        raise ValueError(f"a power ladder needs at least 2 rungs, got {K}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    taus = (np.arange(K, dtype=float) / (K - 1)) ** alpha
    taus[-1] = 1.0
    return taus


def _half_denominator(h: int, alpha: float) -> int:
    # smallest integer N* with (h/N*)**alpha < 0.5
    x_star = h * 0.5 ** (-1.0 / alpha)
    n_star = max(h, math.floor(x_star))
    while (h / n_star) ** alpha >= 0.5:
        n_star += 1
    return n_star


def sigmoid_ladder(N: int, alpha: float = 5.0) -> np.ndarray:
    """Symmetric ladder dense near both endpoints.

    The lower half is ``(i/N*)**alpha`` for ``i = 1..floor(N/2)`` with
    ``N*`` the smallest integer keeping every point below 0.5; the upper
    half mirrors it through 0.5, and an odd ``N`` adds the point 0.5.

    Examples
    --------
    >>> sigmoid_ladder(2, 5.0)
    array([0.03125, 0.96875])
    """
    if N < 2:
        raise ValueError(f"a sigmoid ladder needs at least 2 points, got {N}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    h = N // 2
    n_star = _half_denominator(h, alpha)
    lower = (np.arange(1, h + 1, dtype=float) / n_star) ** alpha
    upper = 1.0 - lower[::-1]
    if N % 2:
        return np.concatenate([lower, [0.5], upper])
    return np.concatenate([lower, upper])


def make_ladder(config: LadderConfig) -> Ladder:
    if config.kind is LadderKind.POWER:
        taus = power_law_ladder(config.count, config.alpha)
    elif config.kind is LadderKind.SIGMOID:
        taus = sigmoid_ladder(config.count, config.alpha)
    else:
        raise ValueError("optimal ladders are built adaptively by the estimator")
    return Ladder(taus, config)


def optimal_insert(tau_left: float, tau_right: float, f_left: float, f_right: float,
                   v_left: float, v_right: float) -> float:
    """New rung between two existing ones.

    ``f`` is the mean log-likelihood at each rung and ``v`` its variance,
    i.e. the slope of the mean curve. The returned point is where the two
    tangent lines meet. If the slopes coincide, or the intersection falls
    outside the open bracket, the midpoint is returned instead.
    """
    if not tau_left < tau_right:
        raise ValueError("tau_left must be smaller than tau_right")
    mid = 0.5 * (tau_left + tau_right)
    denom = v_left - v_right
    if abs(denom) <= 1e-12:
        return mid
    t = (f_right - f_left + tau_left * v_left - tau_right * v_right) / denom
    if not (tau_left < t < tau_right) or not np.isfinite(t):
        return mid
    return float(t)
