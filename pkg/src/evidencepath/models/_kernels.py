"""Compiled helpers shared by the benchmark chains."""

import math

import numpy as np
from numba import njit

LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True, nogil=True)
def back_substitute_upper_t(L, z):
    # solves L^T x = z for lower-triangular L
    p = z.shape[0]
    x = np.empty(p)
    for i in range(p - 1, -1, -1):
        s = z[i]
        for j in range(i + 1, p):
            s -= L[j, i] * x[j]
        x[i] = s / L[i, i]
    return x


@njit(cache=True, nogil=True)
def gaussian_from_precision(prec, rhs, scale, rng):
    """Draw ``N(prec^{-1} rhs, scale**2 * prec^{-1})``."""
    L = np.linalg.cholesky(prec)
    mean = np.linalg.solve(prec, rhs)
    z = rng.standard_normal(rhs.shape[0])
    return mean + scale * back_substitute_upper_t(L, z)


@njit(cache=True, nogil=True)
def quad_form(G, theta):
    return theta @ (G @ theta)


@njit(cache=True, nogil=True)
def rss_from_stats(G, c, yy, theta):
    r = quad_form(G, theta) - 2.0 * (theta @ c) + yy
    return r if r > 0.0 else 0.0


@njit(cache=True, nogil=True)
def truncated_std_normal_lower(a, rng):
    """Exact draw from N(0, 1) restricted to ``[a, inf)``."""
    if a < 0.45:
        while True:
            x = rng.standard_normal()
            if x >= a:
                return x
    lam = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        x = a + rng.exponential(1.0 / lam)
        if math.log(rng.random()) <= -0.5 * (x - lam) ** 2:
            return x


@njit(cache=True, nogil=True)
def logsumexp_row(v):
    m = v.max()
    s = 0.0
    for x in v:
        s += math.exp(x - m)
    return m + math.log(s)
