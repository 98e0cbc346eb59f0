"""Reference computations that share no code with the package.

Used as oracles by the test-suite: fractional knapsack forms of the upper
bound and the tradeoff curve, and direct equal-exponent evaluation of layered
allocations.
"""

import math

import numpy as np


def weights(m_t, m_r):
    lo, hi = min(m_t, m_r), max(m_t, m_r)
    return np.array([2 * i - 1 + hi - lo for i in range(1, lo + 1)], dtype=float)


def tradeoff(m_t, m_r, r):
    """min sum w_i alpha_i s.t. sum (1 - alpha_i) <= r, alpha in [0, 1], by greedy filling.

    Setting ``x_i = 1 - alpha_i`` the cost is ``sum w - sum w_i x_i``; the
    largest weights are switched off first.
    """
    w = np.sort(weights(m_t, m_r))[::-1]
    budget, saved = r, 0.0
    for wi in w:
        x = min(1.0, max(budget, 0.0))
        saved += wi * x
        budget -= x
    return float(w.sum() - saved)


def upper_bound(m_t, m_r, b, nu):
    """min over alpha of max(nu, b s) + S_A(alpha), s = sum (1 - alpha_i).

    Branch s <= nu/b costs ``nu + tradeoff(nu/b)``; branch s >= nu/b is a
    fractional knapsack on ``sum w + sum (b - w_i) x_i`` with ``sum x >= nu/b``.
    """
    w = weights(m_t, m_r)
    m = w.size
    first = nu + tradeoff(m_t, m_r, nu / b) if nu / b <= m else math.inf
    if nu / b > m:
        return first if math.isfinite(first) else nu
    x = np.where(w > b, 1.0, 0.0)
    need = nu / b - x.sum()
    for i in np.argsort(b - w):  # cheapest extra first
        if need <= 0:
            break
        if x[i] == 1.0:
            continue
        add = min(1.0 - x[i], need)
        x[i] += add
        need -= add
    second = float(w.sum() + np.sum((b - w) * x))
    return min(first, second)


def ld_exponent(m_t, m_r, b, nu, n_r=200001):
    """max over r of min(max(nu, b r), nu + d*(r)) on a fine r grid."""
    m = min(m_t, m_r)
    r = np.linspace(0.0, m, n_r)
    d = np.array([tradeoff(m_t, m_r, x) for x in r])
    return float(np.max(np.minimum(np.maximum(nu, b * r), nu + d)))
