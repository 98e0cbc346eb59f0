"""Brute-force oracles for the closed-form exponents.

Each exponent is the value of a small optimisation problem over the channel
eigenvalue exponents ``alpha`` (ordered, ``alpha_1 >= ... >= alpha_M``), the
side-information exponent ``beta`` and a multiplexing gain ``r``. Here those
problems are solved by plain enumeration on a grid, so they share no algebra
with :mod:`distexp.exponents`.

Two exact reductions keep the enumeration fast:

* grid points with ``beta > nu`` have the same constraints as ``beta = nu``
  and a larger objective, so only the smallest grid value ``>= nu`` is kept;
* the non-outage term is nondecreasing and the outage term nonincreasing in
  ``r`` (the outage set grows with ``r``), so the grid maximum of their minimum
  is located by bisection instead of a full scan. ``exhaustive=True`` scans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .core_model import SystemConfig
from .dmt import DomainError, _phi, _upsilon, dmt_inverse


@dataclass(frozen=True)
class GridSpec:
    """Grid steps and ranges of the oracle enumeration.

    ``beta_max=None`` uses ``nu + b*m_star + 1``.
    """

    alpha_step: float = 0.01
    beta_step: float = 0.01
    r_step: float = 0.005
    alpha_max: float = 1.0
    beta_max: float | None = None

    def __post_init__(self):
        if min(self.alpha_step, self.beta_step, self.r_step) <= 0:
            raise ValueError("grid steps must be positive")
        if self.alpha_max < 1:
            raise ValueError("alpha_max must be >= 1")


def _weights(cfg: SystemConfig) -> np.ndarray:
    p = cfg.m_sup - cfg.m_star
    return np.array([2 * i - 1 + p for i in range(1, cfg.m_star + 1)], dtype=float)


def s_a(cfg: SystemConfig, alpha) -> float:
    """Probability exponent of the ordered eigenvalue exponents ``alpha``.

    ``sum_i (2i - 1 + m_sup - m_star) alpha_i`` for ``alpha_1 >= ... >= alpha_M >= 0``,
    ``inf`` outside that cone.
    """
    a = np.asarray(alpha, dtype=float)
    if a.shape != (cfg.m_star,):
        raise ValueError(f"alpha must have length {cfg.m_star}")
    if a[-1] < 0 or np.any(np.diff(a) > 0):
        return math.inf
    return float(_weights(cfg) @ a)


@lru_cache(maxsize=32)
def _ordered_grid(m: int, n: int) -> np.ndarray:
    # nonincreasing integer tuples in [0, n]^m
    idx = np.array(list(combinations_with_replacement(range(n + 1), m)), dtype=np.int32)
    return idx[:, ::-1].copy()


def alpha_grid(cfg: SystemConfig, grid: GridSpec) -> np.ndarray:
    """All ordered ``alpha`` tuples on the grid, one per row."""
    n = int(round(grid.alpha_max / grid.alpha_step))
    return _ordered_grid(cfg.m_star, n) * grid.alpha_step


def _beta_values(cfg: SystemConfig, grid: GridSpec) -> np.ndarray:
    beta_max = grid.beta_max if grid.beta_max is not None else cfg.nu + cfg.b * cfg.m_star + 1
    n = int(math.floor(beta_max / grid.beta_step + 1e-9))
    betas = np.arange(n + 1) * grid.beta_step
    keep = betas < cfg.nu - 1e-12
    above = betas[~keep]
    return np.concatenate([betas[keep], above[:1]])


def oracle_upper(cfg: SystemConfig, grid: GridSpec = GridSpec(), return_argmin: bool = False):
    """Grid minimum of ``max(nu, b * sum(1 - alpha)^+) + S_A(alpha)`` over ``[0, 1]^M``.

    With ``return_argmin`` also returns the minimising ``alpha``.
    """
    n = int(round(1.0 / grid.alpha_step))
    alpha = _ordered_grid(cfg.m_star, n) * grid.alpha_step
    s = np.sum(np.maximum(1.0 - alpha, 0.0), axis=1)
    obj = np.maximum(cfg.nu, cfg.b * s) + alpha @ _weights(cfg)
    i = int(np.argmin(obj))
    if return_argmin:
        return float(obj[i]), alpha[i]
    return float(obj[i])


def _maximin(r_values, f1, f2, exhaustive=False):
    """Grid max over r of min(f1(r), f2(r)) with f1 nondecreasing, f2 nonincreasing."""
    n = len(r_values)
    if exhaustive:
        return max(min(f1(r), f2(r)) for r in r_values)
    cache = {}

    def ev(i):
        if i not in cache:
            cache[i] = (f1(r_values[i]), f2(r_values[i]))
        return cache[i]

    # first index with f1 >= f2
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi) // 2
        a, b = ev(mid)
        if a >= b:
            hi = mid
        else:
            lo = mid + 1
    best = -math.inf
    for i in (lo - 1, lo):
        if 0 <= i < n:
            best = max(best, min(ev(i)))
    return best


def _points(cfg: SystemConfig, grid: GridSpec):
    alpha = alpha_grid(cfg, grid)
    beta = _beta_values(cfg, grid)
    u = np.maximum(cfg.nu - beta, 0.0)
    return alpha, beta, u


def _min_cost_per_sum(cfg: SystemConfig, alpha: np.ndarray):
    """Cheapest ``S_A`` for each value of ``sum(1 - alpha)^+`` on the grid.

    The LD problem sees ``alpha`` only through these two numbers, so the
    cheapest tuple per sum dominates the rest.
    """
    s = np.sum(np.maximum(1.0 - alpha, 0.0), axis=1)
    sa = alpha @ _weights(cfg)
    key = np.round(s * 1e9).astype(np.int64)
    order = np.lexsort((sa, key))
    first = np.ones(order.size, dtype=bool)
    first[1:] = key[order][1:] != key[order][:-1]
    pick = order[first]
    return s[pick], sa[pick]


def oracle_ld(cfg: SystemConfig, grid: GridSpec = GridSpec(), exhaustive: bool = False) -> float:
    """Exponent of single-layer list decoding by enumeration.

    For each multiplexing gain ``r`` the outage set is
    ``(b r - (nu - beta)^+)^+ >= b sum(1 - alpha)^+``; success costs
    ``max((nu - beta)^+, b r)`` and outage ``(nu - beta)^+``, both plus
    ``beta + S_A(alpha)``.
    """
    b = cfg.b
    alpha, beta, u = _points(cfg, grid)
    s, sa = _min_cost_per_sum(cfg, alpha)
    s = s[:, None]
    prob = sa[:, None] + beta[None, :]
    uu = u[None, :]
    cost_out = (uu + prob).ravel()

    def outage(r):
        return (np.maximum(b * r - uu, 0.0) >= b * s).ravel()

    def success_exp(r):
        m = ~outage(r)
        if not m.any():
            return math.inf
        return float((np.maximum(uu, b * r) + prob).ravel()[m].min())

    def outage_exp(r):
        m = outage(r)
        return float(cost_out[m].min()) if m.any() else math.inf

    nr = int(round(cfg.m_star / grid.r_step))
    r_values = np.arange(nr + 1) * grid.r_step
    return _maximin(r_values, success_exp, outage_exp, exhaustive)


def oracle_hda(cfg: SystemConfig, grid: GridSpec = GridSpec(), exhaustive: bool = False) -> float:
    """Exponent of HDA list decoding by enumeration (needs ``b m_star > 1``).

    ``r`` is the quantization-noise exponent. Outage when
    ``sum_i (r - (nu - beta)^+ + (1 - alpha_i))^+ >= b m_star sum(1 - alpha)^+``;
    success costs ``max((nu - beta)^+, r + (1 - alpha_1)^+)``.
    """
    ms = cfg.m_star
    if cfg.b * ms <= 1:
        raise DomainError("HDA list decoding needs b * m_star > 1")
    alpha, beta, u = _points(cfg, grid)
    a = np.maximum(1.0 - alpha, 0.0)
    s = a.sum(axis=1)[:, None]
    prob = (alpha @ _weights(cfg))[:, None] + beta[None, :]
    uu = u[None, :]
    a1 = a[:, :1]
    cost_out = (uu + prob).ravel()

    def outage(r):
        lhs = np.zeros((a.shape[0], uu.shape[1]))
        for i in range(ms):
            lhs += np.maximum(r - uu + a[:, i : i + 1], 0.0)
        return (lhs >= cfg.b * ms * s).ravel()

    def success_exp(r):
        m = ~outage(r)
        if not m.any():
            return math.inf
        return float((np.maximum(uu, r + a1) + prob).ravel()[m].min())

    def outage_exp(r):
        m = outage(r)
        return float(cost_out[m].min()) if m.any() else math.inf

    r_max = cfg.nu + cfg.b * ms
    nr = int(math.ceil(r_max / grid.r_step))
    r_values = np.arange(nr + 1) * grid.r_step
    return _maximin(r_values, success_exp, outage_exp, exhaustive)


# ---------------------------------------------------------------- LS-LD climb

def _ls_feasible(cfg: SystemConfig, L: int, t: float) -> bool:
    """Can every layer of an ``L``-layer progressive scheme reach exponent ``t``?

    Layer exponents: ``nu + d*(r_1)`` for the base, ``max(b S_l / L, nu) +
    d*(r_{l+1})`` after ``l`` layers with cumulative gain ``S_l``, and
    ``max(b S_L / L, nu)`` when all are decoded. Greedy: each layer takes the
    largest gain keeping its exponent at ``t``; larger prefixes only relax
    later constraints, so greedy is optimal. Runs of layers on one tradeoff
    segment follow an affine recursion and are jumped over in closed form.
    """
    b, nu = cfg.b, cfg.nu
    if t <= nu:
        return True
    y0 = t - nu
    if y0 >= _phi(cfg, 0):
        return False
    r1 = dmt_inverse(cfg, y0)
    n1 = L if r1 == 0 else int(math.floor(nu * L / (b * r1)))
    count = min(L, n1 + 1)
    s = count * r1
    if count == L:
        return max(b * s / L, nu) >= t
    y = t - b * s / L  # diversity still needed by the next layer
    j = count  # layers assigned so far
    ms = cfg.m_star
    while j < L:
        if y <= 0:
            return True
        k = next(k for k in range(ms) if y > _phi(cfg, k + 1))
        phi, ups, phi1 = _phi(cfg, k), _upsilon(cfg, k), _phi(cfg, k + 1)
        y_fix = phi + k * ups
        dev = y - y_fix
        if dev >= 0:
            return False  # zero gain forever
        a = 1.0 + b / (L * ups)
        ratio = (y_fix - phi1) / (y_fix - y)
        n = max(1, int(math.ceil(math.log(ratio) / math.log(a) - 1e-12)))
        n = min(n, L - j)
        y = y_fix + a**n * dev
        j += n
    return y <= 1e-12


def ls_climb_finite(cfg: SystemConfig, L: int, tol: float = 1e-12) -> float:
    """Exponent of progressive layering with ``L`` layers (equal-exponent climb)."""
    if L < 1:
        raise ValueError("L must be >= 1")
    lo, hi = cfg.nu, cfg.nu + _phi(cfg, 0)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _ls_feasible(cfg, L, mid):
            lo = mid
        else:
            hi = mid
    return lo


def ls_climb_rates(cfg: SystemConfig, L: int) -> tuple[float, np.ndarray]:
    """Exponent and per-layer multiplexing gains of the ``L``-layer climb."""
    t = ls_climb_finite(cfg, L)
    t = t - 1e-9 * max(1.0, t)  # strictly feasible target
    rates = np.zeros(L)
    s = 0.0
    for l in range(L):
        need = t - max(cfg.b * s / L, cfg.nu)
        r = dmt_inverse(cfg, need) if need > 0 else math.inf
        if not math.isfinite(r):
            # remaining diversity already met; spread the top gain
            r = float(cfg.m_star)
        rates[l] = r
        s += r
    return t, rates
