"""Diversity-multiplexing tradeoff and the successive-decoding diversity gain."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core_model import SystemConfig


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class InfeasibleRateError(DomainError):
    """Multiplexing gain larger than a layer can carry."""


@dataclass(frozen=True)
class DmtSegment:
    """Segment ``k`` of the tradeoff curve, valid for ``k <= r <= k + 1``.

    ``phi_k`` is the diversity at ``r = k`` and ``upsilon_k`` the magnitude
    of the slope on the segment.
    """

    k: int
    phi_k: float
    upsilon_k: float


def _phi(cfg: SystemConfig, k: int) -> float:
    # Valid up to k = m_star, where it vanishes.
    return float((cfg.m_sup - k) * (cfg.m_star - k))


def _upsilon(cfg: SystemConfig, k: int) -> float:
    return float(cfg.m_sup + cfg.m_star - 2 * k - 1)


def phi_upsilon(cfg: SystemConfig, k: int) -> DmtSegment:
    """Diversity at the corner ``r = k`` and slope of the following segment."""
    if not 0 <= k <= cfg.m_star - 1:
        raise DomainError(f"segment index k={k} outside [0, {cfg.m_star - 1}]")
    return DmtSegment(k, _phi(cfg, k), _upsilon(cfg, k))


def dmt(cfg: SystemConfig, r: float) -> float:
    """Optimal diversity gain ``d*(r)`` of the i.i.d. Rayleigh channel.

    Piecewise linear through the corners ``(k, (m_sup - k)(m_star - k))`` and
    zero for ``r >= m_star``.
    """
    if r < 0:
        raise DomainError(f"multiplexing gain must be >= 0, got {r}")
    if r >= cfg.m_star:
        return 0.0
    k = int(math.floor(r))
    return _phi(cfg, k) - _upsilon(cfg, k) * (r - k)


def dmt_inverse(cfg: SystemConfig, d: float) -> float:
    """Largest ``r`` with ``d*(r) >= d`` for ``0 < d <= m_t m_r``.

    Returns ``inf`` for ``d <= 0`` and raises for ``d`` above the maximum
    diversity.
    """
    if d <= 0:
        return math.inf
    if d > _phi(cfg, 0):
        raise DomainError(f"diversity {d} exceeds maximum {_phi(cfg, 0)}")
    for k in range(cfg.m_star):
        if d >= _phi(cfg, k + 1):
            return k + (_phi(cfg, k) - d) / _upsilon(cfg, k)
    return float(cfg.m_star)  # pragma: no cover


def d_sd(cfg: SystemConfig, r: float, xi_prev: float, xi_next: float) -> float:
    """Diversity of a superposition layer with power exponents ``xi_prev >= xi_next``.

    The gain is split as ``r = k * gap + delta`` with ``gap = xi_prev - xi_next``
    and ``0 <= delta < gap``; the result is ``phi_k * xi_prev - upsilon_k * delta``.
    An exact multiple of ``gap`` takes ``delta = 0``.
    """
    if xi_prev < xi_next:
        raise DomainError("xi_prev must be >= xi_next")
    if r < 0:
        raise DomainError(f"multiplexing gain must be >= 0, got {r}")
    gap = xi_prev - xi_next
    if gap == 0.0:
        if r > 0:
            raise InfeasibleRateError("zero-width layer cannot carry a positive rate")
        return _phi(cfg, 0) * xi_prev
    if r > cfg.m_star * gap:
        raise InfeasibleRateError(
            f"rate {r} exceeds layer capacity {cfg.m_star * gap}"
        )
    k = int(math.floor(r / gap))
    delta = r - k * gap
    if gap - delta <= 1e-12 * gap:
        # r / gap rounded just below an integer
        k, delta = k + 1, 0.0
    if k >= cfg.m_star:
        k, delta = cfg.m_star, 0.0
    return _phi(cfg, k) * xi_prev - _upsilon(cfg, k) * delta
