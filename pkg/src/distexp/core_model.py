"""System configuration and the high-SNR change-of-variables types."""

from __future__ import annotations

from dataclasses import dataclass, replace
from numbers import Integral

import numpy as np


class ConfigError(ValueError):
    """Raised for out-of-range system or scheme parameters."""


@dataclass(frozen=True)
class SystemConfig:
    """Antenna counts, bandwidth ratio and side-information quality.

    Attributes
    ----------
    m_t, m_r : int
        Transmit and receive antennas.
    b : float
        Bandwidth ratio, channel uses per source sample.
    nu : float
        Side-information quality, ``log(rho_s) / log(rho)`` at high SNR.
    """

    m_t: int
    m_r: int
    b: float
    nu: float

    @property
    def m_star(self) -> int:
        """Smaller antenna count (number of spatial eigenmodes)."""
        return min(self.m_t, self.m_r)

    @property
    def m_sup(self) -> int:
        """Larger antenna count."""
        return max(self.m_t, self.m_r)

    def with_b(self, b: float) -> "SystemConfig":
        return make_system(self.m_t, self.m_r, b, self.nu)

    def with_nu(self, nu: float) -> "SystemConfig":
        return make_system(self.m_t, self.m_r, self.b, nu)

    def label(self) -> str:
        return f"{self.m_t}x{self.m_r}"


def make_system(m_t: int, m_r: int, b: float, nu: float) -> SystemConfig:
    """Validate and build a :class:`SystemConfig`.

    Raises
    ------
    ConfigError
        For non-integer or zero antenna counts, ``b <= 0`` or ``nu < 0``.
    """
    for name, m in (("m_t", m_t), ("m_r", m_r)):
        if isinstance(m, bool) or not isinstance(m, Integral):
            raise ConfigError(f"{name} must be an integer, got {m!r}")
        if m < 1:
            raise ConfigError(f"{name} must be >= 1, got {m}")
    b = float(b)
    nu = float(nu)
    if not np.isfinite(b) or b <= 0.0:
        raise ConfigError(f"bandwidth ratio b must be positive and finite, got {b}")
    if not np.isfinite(nu) or nu < 0.0:
        raise ConfigError(f"side-information quality nu must be >= 0, got {nu}")
    return SystemConfig(int(m_t), int(m_r), b, nu)


@dataclass(frozen=True)
class HighSnrPoint:
    """Exponents of the channel eigenvalues and side-information gain.

    ``lambda_i = rho**(-alpha_i)`` with ``alpha_1 >= ... >= alpha_M``, and
    ``gamma = rho**(-beta)``.
    """

    alpha: tuple
    beta: float

    def is_feasible(self) -> bool:
        a = np.asarray(self.alpha, dtype=float)
        if a.size and (a[-1] < 0 or np.any(np.diff(a) > 0)):
            return False
        return self.beta >= 0


@dataclass(frozen=True)
class FiniteSnrConfig:
    """Channel SNR ``rho`` and side-information SNR ``rho_s`` (linear)."""

    rho: float
    rho_s: float

    def __post_init__(self):
        if not (self.rho > 0 and self.rho_s > 0):
            raise ConfigError("rho and rho_s must be positive")

    def with_rho(self, rho: float) -> "FiniteSnrConfig":
        return replace(self, rho=rho)


def finite_snr(cfg: SystemConfig, rho_db: float) -> FiniteSnrConfig:
    """Finite-SNR point with the convention ``rho_s = rho**nu``."""
    rho = 10.0 ** (rho_db / 10.0)
    return FiniteSnrConfig(rho, rho ** cfg.nu)
