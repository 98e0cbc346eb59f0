"""High-SNR distortion exponents for MIMO block fading with decoder side information.

Closed-form exponents, a brute-force variational oracle, a layered-broadcast
linear program, and a finite-SNR Monte Carlo simulator.
"""

from .core_model import (
    ConfigError,
    FiniteSnrConfig,
    HighSnrPoint,
    SystemConfig,
    finite_snr,
    make_system,
)

__all__ = [
    "ConfigError",
    "FiniteSnrConfig",
    "HighSnrPoint",
    "SystemConfig",
    "finite_snr",
    "make_system",
]

__version__ = "0.1.0"
