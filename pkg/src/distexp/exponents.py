"""Closed-form distortion exponents.

Upper bounds (partially and fully informed encoder), list decoding (LD),
hybrid digital-analog (HDA-S / HDA-LD), progressive layering (LS-LD),
superposition layering (BS-LD, finite and infinite layers) and the known
optimal values. Every function returns an :class:`ExponentResult` carrying
the regime it used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_model import SystemConfig
from .dmt import _phi, _upsilon, dmt
from .numerics import lambert_w0


@dataclass(frozen=True)
class ExponentResult:
    """Exponent value with its regime and optimizer.

    Attributes
    ----------
    value : float
        Distortion exponent.
    regime : dict
        Regime descriptor, e.g. ``{"branch": "segment", "k": 1}``.
    optimizer : dict
        Optional optimizer payload (``r_star``, ``kappa_star``, ``xi_1``...).
    """

    value: float
    regime: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class LsClimbConstants:
    """Slopes ``phi``, heights ``m`` and thresholds ``c`` of the LS-LD climb.

    ``phi[k-1]`` is the slope of the k-th tradeoff segment counted from
    ``r = m_star`` downwards and ``m[k-1] = m_star - k + 1`` its right end.
    ``c`` has ``m_star + 1`` entries with ``c[0] = 0`` and ``c[-1] = inf``.
    """

    phi_seq: np.ndarray
    m_seq: np.ndarray
    c_seq: np.ndarray


@dataclass(frozen=True)
class BsLayerConstants:
    """Geometric ratio ``eta_k`` of BS-LD layer gaps and ``gamma_k = sum eta^j``."""

    eta_k: float
    gamma_k_L: float


def _div(num: float, k: int) -> float:
    return math.inf if k == 0 else num / k


def delta_mimo(cfg: SystemConfig) -> float:
    """Exponent bound without side information, ``sum_i min(b, 2i - 1 + m_sup - m_star)``."""
    p = cfg.m_sup - cfg.m_star
    return float(sum(min(cfg.b, 2 * i - 1 + p) for i in range(1, cfg.m_star + 1)))


def delta_informed(cfg: SystemConfig) -> float:
    """Bound for an encoder that knows the channel and side-information state."""
    return cfg.nu + delta_mimo(cfg)


def delta_upper(cfg: SystemConfig) -> ExponentResult:
    """Upper bound for an encoder knowing only the side-information statistics."""
    b, nu, ms = cfg.b, cfg.nu, cfg.m_star
    p = cfg.m_sup - cfg.m_star
    top = cfg.m_sup + cfg.m_star - 1

    def tail(branch, **kw):
        return ExponentResult(nu + dmt(cfg, nu / b), dict(branch=branch, **kw))

    if nu / ms >= top:
        return tail("side-info-dominant")
    if b < nu / ms:
        return ExponentResult(nu, dict(branch="nu"))
    if nu / ms < p + 1:
        l = 1
    else:
        # 2l - 3 + p <= nu/m_star < 2l - 1 + p
        l = int(math.floor((nu / ms - p + 3) / 2.0))
    if b < p + 1:
        return ExponentResult(b * ms, dict(branch="linear", l=l))
    if b >= top:
        return tail("high-b", l=l)
    def ladder(**kw):
        # The listed value nu + d*(nu/b) can exceed Delta_MIMO(b) when l >= 2;
        # the MIMO point is admissible once the modes with weight >= b carry
        # at least nu/b, and then the bound is the smaller of the two.
        res = tail("ladder", l=l, **kw)
        n_off = sum(1 for i in range(1, ms + 1) if 2 * i - 1 + p >= b)
        mimo = delta_mimo(cfg)
        if b * n_off >= nu and mimo < res.value:
            return ExponentResult(mimo, dict(res.regime, corrected=True))
        return res

    if b < 2 * l - 1 + p:
        return ladder()
    k = int(math.floor((b - p + 1) / 2.0))
    k = min(max(k, l), ms - 1)
    if b < nu / (ms - k):
        return ladder(k=k)
    return ExponentResult(delta_mimo(cfg), dict(branch="mimo", l=l, k=k))


def delta_ld(cfg: SystemConfig) -> ExponentResult:
    """Single-layer list decoding, with the optimal multiplexing gain ``r_star``."""
    b, nu = cfg.b, cfg.nu
    if b * cfg.m_star <= nu:
        return ExponentResult(nu, dict(branch="nu"))
    for k in range(cfg.m_star):
        phi, ups, phi1 = _phi(cfg, k), _upsilon(cfg, k), _phi(cfg, k + 1)
        if (phi1 + nu) / (k + 1) <= b < _div(phi + nu, k):
            r_star = (phi + k * ups + nu) / (ups + b)
            return ExponentResult(
                max(nu, b * r_star), dict(branch="segment", k=k), dict(r_star=r_star)
            )
    raise AssertionError("no LD regime found")  # pragma: no cover


def delta_hda(cfg: SystemConfig) -> ExponentResult:
    """HDA-S for ``b m_star <= 1`` and HDA-LD above.

    The HDA-LD optimizer payload holds ``r_star``, the quantization rate
    exponent (``sigma_q**2 = rho**-r_star``).
    """
    b, nu, ms = cfg.b, cfg.nu, cfg.m_star
    if b * ms <= 1.0:
        return ExponentResult(b * ms, dict(branch="hda-s"))
    if b < nu / ms:
        return ExponentResult(nu, dict(branch="nu"))
    for k in range(ms):
        phi, ups, phi1 = _phi(cfg, k), _upsilon(cfg, k), _phi(cfg, k + 1)
        lo = (phi1 - 1 + nu) / (k + 1) + 1.0 / ms
        hi = _div(phi - 1 + nu, k) + 1.0 / ms
        if lo <= b < hi:
            g = b * ms - 1.0
            val = 1.0 + g * (phi + k * ups - 1 + nu) / (g + ms * ups)
            return ExponentResult(
                max(nu, val), dict(branch="segment", k=k), dict(r_star=val - 1.0)
            )
    # nu < 1 leaves (1/m_star, nu/m_star) uncovered only when empty
    raise AssertionError("no HDA regime found")  # pragma: no cover


def ls_constants(cfg: SystemConfig) -> LsClimbConstants:
    ms, p = cfg.m_star, cfg.m_sup - cfg.m_star
    ks = np.arange(1, ms + 1)
    phi = (p + 2 * ks - 1).astype(float)
    m = (ms - ks + 1).astype(float)
    c = np.zeros(ms + 1)
    for i in range(1, ms):
        c[i] = c[i - 1] + phi[i - 1] * math.log(m[i - 1] / (m[i - 1] - 1))
    c[ms] = math.inf
    return LsClimbConstants(phi, m, c)


def delta_ls(cfg: SystemConfig) -> ExponentResult:
    """Progressive layering with infinitely many layers (Lambert-W form)."""
    b, nu, ms = cfg.b, cfg.nu, cfg.m_star
    if b <= nu / ms:
        return ExponentResult(nu, dict(branch="nu"))
    const = ls_constants(cfg)
    phi, m, c = const.phi_seq, const.m_seq, const.c_seq
    for k in range(1, ms + 1):
        lo = c[k - 1] + nu / m[k - 1]
        hi = math.inf if k == ms else c[k] + nu / (m[k - 1] - 1)
        if lo < b <= hi:
            fk, mk, ck = phi[k - 1], m[k - 1], c[k - 1]
            if nu == 0:
                w_arg, kappa = 0.0, 0.0
            else:
                # exponent kept in log form to avoid overflow at large b
                w_arg = math.exp((b - ck) / fk + math.log(nu / (mk * fk)))
                kappa = fk / b * lambert_w0(w_arg)
            val = nu + float(np.sum(phi[: k - 1])) + mk * fk * (
                1.0 - math.exp(-(b * (1.0 - kappa) - ck) / fk)
            )
            return ExponentResult(
                val, dict(branch="segment", k=k), dict(kappa_star=kappa, w_argument=w_arg)
            )
    raise AssertionError("no LS regime found")  # pragma: no cover


def bs_regime(cfg: SystemConfig) -> int | None:
    """Segment ``k`` with ``(phi_{k+1}+nu)/(k+1) <= b < (phi_k+nu)/k``, or None if ``b m_star <= nu``."""
    b, nu = cfg.b, cfg.nu
    if b * cfg.m_star <= nu:
        return None
    for k in range(cfg.m_star):
        if (_phi(cfg, k + 1) + nu) / (k + 1) <= b < _div(_phi(cfg, k) + nu, k):
            return k
    raise AssertionError("no BS regime found")  # pragma: no cover


def bs_constants(cfg: SystemConfig, k: int, L: int) -> BsLayerConstants:
    phi1, ups = _phi(cfg, k + 1), _upsilon(cfg, k)
    eta = (cfg.b * (k + 1) - phi1) / ups
    n = L - 1
    if n == 0:
        gamma = 0.0
    elif eta == 1.0:
        gamma = float(n)
    elif eta < 1.0:
        gamma = (1.0 - eta**n) / (1.0 - eta)
    else:
        # (eta^n - 1)/(eta - 1) in log form; inf once it leaves double range
        log_g = n * math.log(eta) + math.log1p(-(eta ** -n)) - math.log(eta - 1.0)
        gamma = math.exp(log_g) if log_g < 700 else math.inf
    return BsLayerConstants(eta, gamma)


def _bs_scaled(cfg: SystemConfig, k: int, L: int):
    """Exponent, ``xi_1`` and second gap of the fixed-gain allocation.

    Numerator and denominator are divided by ``Gamma_k`` when it exceeds one
    so that ``Gamma_k = inf`` (huge ``eta_k^L``) gives the limit.
    """
    nu = cfg.nu
    phi, ups = _phi(cfg, k), _upsilon(cfg, k)
    con = bs_constants(cfg, k, L)
    B = cfg.b * (k + 1)
    G = con.gamma_k_L
    top = ups + B - phi - nu
    if G <= 1.0:
        den = (ups + B) * (ups + B * G) - B * phi * G
        val = nu + phi - ups * (ups * (nu + phi) + nu * B * G) / den
        xi_1 = (ups + B * G) * top / den
        gap_2 = phi * top / den
    else:
        ig = 1.0 / G
        den = (ups + B) * (ups * ig + B) - B * phi
        val = nu + phi - ups * (ups * (nu + phi) * ig + nu * B) / den
        xi_1 = (ups * ig + B) * top / den
        gap_2 = phi * top * ig / den
    return val, xi_1, gap_2, con


def delta_bs_finite(cfg: SystemConfig, L: int) -> ExponentResult:
    """BS-LD with ``L`` layers and fixed gains ``(k+1)(xi_{l-1} - xi_l)``.

    The payload holds ``xi_1`` and the second gap ``xi_1 - xi_2`` of the
    equal-exponent power allocation.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    k = bs_regime(cfg)
    if k is None:
        return ExponentResult(cfg.nu, dict(branch="nu"))
    val, xi_1, gap_2, con = _bs_scaled(cfg, k, L)
    return ExponentResult(
        max(cfg.nu, val),
        dict(branch="segment", k=k, L=L),
        dict(xi_1=xi_1, second_gap=gap_2, eta=con.eta_k, gamma=con.gamma_k_L),
    )


def delta_bs_infinite(cfg: SystemConfig) -> ExponentResult:
    """Limit of :func:`delta_bs_finite` as the number of layers grows."""
    nu, b = cfg.nu, cfg.b
    k = bs_regime(cfg)
    if k is None:
        return ExponentResult(nu, dict(branch="nu"))
    phi, phi1 = _phi(cfg, k), _phi(cfg, k + 1)
    B = b * (k + 1)
    if B < phi:
        return ExponentResult(max(nu, B), dict(branch="geometric", k=k))
    val = phi + nu * (B - phi) / (B - phi1)
    return ExponentResult(max(nu, val), dict(branch="saturated", k=k))


def delta_bs_combined(cfg: SystemConfig) -> ExponentResult:
    """Better of infinite-layer BS-LD and single-layer LD."""
    inf = delta_bs_infinite(cfg)
    ld = delta_ld(cfg)
    if ld.value > inf.value:
        return ExponentResult(ld.value, dict(ld.regime, winner="ld"), ld.optimizer)
    return ExponentResult(inf.value, dict(inf.regime, winner="bs-inf"), inf.optimizer)


def delta_optimal(cfg: SystemConfig) -> ExponentResult | None:
    """Optimal exponent where it is known, otherwise ``None``."""
    b, nu, ms, mx = cfg.b, cfg.nu, cfg.m_star, cfg.m_sup
    if b <= nu / ms:
        return ExponentResult(nu, dict(branch="nu"))
    if b <= (mx - ms + 1) / ms:
        return ExponentResult(b * ms, dict(branch="low-b"))
    if ms == 1:
        if b <= max(mx, nu):
            return ExponentResult(max(nu, b), dict(branch="miso-linear"))
        return ExponentResult(mx + nu * (1.0 - mx / b), dict(branch="miso-high-b"))
    return None


def delta_sscc(cfg: SystemConfig) -> ExponentResult:
    """Separate source-channel coding has the same exponent as LD."""
    return delta_ld(cfg)


SCHEMES = {
    "upper": delta_upper,
    "informed": lambda c: ExponentResult(delta_informed(c)),
    "mimo": lambda c: ExponentResult(delta_mimo(c)),
    "ld": delta_ld,
    "hda": delta_hda,
    "ls": delta_ls,
    "bs-inf": delta_bs_infinite,
    "bs-combined": delta_bs_combined,
    "optimal": delta_optimal,
}


def evaluate_scheme(cfg: SystemConfig, name: str) -> ExponentResult | None:
    """Evaluate by name; ``bs-L:<L>`` selects :func:`delta_bs_finite`."""
    if name.startswith("bs-L:"):
        return delta_bs_finite(cfg, int(name.split(":", 1)[1]))
    try:
        fn = SCHEMES[name]
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}") from None
    return fn(cfg)


def regime_breakpoints(cfg: SystemConfig) -> np.ndarray:
    """Every bandwidth ratio where some closed form switches regime.

    Depends on antennas and ``nu`` only (``cfg.b`` is ignored). Sweeps that
    compare against grid oracles pick ``b`` away from these points.
    """
    nu, ms = cfg.nu, cfg.m_star
    p = cfg.m_sup - cfg.m_star
    pts = {nu / ms, p + 1.0, cfg.m_sup + ms - 1.0, 1.0 / ms}
    for j in range(ms + 1):
        pts.add(2 * j - 1.0 + p)
        pts.add(2 * j + 1.0 + p)
        if j < ms:
            pts.add(nu / (ms - j))
    for k in range(ms):
        phi, phi1 = _phi(cfg, k), _phi(cfg, k + 1)
        pts.add((phi1 + nu) / (k + 1))
        pts.add(phi / (k + 1))
        pts.add((phi1 - 1 + nu) / (k + 1) + 1.0 / ms)
    c = ls_constants(cfg)
    for k in range(1, ms + 1):
        pts.add(c.c_seq[k - 1] + nu / c.m_seq[k - 1])
    return np.array(sorted(x for x in pts if np.isfinite(x) and x > 0))


def interior_b_points(cfg: SystemConfig, n: int, b_max: float = 8.0, margin: float = 0.02) -> np.ndarray:
    """``n`` bandwidth ratios in ``(0, b_max]`` at least ``margin`` from any breakpoint."""
    cand = np.round(np.arange(1, int(round(b_max / 0.05)) + 1) * 0.05, 10)
    bp = regime_breakpoints(cfg)
    ok = np.array([np.min(np.abs(bp - b)) >= margin for b in cand])
    cand = cand[ok]
    idx = np.unique(np.round(np.linspace(0, cand.size - 1, n)).astype(int))
    return cand[idx]
