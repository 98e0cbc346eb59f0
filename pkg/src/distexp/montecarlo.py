"""Finite-SNR expected distortion by Monte Carlo at the outage level.

No codes are simulated: each trial draws a channel ``H`` and a side
information gain ``gamma ~ Exp(1)``, decides from mutual-information
inequalities which codewords are decodable and scores the resulting
reconstruction distortion. Rates are in bits per channel use (``log2``).

Trials are grouped in blocks of :data:`BLOCK` draws. Block ``j`` always uses
``RngStream(seed, j)`` and the same draws are shared by every SNR point and
every scheme of a sweep, so comparisons are paired and results do not depend
on how blocks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_model import ConfigError, FiniteSnrConfig, SystemConfig, finite_snr
from .dmt import DomainError
from .numerics import RngStream, complex_normal, exp_scaled_e1, gram_eigenvalues

BLOCK = 1 << 15

SCHEME_TAGS = ("notx", "sscc", "ld", "hda", "ls", "bs", "partial-informed", "informed")


@dataclass(frozen=True)
class FadingRealization:
    """A batch of fading states: channels, their Gram eigenvalues and ``gamma``.

    Leading axis indexes trials; ``gram_eigs`` is ascending along the last axis.
    """

    h: np.ndarray
    gram_eigs: np.ndarray
    gamma: np.ndarray

    @classmethod
    def from_channel(cls, h, gamma) -> "FadingRealization":
        h = np.asarray(h, dtype=complex)
        gamma = np.asarray(gamma, dtype=float)
        if np.any(gamma < 0):
            raise DomainError("gamma must be nonnegative")
        if h.ndim == 2:
            h, gamma = h[None], np.atleast_1d(gamma)
        return cls(h, gram_eigenvalues(h), gamma)

    @classmethod
    def draw(cls, cfg: SystemConfig, rng: RngStream, n: int) -> "FadingRealization":
        gen = rng.generator()
        h = complex_normal(gen, (n, cfg.m_r, cfg.m_t))
        gamma = -np.log(1.0 - gen.random(n))
        return cls(h, gram_eigenvalues(h), gamma)


@dataclass(frozen=True)
class SchemeParams:
    """Scheme tag plus its rate and layer payload.

    ``rate`` (``sscc``, ``ld``) is the channel rate in bits per channel use;
    ``rates`` holds per-layer rates (``ls``, ``bs``); ``sigma_q2`` is the HDA
    quantization noise variance; ``xi`` the BS power exponents ``xi_1..xi_L``.
    """

    scheme: str
    rate: float | None = None
    rates: np.ndarray | None = None
    sigma_q2: float | None = None
    xi: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        if self.scheme not in SCHEME_TAGS:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        need = {"sscc": "rate", "ld": "rate", "hda": "sigma_q2", "ls": "rates", "bs": "rates"}
        attr = need.get(self.scheme)
        if attr is not None and getattr(self, attr) is None:
            raise ConfigError(f"scheme {self.scheme!r} needs {attr}")
        if self.rate is not None and self.rate < 0:
            raise ConfigError("rate must be nonnegative")
        if self.rates is not None:
            r = np.asarray(self.rates, dtype=float)
            object.__setattr__(self, "rates", r)
            if r.ndim != 1 or r.size == 0 or np.any(r < 0):
                raise ConfigError("rates must be a nonempty nonnegative vector")
        if self.sigma_q2 is not None and not self.sigma_q2 > 0:
            raise ConfigError("sigma_q2 must be positive")
        if self.scheme == "bs":
            if self.xi is None:
                raise ConfigError("scheme 'bs' needs xi")
            xi = np.asarray(self.xi, dtype=float)
            object.__setattr__(self, "xi", xi)
            if xi.shape != self.rates.shape:
                raise ConfigError("xi and rates must have the same length")
            _check_xi(xi)

    @property
    def name(self) -> str:
        return self.label or self.scheme


@dataclass
class SnrSweepResult:
    """Rows ``(rho_db, scheme, mean, stderr, trials)``."""

    rows: list = field(default_factory=list)

    def series(self, scheme: str):
        pts = [(r[0], r[2]) for r in self.rows if r[1] == scheme]
        return [(10 ** (db / 10.0), m) for db, m in pts]

    def lookup(self, rho_db: float, scheme: str):
        for r in self.rows:
            if r[1] == scheme and math.isclose(r[0], rho_db):
                return r
        raise KeyError((rho_db, scheme))


def _check_xi(xi):
    full = np.concatenate([[1.0], xi])
    if np.any(np.diff(full) > 0) or full[-1] < 0:
        raise DomainError("xi must satisfy 1 >= xi_1 >= ... >= xi_L >= 0")


# ---------------------------------------------------------------- per-trial pieces

def dist_d(R, gamma, rho_s: float):
    """Side-information-aided digital distortion ``1 / (rho_s gamma + 2**R)``."""
    R = np.asarray(R, dtype=float)
    if np.any(R < 0):
        raise DomainError("rate must be nonnegative")
    return 1.0 / (rho_s * np.asarray(gamma, dtype=float) + np.exp2(R))


def _capacity(real: FadingRealization, fin: FiniteSnrConfig, cfg: SystemConfig):
    return np.sum(np.log2(1.0 + (fin.rho / cfg.m_t) * real.gram_eigs), axis=-1)


def _source_info(lo, hi, gamma, rho_s):
    # log2((2^hi + g) / (2^lo + g)), the side-information-aided source rate increment
    g = rho_s * gamma
    return np.log2((np.exp2(hi) + g) / (np.exp2(lo) + g))


def ld_outage(real: FadingRealization, cfg: SystemConfig, fin: FiniteSnrConfig, R: float):
    """Per-trial outage of list decoding at channel rate ``R``."""
    if R < 0:
        raise DomainError("rate must be nonnegative")
    lhs = _source_info(0.0, cfg.b * R, real.gamma, fin.rho_s)
    return lhs >= cfg.b * _capacity(real, fin, cfg)


def sscc_outage(real: FadingRealization, cfg: SystemConfig, fin: FiniteSnrConfig, R: float):
    """Per-trial outage of separate coding: the channel rate exceeds capacity."""
    if R < 0:
        raise DomainError("rate must be nonnegative")
    return np.broadcast_to(R >= _capacity(real, fin, cfg), real.gamma.shape)


def _hda_check(cfg):
    if cfg.b * cfg.m_star <= 1:
        raise DomainError("HDA list decoding needs b * m_star > 1")


def hda_outage(real: FadingRealization, cfg: SystemConfig, fin: FiniteSnrConfig, sigma_q2: float):
    """Per-trial HDA outage.

    Outage when ``m_star log(1 + 1/s2)`` reaches
    ``sum_i log[xi (1 + s2)(1 + c l_i) / (1 + c l_i + xi s2)] + (b m_star - 1) sum_i log(1 + c l_i)``
    with ``xi = 1 + rho_s gamma``, ``c = rho / m_t``.
    """
    _hda_check(cfg)
    if not sigma_q2 > 0:
        raise DomainError("sigma_q2 must be positive")
    ms = cfg.m_star
    lam = (fin.rho / cfg.m_t) * real.gram_eigs
    xi = (1.0 + fin.rho_s * real.gamma)[:, None]
    if math.isinf(sigma_q2):
        return np.zeros(real.gamma.shape, dtype=bool)
    lhs = ms * math.log2(1.0 + 1.0 / sigma_q2)
    analog = np.sum(
        np.log2(xi * (1.0 + sigma_q2)) + np.log2(1.0 + lam) - np.log2(1.0 + lam + xi * sigma_q2),
        axis=-1,
    )
    digital = (cfg.b * ms - 1.0) * np.sum(np.log2(1.0 + lam), axis=-1)
    return lhs >= analog + digital


def dist_hda(real: FadingRealization, cfg: SystemConfig, fin: FiniteSnrConfig, sigma_q2: float):
    """MMSE distortion after decoding the HDA codeword, averaged over eigenmodes."""
    _hda_check(cfg)
    lam = (fin.rho / cfg.m_t) * real.gram_eigs
    g = (fin.rho_s * real.gamma)[:, None]
    return np.mean(1.0 / (1.0 + g + (1.0 + lam) / sigma_q2), axis=-1)


def ls_layers_decoded(real: FadingRealization, cfg: SystemConfig, fin: FiniteSnrConfig, rates, L: int):
    """Number of consecutively decoded layers of progressive (time-sharing) layering.

    Each layer gets ``n/L`` channel uses; layer ``j`` decodes iff its source
    increment is below ``(b/L) C(H)``.
    """
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (L,):
        raise ConfigError("need one rate per layer")
    if np.any(rates < 0):
        raise DomainError("rates must be nonnegative")
    cum = np.concatenate([[0.0], np.cumsum(cfg.b * rates / L)])
    cap = (cfg.b / L) * _capacity(real, fin, cfg)
    count = np.zeros(real.gamma.shape, dtype=int)
    alive = np.ones(real.gamma.shape, dtype=bool)
    for j in range(L):
        ok = _source_info(cum[j], cum[j + 1], real.gamma, fin.rho_s) < cap
        alive &= ok
        count += alive
    return count


def bs_layers_decoded(real: FadingRealization, cfg: SystemConfig, fin: FiniteSnrConfig, rates, xi, L: int):
    """Number of consecutively decoded layers of superposition layering.

    Layer ``l`` sees power ``rho**xi_{l-1} - rho**xi_l`` over the interference
    ``rho**xi_l`` of later layers. When ``xi_L = 0`` the last layer sees no
    residual interference, so one layer reproduces single-layer LD exactly.
    """
    rates = np.asarray(rates, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if rates.shape != (L,) or xi.shape != (L,):
        raise ConfigError("need one rate and one power exponent per layer")
    _check_xi(xi)
    full = np.concatenate([[1.0], xi])
    lam = real.gram_eigs / cfg.m_t
    cum = np.concatenate([[0.0], np.cumsum(cfg.b * rates)])
    count = np.zeros(real.gamma.shape, dtype=int)
    alive = np.ones(real.gamma.shape, dtype=bool)
    for l in range(1, L + 1):
        top = np.sum(np.log2(1.0 + fin.rho ** full[l - 1] * lam), axis=-1)
        if l == L and full[l] == 0.0:
            bottom = 0.0
        else:
            bottom = np.sum(np.log2(1.0 + fin.rho ** full[l] * lam), axis=-1)
        ok = cfg.b * (top - bottom) > _source_info(cum[l - 1], cum[l], real.gamma, fin.rho_s)
        alive &= ok
        count += alive
    return count


def trial_distortions(real: FadingRealization, cfg: SystemConfig, fin: FiniteSnrConfig, params: SchemeParams):
    """Distortion of every trial in ``real`` under one scheme."""
    s, g, rs = params.scheme, real.gamma, fin.rho_s
    if s == "notx":
        return 1.0 / (1.0 + rs * g)
    if s in ("sscc", "ld"):
        out = (sscc_outage if s == "sscc" else ld_outage)(real, cfg, fin, params.rate)
        return np.where(out, dist_d(0.0, g, rs), dist_d(cfg.b * params.rate, g, rs))
    if s == "hda":
        out = hda_outage(real, cfg, fin, params.sigma_q2)
        return np.where(out, dist_d(0.0, g, rs), dist_hda(real, cfg, fin, params.sigma_q2))
    if s in ("ls", "bs"):
        L = params.rates.size
        if s == "ls":
            n = ls_layers_decoded(real, cfg, fin, params.rates, L)
            cum = np.concatenate([[0.0], np.cumsum(cfg.b * params.rates / L)])
        else:
            n = bs_layers_decoded(real, cfg, fin, params.rates, params.xi, L)
            cum = np.concatenate([[0.0], np.cumsum(cfg.b * params.rates)])
        return dist_d(cum[n], g, rs)
    cap = _capacity(real, fin, cfg)
    if s == "partial-informed":
        # gamma integrated out: E[1/(rho_s G + A)] = e^{A/rho_s} E1(A/rho_s) / rho_s
        a = np.exp2(cfg.b * cap)
        return exp_scaled_e1(a / rs) / rs
    # informed: Wyner-Ziv distortion with gamma known at both ends
    return np.exp2(-cfg.b * cap) / (1.0 + rs * g)


# ---------------------------------------------------------------- conditional estimator

def _tail(c, a, rho_s):
    """``int_a^inf e^{-g} / (c + rho_s g) dg`` elementwise; zero where ``a = inf``."""
    c = np.asarray(c, dtype=float)
    a = np.asarray(a, dtype=float)
    fin_a = np.where(np.isfinite(a), a, 0.0)
    val = np.exp(-fin_a) * exp_scaled_e1(fin_a + c / rho_s) / rho_s
    return np.where(np.isfinite(a), val, 0.0)


def _gamma_threshold(lo, hi, cap, rho_s):
    """Smallest ``gamma`` with source increment ``log2((2^hi+g)/(2^lo+g)) < cap``, ``g = rho_s gamma``.

    ``inf`` when no ``gamma`` works (``cap <= 0``), ``0`` when every one does.
    """
    cap = np.asarray(cap, dtype=float)
    den = np.expm1(np.maximum(cap, 0.0) * math.log(2.0))
    num = np.exp2(hi) - np.exp2(lo + cap)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(den > 0, np.maximum(num, 0.0) / den, np.inf)
    return g / rho_s


def _stepwise_mean(thresholds, levels, rho_s):
    """``E[1/(levels[n] + rho_s G)]`` with ``n = #{j : G > running max of thresholds[:j+1]}``.

    ``thresholds`` has shape ``(trials, L)``, ``levels`` shape ``(L + 1,)``.
    """
    run = np.maximum.accumulate(thresholds, axis=1)
    n = thresholds.shape[0]
    edges = np.concatenate([np.zeros((n, 1)), run, np.full((n, 1), np.inf)], axis=1)
    total = np.zeros(n)
    for j, c in enumerate(levels):
        total += _tail(c, edges[:, j], rho_s) - _tail(c, edges[:, j + 1], rho_s)
    return total


def _hda_gamma_threshold(real, cfg, fin, sigma_q2, iters=64):
    # no outage iff f(xi) > 0 with xi = 1 + rho_s gamma; f increases in xi
    ms = cfg.m_star
    lam = (fin.rho / cfg.m_t) * real.gram_eigs
    n = real.gamma.shape[0]
    if math.isinf(sigma_q2):
        return np.zeros(n)
    need = ms * math.log2(1.0 + 1.0 / sigma_q2)
    digital = (cfg.b * ms - 1.0) * np.sum(np.log2(1.0 + lam), axis=-1)

    def f(xi):
        x = xi[:, None]
        return np.sum(np.log2(x * (1.0 + sigma_q2)) + np.log2(1.0 + lam) - np.log2(1.0 + lam + x * sigma_q2), axis=-1) + digital - need

    limit = np.sum(np.log2((1.0 + sigma_q2) * (1.0 + lam) / sigma_q2), axis=-1) + digital - need
    lo, hi = np.zeros(n), np.full(n, 1.0)
    # bracket in log(xi)
    while True:
        grow = (f(np.exp(hi)) <= 0) & (limit > 0) & (hi < 700.0)
        if not grow.any():
            break
        hi = np.where(grow, 2.0 * hi, hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = f(np.exp(mid)) > 0
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    gam = np.expm1(hi) / fin.rho_s
    gam = np.where(f(np.ones(n)) > 0, 0.0, gam)
    return np.where(limit > 0, gam, np.inf)


def conditional_distortions(real: FadingRealization, cfg: SystemConfig, fin: FiniteSnrConfig, params: SchemeParams):
    """``E[D | H]`` per trial with the side-information gain integrated out.

    Same expectation as :func:`trial_distortions`; ``real.gamma`` is unused.
    Given ``H`` every scheme decodes exactly when ``gamma`` exceeds a
    threshold, and each piece integrates to an exponential integral.
    """
    s, rs = params.scheme, fin.rho_s
    n = real.gram_eigs.shape[0]
    cap = _capacity(real, fin, cfg)
    if s == "notx":
        return np.full(n, float(_tail(1.0, 0.0, rs)))
    if s == "partial-informed":
        return trial_distortions(real, cfg, fin, params)
    if s == "informed":
        return np.exp2(-cfg.b * cap) * _tail(1.0, 0.0, rs)
    if s in ("sscc", "ld"):
        bR = cfg.b * params.rate
        if s == "sscc":
            th = np.where(params.rate < cap, 0.0, np.inf)
        else:
            th = _gamma_threshold(0.0, bR, cfg.b * cap, rs)
        return _stepwise_mean(th[:, None], np.array([1.0, 2.0**bR]), rs)
    if s == "hda":
        _hda_check(cfg)
        th = _hda_gamma_threshold(real, cfg, fin, params.sigma_q2)
        lam = (fin.rho / cfg.m_t) * real.gram_eigs
        out = _tail(1.0, 0.0, rs) - _tail(1.0, th, rs)
        c = 1.0 + (1.0 + lam) / params.sigma_q2
        ok = np.mean(_tail(c, th[:, None], rs), axis=-1)
        return out + ok
    L = params.rates.size
    if s == "ls":
        cum = np.concatenate([[0.0], np.cumsum(cfg.b * params.rates / L)])
        caps = np.repeat(((cfg.b / L) * cap)[:, None], L, axis=1)
    else:
        cum = np.concatenate([[0.0], np.cumsum(cfg.b * params.rates)])
        full = np.concatenate([[1.0], params.xi])
        lam = real.gram_eigs / cfg.m_t
        caps = np.empty((n, L))
        for l in range(1, L + 1):
            top = np.sum(np.log2(1.0 + fin.rho ** full[l - 1] * lam), axis=-1)
            bottom = 0.0 if (l == L and full[l] == 0.0) else np.sum(np.log2(1.0 + fin.rho ** full[l] * lam), axis=-1)
            caps[:, l - 1] = cfg.b * (top - bottom)
    th = np.stack([_gamma_threshold(cum[j], cum[j + 1], caps[:, j], rs) for j in range(L)], axis=1)
    return _stepwise_mean(th, np.exp2(cum), rs)


ESTIMATORS = {"plain": trial_distortions, "conditional": conditional_distortions}


# ---------------------------------------------------------------- default rates

def default_params(cfg: SystemConfig, scheme: str, rho: float, layers: int = 4) -> SchemeParams:
    """Rates from the high-SNR optimizers, ``R = r log2(rho)``.

    ``layers`` sets ``L`` for ``ls`` and ``bs``. Configurations where the
    optimizer transmits nothing digital get zero rates.
    """
    from .exponents import delta_hda, delta_ld

    lr = math.log2(rho)
    if scheme in ("notx", "partial-informed", "informed"):
        return SchemeParams(scheme)
    if scheme in ("ld", "sscc"):
        r = delta_ld(cfg).optimizer.get("r_star", 0.0)
        return SchemeParams(scheme, rate=r * lr)
    if scheme == "hda":
        res = delta_hda(cfg)
        if res.regime["branch"] == "hda-s":
            raise ConfigError("HDA list decoding needs b * m_star > 1")
        r = res.optimizer.get("r_star", 0.0)
        s2 = 1.0 / math.expm1(r * lr * math.log(2.0)) if r > 0 else math.inf
        return SchemeParams(scheme, sigma_q2=s2)
    if scheme == "ls":
        from .oracle import ls_climb_rates

        _, rates = ls_climb_rates(cfg, layers)
        return SchemeParams(scheme, rates=rates * lr)
    if scheme == "bs":
        from .bs_lp import power_allocation_closed
        from .exponents import bs_regime

        if bs_regime(cfg) is None:
            return SchemeParams(scheme, rates=np.zeros(layers), xi=np.zeros(layers))
        alloc = power_allocation_closed(cfg, layers)
        rates = (alloc.k + 1) * alloc.gaps
        return SchemeParams(scheme, rates=rates * lr, xi=alloc.xi)
    raise ConfigError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------- drivers

def _blocks(trials: int):
    j, done = 0, 0
    while done < trials:
        n = min(BLOCK, trials - done)
        yield j, n
        j += 1
        done += n


def mc_sweep(
    cfg: SystemConfig,
    rho_dbs,
    schemes,
    trials: int,
    seed: int,
    layers: int = 4,
    estimator: str = "plain",
) -> SnrSweepResult:
    """Mean distortion and standard error for every ``(rho_db, scheme)`` pair.

    ``schemes`` holds tags (rates from :func:`default_params`) or callables
    ``rho -> SchemeParams``. ``estimator="conditional"`` averages
    :func:`conditional_distortions` instead of raw per-trial distortions.
    """
    per_trial = _estimator(estimator)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    points = []
    for db in rho_dbs:
        fin = finite_snr(cfg, db)
        for sch in schemes:
            p = sch(fin.rho) if callable(sch) else default_params(cfg, sch, fin.rho, layers)
            points.append((float(db), fin, p))
    sums = np.zeros((len(points), 2))
    for j, n in _blocks(trials):
        real = FadingRealization.draw(cfg, RngStream(seed, j), n)
        for i, (_, fin, p) in enumerate(points):
            d = per_trial(real, cfg, fin, p)
            # per-block pairwise sums, then blocks added in order
            sums[i, 0] += np.sum(d)
            sums[i, 1] += np.sum(d * d)
    res = SnrSweepResult()
    for i, (db, _, p) in enumerate(points):
        mean = sums[i, 0] / trials
        var = max(sums[i, 1] / trials - mean * mean, 0.0)
        se = math.sqrt(var / (trials - 1)) if trials > 1 else 0.0
        res.rows.append((db, p.name, mean, se, trials))
    return res


def _estimator(name):
    if name not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {name!r}")
    return ESTIMATORS[name]


def mc_expected_distortion(
    cfg: SystemConfig, fin: FiniteSnrConfig, params: SchemeParams, trials: int, seed: int, estimator: str = "plain"
):
    """``(mean, stderr)`` of the distortion of one scheme at one SNR."""
    per_trial = _estimator(estimator)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    s = s2 = 0.0
    for j, n in _blocks(trials):
        d = per_trial(FadingRealization.draw(cfg, RngStream(seed, j), n), cfg, fin, params)
        s += np.sum(d)
        s2 += np.sum(d * d)
    mean = s / trials
    var = max(s2 / trials - mean * mean, 0.0)
    return float(mean), (math.sqrt(var / (trials - 1)) if trials > 1 else 0.0)


def fit_exponent(points) -> float:
    """Least-squares slope of ``-log(mean)`` against ``log(rho)``."""
    pts = list(points)
    if len(pts) < 2:
        raise DomainError("need at least two points")
    x = np.log([p[0] for p in pts])
    y = -np.log([p[1] for p in pts])
    if np.ptp(x) == 0:
        raise DomainError("need distinct rho values")
    return float(np.polyfit(x, y, 1)[0])
