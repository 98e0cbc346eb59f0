import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from distexp import make_system
from distexp.core_model import ConfigError, FiniteSnrConfig, finite_snr
from distexp.dmt import DomainError
from distexp.montecarlo import (
    BLOCK,
    FadingRealization,
    SchemeParams,
    bs_layers_decoded,
    conditional_distortions,
    default_params,
    dist_d,
    dist_hda,
    fit_exponent,
    hda_outage,
    ld_outage,
    ls_layers_decoded,
    mc_expected_distortion,
    mc_sweep,
    sscc_outage,
    trial_distortions,
)
from distexp.numerics import RngStream

c = make_system
SISO = c(1, 1, 1, 1)


def siso(h2, gamma=0.0):
    return FadingRealization.from_channel([[math.sqrt(h2)]], gamma)


def fin(rho, rho_s):
    return FiniteSnrConfig(rho, rho_s)


def test_dist_d_examples():
    assert dist_d(0, 1, 100) == pytest.approx(1 / 101)
    assert dist_d(3, 0, 7) == pytest.approx(2**-3)
    assert dist_d(math.log2(6), 1, 10) == pytest.approx(1 / 16)
    with pytest.raises(DomainError):
        dist_d(-1, 1, 1)


def test_ld_outage_examples():
    assert ld_outage(siso(0.01), SISO, fin(100, 1), 5)[0]
    assert not ld_outage(siso(1.0), SISO, fin(100, 1), 5)[0]
    assert not ld_outage(siso(1e-6, gamma=1e30), SISO, fin(100, 1), 5)[0]


def test_sscc_outage_examples():
    assert not sscc_outage(siso(1.0), SISO, fin(100, 1), 5)[0]
    assert sscc_outage(siso(1.0), SISO, fin(100, 1), 7)[0]


def test_ld_never_worse_than_sscc_per_trial():
    cfg = c(2, 2, 1.5, 0.5)
    real = FadingRealization.draw(cfg, RngStream(3, 0), 5000)
    f = finite_snr(cfg, 20)
    for R in (0.5, 3.0, 8.0):
        assert not np.any(ld_outage(real, cfg, f, R) & ~sscc_outage(real, cfg, f, R))


def test_hda_outage_examples():
    cfg = c(1, 1, 2, 1)
    assert not hda_outage(siso(1e-3, 0.2), cfg, fin(100, 100), math.inf)[0]
    assert hda_outage(FadingRealization.from_channel([[0.0]], 0.0), cfg, fin(100, 100), 1e-3)[0]
    assert not hda_outage(siso(1.0, 1.0), cfg, fin(1e3, 1e3), 1e-2)[0]
    with pytest.raises(DomainError):
        hda_outage(siso(1.0), c(1, 1, 0.8, 1), fin(10, 10), 1.0)


def test_dist_hda_examples():
    real = FadingRealization.from_channel(np.diag([1.0, 2.0]), 1.0)
    got = dist_hda(real, c(2, 2, 2, 0.5), fin(100, 10), 0.1)[0]
    assert got == pytest.approx(0.5 * (1 / (11 + 10 * 51) + 1 / (11 + 10 * 201)))
    zero = FadingRealization.from_channel(np.zeros((1, 1)), 0.5)
    assert dist_hda(zero, c(1, 1, 2, 1), fin(100, 10), 0.2)[0] == pytest.approx(1 / (1 + 5 + 5))
    assert dist_hda(zero, c(1, 1, 2, 1), fin(100, 10), 1e300)[0] == pytest.approx(1 / 6)


def test_ls_layers_decoded_examples():
    rates = np.array([1.0, 1.0, 1.0])
    assert ls_layers_decoded(siso(1e12), SISO, fin(1e6, 1), rates, 3)[0] == 3
    assert ls_layers_decoded(FadingRealization.from_channel([[0.0]], 0.0), SISO, fin(1e6, 1), rates, 3)[0] == 0
    assert ls_layers_decoded(siso(1e-9, 1e30), SISO, fin(10, 1), rates, 3)[0] == 3
    with pytest.raises(ConfigError):
        ls_layers_decoded(siso(1.0), SISO, fin(10, 1), rates, 2)


def test_bs_layers_decoded_examples():
    assert bs_layers_decoded(siso(1.0), SISO, fin(1e12, 1), [1.0, 1.0], [0.5, 0.0], 2)[0] == 2
    # equal exponents: the first layer has no power
    assert bs_layers_decoded(siso(1.0), SISO, fin(1e3, 1), [1.0, 1.0], [1.0, 0.0], 2)[0] == 0
    with pytest.raises(DomainError):
        bs_layers_decoded(siso(1.0), SISO, fin(10, 1), [1.0, 1.0], [0.2, 0.5], 2)


def test_bs_single_layer_equals_ld_per_trial():
    cfg = c(2, 2, 2, 0.5)
    real = FadingRealization.draw(cfg, RngStream(11, 0), 20000)
    f = finite_snr(cfg, 25)
    for R in (1.0, 4.0, 9.0):
        n = bs_layers_decoded(real, cfg, f, [R], [0.0], 1)
        assert np.array_equal(n == 0, ld_outage(real, cfg, f, R))


def test_notx_low_snr_matches_analytic_mean():
    ref = quad(lambda g: math.exp(-g) / (1 + g), 0, math.inf)[0]
    assert ref == pytest.approx(0.5963, abs=1e-4)
    mean, se = mc_expected_distortion(SISO, fin(1e-9, 1.0), SchemeParams("notx"), 200000, 5)
    assert abs(mean - ref) <= 4 * se


def test_partial_bound_matches_quadrature():
    cfg = c(1, 1, 1, 1)
    real = siso(0.7)
    f = fin(10, 3)
    got = trial_distortions(real, cfg, f, SchemeParams("partial-informed"))[0]
    a = 2 ** (cfg.b * math.log2(1 + 10 * 0.7))
    ref = quad(lambda g: math.exp(-g) / (3 * g + a), 0, math.inf)[0]
    assert got == pytest.approx(ref, rel=1e-9)


def test_scheme_params_validation():
    with pytest.raises(ConfigError):
        SchemeParams("ld")
    with pytest.raises(ConfigError):
        SchemeParams("zz")
    with pytest.raises(ConfigError):
        SchemeParams("bs", rates=[1.0, 2.0], xi=[0.5])
    with pytest.raises(ConfigError):
        default_params(c(1, 1, 0.5, 1), "hda", 100.0)


def test_finite_snr_orderings_paired():
    cfg = c(1, 1, 2, 1)
    res = mc_sweep(cfg, [10, 20, 30], ["ld", "sscc", "hda", "partial-informed", "informed", "notx"], 20000, 1)
    for db in (10, 20, 30):
        m = {s: res.lookup(db, s)[2] for s in ("ld", "sscc", "partial-informed", "informed", "notx")}
        assert m["ld"] <= m["sscc"] + 1e-15
        assert m["informed"] <= m["partial-informed"] + 1e-15
        assert m["partial-informed"] <= m["ld"] + 1e-15
        assert m["ld"] <= m["notx"] + 1e-15


def test_determinism_and_block_independence():
    cfg = c(2, 1, 2, 0.5)
    a = mc_sweep(cfg, [20, 30], ["ld", "bs"], BLOCK + 17, 9)
    b = mc_sweep(cfg, [20, 30], ["ld", "bs"], BLOCK + 17, 9)
    assert a.rows == b.rows
    # one scheme alone sees the same draws as inside a sweep
    f = finite_snr(cfg, 30)
    mean, _ = mc_expected_distortion(cfg, f, default_params(cfg, "ld", f.rho), BLOCK + 17, 9)
    assert mean == a.lookup(30, "ld")[2]


def test_fit_exponent_examples():
    assert fit_exponent([(10, 0.1), (100, 0.01), (1000, 0.001)]) == pytest.approx(1.0)
    assert fit_exponent([(10, 0.3), (100, 0.3)]) == pytest.approx(0.0)
    with pytest.raises(DomainError):
        fit_exponent([(10, 0.1)])


@given(st.floats(0.1, 5), st.floats(-3, 3))
def test_fit_exponent_recovers_power_law(slope, logc):
    pts = [(r, math.exp(logc) * r**-slope) for r in (1e2, 1e3, 1e4, 1e5)]
    assert fit_exponent(pts) == pytest.approx(slope, rel=1e-9)


def test_sweep_series_and_lookup():
    res = mc_sweep(SISO, [0, 10], ["notx"], 100, 2)
    s = res.series("notx")
    assert [p[0] for p in s] == pytest.approx([1.0, 10.0])
    with pytest.raises(KeyError):
        res.lookup(5, "notx")


ALL_SCHEMES = ["notx", "sscc", "ld", "hda", "ls", "bs", "partial-informed", "informed"]


@pytest.mark.parametrize("cfg", [c(1, 1, 2, 1), c(2, 2, 1.5, 0.5), c(3, 2, 2, 0.5)])
def test_conditional_estimator_matches_plain(cfg):
    plain = mc_sweep(cfg, [5, 15], ALL_SCHEMES, 100_000, 21)
    cond = mc_sweep(cfg, [5, 15], ALL_SCHEMES, 100_000, 22, estimator="conditional")
    for a, b in zip(plain.rows, cond.rows):
        assert a[:2] == b[:2]
        assert abs(a[2] - b[2]) <= 4.5 * math.hypot(a[3], b[3]) + 1e-12, (a, b)
        if a[1] != "partial-informed":  # the only scheme whose estimator is unchanged
            assert b[3] <= a[3]


@pytest.mark.parametrize("scheme", ["ld", "sscc", "hda", "ls", "bs", "informed"])
def test_conditional_is_mean_over_gamma_for_fixed_channel(scheme):
    cfg = c(2, 2, 2, 0.5)
    f = finite_snr(cfg, 12)
    p = default_params(cfg, scheme, f.rho)
    base = FadingRealization.draw(cfg, RngStream(8, 0), 3)
    q = np.linspace(0, 1, 20001)[1:-1]
    gam = -np.log1p(-q)  # Exp(1) quantiles
    for i in range(3):
        h = np.repeat(base.h[i : i + 1], gam.size, axis=0)
        brute = np.mean(trial_distortions(FadingRealization.from_channel(h, gam), cfg, f, p))
        exact = conditional_distortions(FadingRealization.from_channel(base.h[i], 0.0), cfg, f, p)[0]
        assert exact == pytest.approx(brute, rel=2e-3)


def test_conditional_notx_is_exact():
    f = fin(1e-9, 1.0)
    v = conditional_distortions(siso(1.0), SISO, f, SchemeParams("notx"))[0]
    assert v == pytest.approx(quad(lambda g: math.exp(-g) / (1 + g), 0, math.inf)[0], rel=1e-12)


def test_unknown_estimator():
    with pytest.raises(ConfigError):
        mc_sweep(SISO, [10], ["ld"], 10, 1, estimator="fancy")
