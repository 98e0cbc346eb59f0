"""Acceptance criteria, one test per criterion at its stated tolerance.

Each check returns ``(ok, detail)``; the wrapper records one pass/fail line,
printed in the pytest terminal summary. Run this file directly to execute the
checks without pytest.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES  # noqa: E402
from distexp import make_system  # noqa: E402
from distexp.bs_lp import delta_bs_lp  # noqa: E402
from distexp.cli import run_verify  # noqa: E402
from distexp.core_model import finite_snr  # noqa: E402
from distexp.exponents import (  # noqa: E402
    delta_bs_finite,
    delta_bs_infinite,
    delta_ld,
    delta_upper,
    interior_b_points,
)
from distexp.montecarlo import fit_exponent, mc_sweep  # noqa: E402
from distexp.numerics import (  # noqa: E402
    RngStream,
    capacity_from_eigs,
    exp_integral_e1,
    exp_scaled_e1,
    gram_eigenvalues,
    gram_matrix,
    lambert_w0,
    sample_channel,
)
from distexp.oracle import GridSpec  # noqa: E402

SWEEP_CONFIGS = [(1, 1), (2, 1), (1, 2), (2, 2), (3, 2), (4, 1)]
SWEEP_NUS = [0.0, 0.5, 1.0, 3.0]
MC_DBS = [30, 35, 40, 45, 50]


def record(name, ok, detail, expected_fail=False):
    tag = "PASS" if ok else ("FAIL (expected)" if expected_fail else "FAIL")
    ACCEPTANCE_LINES.append(f"[{tag}] {name}: {detail}")


# ---------------------------------------------------------------- checks

def check_closed_vs_oracle():
    t0 = time.time()
    grid = GridSpec(alpha_step=0.01, beta_step=0.01, r_step=0.005)
    worst = {"upper": 0.0, "ld": 0.0, "hda": 0.0, "ls": 0.0}
    fails = []
    for mt, mr in SWEEP_CONFIGS:
        for nu in SWEEP_NUS:
            dev, bad = run_verify(make_system(mt, mr, 1.0, nu), grid, n_b=40, ls_layers=10_000,
                                  tol=0.05, ls_tol=0.01)
            for k, v in dev.items():
                worst[k] = max(worst[k], v)
            fails += [(mt, mr, nu, *f) for f in bad]
    elapsed = time.time() - t0
    ok = not fails and elapsed <= 600
    detail = " ".join(f"{k}={v:.4f}" for k, v in worst.items()) + f" ({elapsed:.0f}s)"
    if fails:
        detail += f" first failure {fails[0]}"
    return ok, detail


def check_miso_simo():
    worst = 0.0
    for mt, mr in [(1, 1), (2, 1), (1, 2), (4, 1)]:
        for nu in SWEEP_NUS:
            cfg = make_system(mt, mr, 1.0, nu)
            for b in interior_b_points(cfg, 40):
                c = cfg.with_b(float(b))
                worst = max(worst, abs(delta_bs_infinite(c).value - delta_upper(c).value))
    return worst <= 1e-9, f"max |layered - upper| = {worst:.2e}"


def check_layer_convergence():
    cfg = make_system(2, 2, 2.0, 0.5)
    Ls = [2**j for j in range(11)]
    vals = [delta_bs_finite(cfg, L).value for L in Ls]
    mono = all(y >= x for x, y in zip(vals, vals[1:]))
    inf = delta_bs_infinite(cfg).value
    ok = (
        mono
        and abs(vals[-1] - inf) <= 1e-3
        and abs(inf - 2.0) <= 1e-9
        and abs(vals[1] - 33 / 17) <= 1e-9
    )
    return ok, f"monotone={mono} L1024={vals[-1]:.9f} inf={inf:.12f} L2={vals[1]:.10f}"


def check_lp_sandwich():
    t0 = time.time()
    worst_lo = worst_hi = -math.inf
    for L in (2, 8):
        for b in np.arange(0.5, 8.0 + 1e-9, 0.25):
            cfg = make_system(3, 2, float(b), 0.5)
            v = delta_bs_lp(cfg, L).value
            worst_lo = max(worst_lo, delta_bs_finite(cfg, L).value - v)
            worst_hi = max(worst_hi, v - delta_upper(cfg).value)
    cfg = make_system(2, 2, 1.2, 0.5)
    v12 = delta_bs_lp(cfg, 8).value
    ld12 = delta_ld(cfg).value
    elapsed = time.time() - t0
    ok = worst_lo <= 1e-6 and worst_hi <= 1e-6 and v12 >= ld12 - 1e-3 and elapsed <= 300
    return ok, (f"max(finite-lp)={worst_lo:.2e} max(lp-upper)={worst_hi:.2e} "
                f"b=1.2: lp={v12:.6f} ld={ld12:.6f} ({elapsed:.1f}s)")


_MC_CACHE = {}


def siso_slopes():
    if not _MC_CACHE:
        cfg = make_system(1, 1, 2.0, 1.0)
        res = mc_sweep(cfg, MC_DBS, ["ld", "hda", "notx"], 1_000_000, 2024, estimator="conditional")
        _MC_CACHE.update({s: fit_exponent(res.series(s)) for s in ("ld", "hda", "notx")})
    return _MC_CACHE


def check_mc_ld():
    s = siso_slopes()["ld"]
    return abs(s - 4 / 3) <= 0.15, f"slope {s:.4f} (target 4/3 +- 0.15)"


def check_mc_hda():
    s = siso_slopes()["hda"]
    return abs(s - 1.5) <= 0.15, f"slope {s:.4f} (target 1.5 +- 0.15)"


def check_mc_notx():
    s = siso_slopes()["notx"]
    return abs(s - 1.0) <= 0.05, f"slope {s:.4f} (target 1 +- 0.05, SISO nu=1, 30-50 dB)"


def check_finite_snr_orderings():
    dbs = [0, 10, 20, 30, 40, 50]
    bad = []
    for mt, mr in [(1, 1), (3, 3)]:
        res = mc_sweep(make_system(mt, mr, 2.0, 1.0), dbs, ["ld", "sscc", "partial-informed"], 100_000, 7)
        for db in dbs:
            ld, sscc, pb = (res.lookup(db, s) for s in ("ld", "sscc", "partial-informed"))
            if not ld[2] <= sscc[2]:
                bad.append((mt, mr, db, "ld>sscc"))
            for row in (ld, sscc):
                if not row[2] >= pb[2] - 3 * pb[3]:
                    bad.append((mt, mr, db, row[1] + "<bound"))
    return not bad, "all points ordered" if not bad else f"violations {bad}"


def check_special_functions():
    import mpmath

    xs = np.geomspace(1e-6, 500.0, 1000)
    worst_e1 = 0.0
    with mpmath.workdps(30):
        for x in xs:
            # shifted integrand e^{-u} / (x + u) decays on a unit scale for every x
            xm = mpmath.mpf(float(x))
            ref = mpmath.exp(-xm) * mpmath.quad(lambda u: mpmath.exp(-u) / (xm + u), [0, xm, 1, 10, 100, mpmath.inf] if xm < 1 else [0, 1, 10, 100, mpmath.inf])
            worst_e1 = max(worst_e1, abs(float((exp_integral_e1(float(x)) - ref) / ref)))
    z = np.concatenate([np.linspace(-1 / math.e + 1e-6, 0, 500), np.geomspace(1e-6, 1e3, 1500)])
    w = lambert_w0(z)
    worst_w = float(np.max(np.abs(w * np.exp(w) - z)))
    f = exp_scaled_e1(xs)
    bracket = bool(np.all((0.5 * np.log1p(2 / xs) < f) & (f < np.log1p(1 / xs))))
    ok = worst_e1 <= 1e-10 and worst_w <= 1e-12 and bracket
    return ok, f"E1 max rel err {worst_e1:.2e}; max |W e^W - z| {worst_w:.2e}; bracket holds={bracket}"


def check_eigen_capacity():
    worst_tr = worst_fro = 0.0
    mono = True
    count = 0
    per = 10_000 // 64 + 1
    for mt in range(1, 9):
        for mr in range(1, 9):
            h = sample_channel(mt, mr, RngStream(99, mt * 10 + mr), per)
            g = gram_matrix(h)
            eig = gram_eigenvalues(h)
            tr = np.real(np.trace(g, axis1=-2, axis2=-1))
            fro = np.sum(np.abs(g) ** 2, axis=(-2, -1))
            worst_tr = max(worst_tr, float(np.max(np.abs(eig.sum(-1) - tr) / np.maximum(1, tr))))
            worst_fro = max(worst_fro, float(np.max(np.abs((eig**2).sum(-1) - fro) / np.maximum(1, fro))))
            caps = np.stack([capacity_from_eigs(eig, 10 ** (db / 10), mt) for db in range(-10, 61, 5)])
            mono &= bool(np.all(np.diff(caps, axis=0) > 0))
            count += per
    ok = worst_tr <= 1e-10 and worst_fro <= 1e-10 and mono and count >= 10_000
    return ok, f"{count} matrices: trace {worst_tr:.1e} frobenius {worst_fro:.1e} capacity monotone={mono}"


CRITERIA = [
    ("1 closed form vs oracle", check_closed_vs_oracle, False),
    ("2 MISO/SIMO layered = upper", check_miso_simo, False),
    ("3 layer convergence", check_layer_convergence, False),
    ("4 LP sandwich", check_lp_sandwich, False),
    ("5a MC slope LD", check_mc_ld, False),
    ("5b MC slope HDA", check_mc_hda, False),
    ("5c MC slope NoTx", check_mc_notx, True),
    ("6 finite-SNR orderings", check_finite_snr_orderings, False),
    ("7 special functions", check_special_functions, False),
    ("8 eigen/capacity identities", check_eigen_capacity, False),
]


def _run(name, fn, expected_fail=False):
    ok, detail = fn()
    record(name, ok, detail, expected_fail)
    assert ok, detail


@pytest.mark.parametrize(
    "name,fn",
    [
        pytest.param(
            n, f, id=n.split()[0],
            marks=pytest.mark.xfail(
                strict=True,
                reason="local slope of the no-transmission mean is nu - nu/(ln rho_s - Euler gamma); "
                "about 0.88 at 30-50 dB",
            ) if xf else (),
        )
        for n, f, xf in CRITERIA
    ],
)
def test_criterion(name, fn):
    xf = dict((n, x) for n, _, x in CRITERIA)[name]
    _run(name, fn, xf)


def test_notx_slope_gap_is_the_analytic_one():
    # Exact mean (1/rho_s) e^{1/rho_s} E1(1/rho_s); its fitted slope matches Monte Carlo,
    # and it only enters nu +- 0.05 once ln(rho_s) is near 20 (rho around 100 dB for nu = 1).
    def exact(dbs):
        pts = []
        for db in dbs:
            rs = finite_snr(make_system(1, 1, 2.0, 1.0), db).rho_s
            pts.append((10 ** (db / 10), float(exp_scaled_e1(1 / rs)) / rs))
        return fit_exponent(pts)

    assert siso_slopes()["notx"] == pytest.approx(exact(MC_DBS), abs=0.01)
    assert abs(exact(MC_DBS) - 1.0) > 0.05
    assert abs(exact([100, 105, 110, 115, 120]) - 1.0) <= 0.05


if __name__ == "__main__":
    failed = 0
    for name, fn, xf in CRITERIA:
        ok, detail = fn()
        record(name, ok, detail, xf)
        print(ACCEPTANCE_LINES[-1], flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
