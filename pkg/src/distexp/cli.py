"""Command-line front end writing CSV for external plotting.

Commands: ``exponents``, ``verify``, ``mc``, ``lp-sweep`` and ``fit``. Exit
status 0 on success, 1 when ``verify`` finds a deviation, 2 on usage or
configuration errors and 3 on I/O errors.

A flat ``key=value`` file given with ``--config`` pre-seeds long flags; flags
on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core_model import ConfigError, make_system
from .dmt import DomainError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
THREADS_ENV = "DISTEXP_THREADS"
DEFAULT_SCHEMES = "upper,informed,ld,hda,ls,bs-inf,optimal"


def fmt(x) -> str:
    """Nine significant digits, empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from None
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def b_grid(b_min: float, b_max: float, b_step: float) -> np.ndarray:
    if not (b_min > 0 and b_max >= b_min and b_step > 0):
        raise ConfigError("need 0 < b-min <= b-max and b-step > 0")
    n = int(math.floor((b_max - b_min) / b_step + 1e-9)) + 1
    return np.round(b_min + b_step * np.arange(n), 12)


def _write_rows(out, header, rows):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


# ---------------------------------------------------------------- exponents

def exponent_table(cfg, bs, schemes):
    from .exponents import evaluate_scheme

    rows = []
    for b in bs:
        c = cfg.with_b(float(b))
        vals = []
        for s in schemes:
            res = evaluate_scheme(c, s)
            vals.append(None if res is None else float(res.value))
        rows.append((float(b), vals))
    return rows


def cmd_exponents(args, out) -> int:
    cfg = make_system(args.mt, args.mr, 1.0, args.nu)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    from .exponents import SCHEMES

    for s in schemes:
        if s not in SCHEMES and not s.startswith("bs-L:"):
            raise ConfigError(f"unknown scheme {s!r}")
    rows = exponent_table(cfg, b_grid(args.b_min, args.b_max, args.b_step), schemes)
    if args.format == "long":
        _write_rows(out, ["b", "scheme", "value"],
                    [(b, s, v) for b, vals in rows for s, v in zip(schemes, vals)])
    else:
        _write_rows(out, ["b", *schemes], [(b, *vals) for b, vals in rows])
    return EXIT_OK


# ---------------------------------------------------------------- verify

def closed_forms():
    from .exponents import delta_hda, delta_ld, delta_ls, delta_upper

    return {"upper": delta_upper, "ld": delta_ld, "hda": delta_hda, "ls": delta_ls}


def run_verify(cfg, grid, n_b=40, b_max=8.0, ls_layers=10_000, tol=0.05, ls_tol=0.01, closed=None):
    """Oracle-versus-closed-form deviations over interior bandwidth ratios.

    Returns ``(max_dev, failures)`` with ``max_dev[form]`` the largest
    absolute deviation and ``failures`` a list of ``(b, form, dev)``.
    ``closed`` overrides the closed-form table (used to test detection).
    """
    from .exponents import interior_b_points
    from .oracle import ls_climb_finite, oracle_hda, oracle_ld, oracle_upper

    closed = closed or closed_forms()
    checks = {
        "upper": (lambda c: oracle_upper(c, grid), tol),
        "ld": (lambda c: oracle_ld(c, grid), tol),
        "hda": (lambda c: oracle_hda(c, grid), tol),
        "ls": (lambda c: ls_climb_finite(c, ls_layers), ls_tol),
    }
    max_dev = {k: 0.0 for k in checks}
    failures = []
    for b in interior_b_points(cfg, n_b, b_max=b_max):
        c = cfg.with_b(float(b))
        for name, (oracle, t) in checks.items():
            if name == "hda" and c.b * c.m_star <= 1:
                continue
            dev = abs(float(closed[name](c).value) - oracle(c))
            max_dev[name] = max(max_dev[name], dev)
            if not dev <= t:
                failures.append((float(b), name, dev))
    return max_dev, failures


def cmd_verify(args, out, closed=None) -> int:
    from .oracle import GridSpec

    cfg = make_system(args.mt, args.mr, 1.0, args.nu)
    grid = GridSpec(alpha_step=args.alpha_step, beta_step=args.beta_step, r_step=args.r_step)
    max_dev, failures = run_verify(
        cfg, grid, n_b=args.n_b, b_max=args.b_max, ls_layers=args.ls_layers,
        tol=args.tol, ls_tol=args.ls_tol, closed=closed,
    )
    out.write(f"# config {cfg.m_t}x{cfg.m_r} nu={fmt(cfg.nu)}\n")
    out.write("closed_form,max_abs_deviation\n")
    for name, dev in max_dev.items():
        out.write(f"{name},{fmt(dev)}\n")
    for b, name, dev in failures:
        out.write(f"FAIL b={fmt(b)} {name} deviation={fmt(dev)}\n")
    out.write("PASS\n" if not failures else f"FAILED {len(failures)}\n")
    return EXIT_OK if not failures else EXIT_VERIFY


# ---------------------------------------------------------------- mc

def rho_grid(args):
    if args.rho_db:
        return [float(x) for x in args.rho_db.split(",")]
    if args.rho_db_step <= 0 or args.rho_db_max < args.rho_db_min:
        raise ConfigError("bad SNR grid")
    n = int(math.floor((args.rho_db_max - args.rho_db_min) / args.rho_db_step + 1e-9)) + 1
    return [round(args.rho_db_min + i * args.rho_db_step, 9) for i in range(n)]


def mc_rows(cfg, rhos, schemes, trials, seed, layers, estimator="plain"):
    from .montecarlo import fit_exponent, mc_sweep

    res = mc_sweep(cfg, rhos, schemes, trials, seed, layers, estimator)
    rows = list(res.rows)
    if len(rhos) >= 2:
        for s in schemes:
            rows.append(("slope", s, fit_exponent(res.series(s)), None, None))
    return rows


def cmd_mc(args, out) -> int:
    from .montecarlo import SCHEME_TAGS

    cfg = make_system(args.mt, args.mr, args.b, args.nu)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    for s in schemes:
        if s not in SCHEME_TAGS:
            raise ConfigError(f"unknown scheme {s!r}; choose from {','.join(SCHEME_TAGS)}")
        if s == "hda" and cfg.b * cfg.m_star <= 1:
            raise ConfigError("scheme 'hda' needs b * m_star > 1")
    rows = mc_rows(cfg, rho_grid(args), schemes, args.trials, args.seed, args.layers, args.estimator)
    buf = io.StringIO()
    _write_rows(buf, ["rho_db", "scheme", "mean", "stderr", "trials"], rows)
    if args.out in (None, "-"):
        out.write(buf.getvalue())
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------- lp-sweep

def cmd_lp_sweep(args, out) -> int:
    from .bs_lp import delta_bs_lp

    cfg = make_system(args.mt, args.mr, 1.0, args.nu)
    layers = [int(x) for x in args.layers.split(",")]
    if any(L < 1 for L in layers):
        raise ConfigError("layers must be >= 1")
    bs = b_grid(args.b_min, args.b_max, args.b_step)
    jobs = [(float(b), L) for b in bs for L in layers]
    dump = None
    if args.dump:
        dump = open(args.dump, "w")

    def solve(job):
        b, L = job
        return delta_bs_lp(cfg.with_b(b), L, solver=args.solver, q_stride=args.q_stride, dump=dump).value

    try:
        workers = 1 if dump is not None else thread_count()
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                vals = list(pool.map(solve, jobs))
        else:
            vals = [solve(j) for j in jobs]
    finally:
        if dump is not None:
            dump.close()
    table = dict(zip(jobs, vals))
    names = [f"bs-lp:{L}" for L in layers]
    if args.format == "long":
        _write_rows(out, ["b", "scheme", "value"],
                    [(b, n, table[(float(b), L)]) for b in bs for n, L in zip(names, layers)])
    else:
        _write_rows(out, ["b", *names], [(b, *(table[(float(b), L)] for L in layers)) for b in bs])
    return EXIT_OK


# ---------------------------------------------------------------- fit

def cmd_fit(args, out) -> int:
    from .montecarlo import fit_exponent

    with open(args.input, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"rho_db", "scheme", "mean"} <= set(rows[0]):
        raise ConfigError("input must be an mc CSV with rho_db, scheme and mean columns")
    series = {}
    for r in rows:
        if r["rho_db"] == "slope":
            continue
        db = float(r["rho_db"])
        if args.rho_db_min is not None and db < args.rho_db_min:
            continue
        if args.rho_db_max is not None and db > args.rho_db_max:
            continue
        series.setdefault(r["scheme"], []).append((10 ** (db / 10.0), float(r["mean"])))
    wanted = args.scheme.split(",") if args.scheme else list(series)
    out.write("scheme,slope\n")
    for s in wanted:
        if s not in series:
            raise ConfigError(f"scheme {s!r} not in input")
        out.write(f"{s},{fmt(fit_exponent(series[s]))}\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _system_flags(p, with_b=False):
    p.add_argument("--mt", type=int, required=True, help="transmit antennas")
    p.add_argument("--mr", type=int, required=True, help="receive antennas")
    p.add_argument("--nu", type=float, required=True, help="side-information quality")
    if with_b:
        p.add_argument("--b", type=float, required=True, help="bandwidth ratio")


def _b_flags(p, b_min=0.1, b_max=8.0, b_step=0.1):
    p.add_argument("--b-min", type=float, default=b_min)
    p.add_argument("--b-max", type=float, default=b_max)
    p.add_argument("--b-step", type=float, default=b_step)
    p.add_argument("--format", choices=("wide", "long"), default="wide")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distexp", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="key=value file pre-seeding long flags")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="closed-form exponents over a b grid")
    _system_flags(p)
    _b_flags(p)
    p.add_argument("--schemes", default=DEFAULT_SCHEMES)

    p = sub.add_parser("verify", help="grid oracles versus closed forms")
    _system_flags(p)
    p.add_argument("--alpha-step", type=float, default=0.01)
    p.add_argument("--beta-step", type=float, default=0.01)
    p.add_argument("--r-step", type=float, default=0.005)
    p.add_argument("--n-b", type=int, default=40)
    p.add_argument("--b-max", type=float, default=8.0)
    p.add_argument("--ls-layers", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--ls-tol", type=float, default=0.01)

    p = sub.add_parser("mc", help="Monte Carlo expected distortion over SNR")
    _system_flags(p, with_b=True)
    p.add_argument("--schemes", default="ld,sscc")
    p.add_argument("--rho-db", help="comma-separated SNR points in dB (overrides the range)")
    p.add_argument("--rho-db-min", type=float, default=30.0)
    p.add_argument("--rho-db-max", type=float, default=50.0)
    p.add_argument("--rho-db-step", type=float, default=5.0)
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--layers", type=int, default=4, help="layers for ls and bs")
    p.add_argument("--estimator", choices=("plain", "conditional"), default="plain",
                   help="conditional integrates the side-information gain analytically")
    p.add_argument("--out", default="-")

    p = sub.add_parser("lp-sweep", help="layered superposition LP over a b grid")
    _system_flags(p)
    _b_flags(p, 0.5, 8.0, 0.25)
    p.add_argument("--layers", default="2,8", help="comma-separated layer counts")
    p.add_argument("--solver", choices=("simplex", "highs", "highs-sparse"), default="simplex")
    p.add_argument("--q-stride", type=int, default=1)
    p.add_argument("--dump", help="write every LP instance to this file")

    p = sub.add_parser("fit", help="fit slopes to an mc CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--scheme")
    p.add_argument("--rho-db-min", type=float)
    p.add_argument("--rho-db-max", type=float)
    return ap


def read_config(path: str) -> list[str]:
    """Turn a ``key=value`` file into long-flag tokens."""
    tokens = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            tokens += ["--" + key.replace("_", "-"), value]
    return tokens


def _split_config(argv):
    # pull --config out so its tokens can go right after the command name
    argv = list(argv)
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return argv[i + 1], argv[:i] + argv[i + 2:]
        if a.startswith("--config="):
            return a.split("=", 1)[1], argv[:i] + argv[i + 1:]
    return None, argv


COMMANDS = {
    "exponents": cmd_exponents,
    "verify": cmd_verify,
    "mc": cmd_mc,
    "lp-sweep": cmd_lp_sweep,
    "fit": cmd_fit,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        cfg_path, argv = _split_config(argv)
        if cfg_path is not None:
            cmd_at = next((i for i, a in enumerate(argv) if a in COMMANDS), None)
            if cmd_at is None:
                parser.error("missing command")
            argv = argv[: cmd_at + 1] + read_config(cfg_path) + argv[cmd_at + 1:]
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        return COMMANDS[args.command](args, out)
    except (ConfigError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
