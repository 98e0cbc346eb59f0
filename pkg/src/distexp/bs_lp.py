"""Linear program for superposition layering (BS-LD) and a dense simplex solver.

With a common integer part ``k`` for every layer, the gain of layer ``l`` is
``r_l = k (xi_{l-1} - xi_l) + delta_l`` and its diversity is
``phi_k xi_{l-1} - upsilon_k delta_l``. Fixing ``q``, the number of leading
layers whose cumulative rate stays at or below ``nu``, every layer exponent
becomes linear, so the best allocation is an LP. Enumerating ``(q, k)`` and
keeping the best LP value gives the exponent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_model import SystemConfig
from .dmt import DomainError, _phi, _upsilon
from .exponents import ExponentResult, _bs_scaled, bs_regime

GAP_SLACK = 1e-7


class LpError(RuntimeError):
    """Solver failure: ``status`` is ``"infeasible"``, ``"unbounded"`` or ``"iteration_limit"``."""

    def __init__(self, status: str, msg: str = ""):
        super().__init__(f"{status}: {msg}" if msg else status)
        self.status = status


@dataclass
class LpInstance:
    """``maximize objective @ x`` subject to ``matrix @ x (<= or =) rhs`` and bounds.

    ``senses`` holds ``"<="`` or ``"="`` per row; ``bounds`` one ``(lo, hi)``
    pair per variable, with ``-inf``/``inf`` allowed.
    """

    objective: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray
    senses: list
    bounds: list
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        self.rhs = np.asarray(self.rhs, dtype=float)
        m, n = self.matrix.shape
        if self.objective.shape != (n,) or self.rhs.shape != (m,):
            raise ValueError("inconsistent LP dimensions")
        if len(self.senses) != m or len(self.bounds) != n:
            raise ValueError("senses/bounds do not match LP dimensions")
        if any(s not in ("<=", "=") for s in self.senses):
            raise ValueError("senses must be '<=' or '='")
        if any(lo > hi for lo, hi in self.bounds):
            raise ValueError("variable bound with lo > hi")


@dataclass(frozen=True)
class LayeredAllocation:
    """Per-layer power exponents ``xi_1..xi_L`` (``xi_0 = 1``) and offsets ``delta``."""

    xi: np.ndarray
    delta: np.ndarray
    k: int
    q: int

    @property
    def gaps(self) -> np.ndarray:
        return -np.diff(np.concatenate([[1.0], self.xi]))

    @property
    def rates(self) -> np.ndarray:
        return self.k * self.gaps + self.delta


# ---------------------------------------------------------------- simplex

def _pivot(T, row, col):
    T[row] /= T[row, col]
    others = np.arange(T.shape[0]) != row
    T[others] -= np.outer(T[others, col], T[row])


def _run(T, basis, cost, tol, max_iter):
    # T: m x (N + 1) tableau with rhs in the last column; maximise cost @ x
    n = T.shape[1] - 1
    for _ in range(max_iter):
        rc = cost - cost[basis] @ T[:, :n]
        cand = np.nonzero(rc > tol)[0]
        if cand.size == 0:
            return
        col = cand[0]  # Bland: lowest index
        a = T[:, col]
        pos = a > tol
        if not pos.any():
            raise LpError("unbounded", f"column {col}")
        ratio = np.full(a.shape, np.inf)
        ratio[pos] = T[pos, -1] / a[pos]
        best = ratio.min()
        ties = np.nonzero(ratio <= best + tol * max(1.0, abs(best)))[0]
        row = ties[np.argmin(basis[ties])]
        _pivot(T, row, col)
        basis[row] = col
    raise LpError("iteration_limit")


def simplex_solve(lp: LpInstance, tol: float = 1e-9, max_iter: int = 50000):
    """Two-phase dense tableau simplex with Bland's anti-cycling rule.

    Returns ``(value, x)``. Raises :class:`LpError` when the problem is
    infeasible or unbounded.
    """
    A, b, c = lp.matrix, lp.rhs.copy(), lp.objective
    m, n = A.shape
    # x = shift + D @ y, y >= 0
    cols, shift, extra_rows = [], np.zeros(n), []
    for j, (lo, hi) in enumerate(lp.bounds):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo):
            shift[j] = lo
            cols.append(e)
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    D = np.array(cols).T  # n x ny
    ny = D.shape[1]
    Ay = A @ D
    by = b - A @ shift
    senses = list(lp.senses)
    rows = [Ay[i] for i in range(m)]
    rhs = list(by)
    for jy, ub in extra_rows:
        r = np.zeros(ny)
        r[jy] = 1.0
        rows.append(r)
        rhs.append(ub)
        senses.append("<=")
    rows = np.array(rows).reshape(len(rhs), ny)
    rhs = np.array(rhs)
    mm = rows.shape[0]

    n_slack = sum(s == "<=" for s in senses)
    N = ny + n_slack + mm  # one artificial per row, unused ones stay at zero
    T = np.zeros((mm, N + 1))
    basis = np.zeros(mm, dtype=int)
    art_cols = []
    si = ny
    for i in range(mm):
        T[i, :ny] = rows[i]
        T[i, -1] = rhs[i]
        if senses[i] == "<=":
            T[i, si] = 1.0
            slack = si
            si += 1
        else:
            slack = None
        if T[i, -1] < 0:
            T[i] *= -1.0
        if slack is not None and T[i, slack] > 0:
            basis[i] = slack
        else:
            a_col = ny + n_slack + i
            T[i, a_col] = 1.0
            basis[i] = a_col
            art_cols.append(a_col)

    art = np.zeros(N, dtype=bool)
    art[art_cols] = True
    if art_cols:
        cost1 = np.where(art, -1.0, 0.0)
        _run(T, basis, cost1, tol, max_iter)
        infeas = -cost1[basis] @ T[:, -1]
        if infeas > 1e-7 * max(1.0, np.abs(rhs).max()):
            raise LpError("infeasible", f"phase-one residual {infeas:.3g}")
        # drive remaining artificials out of the basis
        for i in range(mm):
            if art[basis[i]]:
                nz = np.nonzero(np.abs(T[i, :ny + n_slack]) > tol)[0]
                if nz.size:
                    _pivot(T, i, nz[0])
                    basis[i] = nz[0]
        keep = np.nonzero(~art[basis])[0]
        T, basis = T[keep], basis[keep]
    T[:, ny + n_slack:N] = 0.0  # freeze artificials at zero
    cost2 = np.zeros(N)
    cost2[:ny] = c @ D
    _run(T, basis, cost2, tol, max_iter)
    y = np.zeros(N)
    y[basis] = T[:, -1]
    x = shift + D @ y[:ny]
    return float(c @ x), x


def simplex_solve_highs(lp: LpInstance):
    """Same contract as :func:`simplex_solve`, backed by scipy's HiGHS."""
    from scipy.optimize import linprog

    le = [i for i, s in enumerate(lp.senses) if s == "<="]
    eq = [i for i, s in enumerate(lp.senses) if s == "="]
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
              for lo, hi in lp.bounds]
    res = linprog(
        -lp.objective,
        A_ub=lp.matrix[le] if le else None,
        b_ub=lp.rhs[le] if le else None,
        A_eq=lp.matrix[eq] if eq else None,
        b_eq=lp.rhs[eq] if eq else None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        raise LpError("infeasible", res.message)
    if res.status == 3:
        raise LpError("unbounded", res.message)
    if res.status != 0:
        raise LpError("iteration_limit", res.message)
    return float(lp.objective @ res.x), res.x


SOLVERS = {"simplex": simplex_solve, "highs": simplex_solve_highs}


# ---------------------------------------------------------------- BS-LD program

def build_lp(cfg: SystemConfig, L: int, q: int, k: int, gap_slack: float = GAP_SLACK) -> LpInstance:
    """LP over ``(t, delta_1..delta_L, xi_1..xi_L)`` for fixed ``q`` and ``k``.

    Rows, with ``S_l = k (1 - xi_l) + delta_1 + ... + delta_l`` the cumulative
    gain after ``l`` layers:

    * ``t <= nu + phi_k - upsilon_k delta_1``;
    * ``t <= nu + phi_k xi_l - upsilon_k delta_{l+1}`` for ``1 <= l <= q``;
    * ``t <= b S_l + phi_k xi_l - upsilon_k delta_{l+1}`` for ``q < l < L``;
    * ``t <= b S_L`` (or ``t <= nu`` when ``q = L``);
    * ``b S_q <= nu`` when ``q >= 1``;
    * ``0 <= delta_l <= (1 - gap_slack)(xi_{l-1} - xi_l)``, ``1 >= xi_1 >= ... >= xi_L >= 0``.
    """
    if L < 1:
        raise DomainError("L must be >= 1")
    if not 0 <= k <= cfg.m_star - 1:
        raise DomainError(f"k={k} outside [0, {cfg.m_star - 1}]")
    if not 0 <= q <= L:
        raise DomainError(f"q={q} outside [0, {L}]")
    b, nu = cfg.b, cfg.nu
    phi, ups = _phi(cfg, k), _upsilon(cfg, k)
    n = 1 + 2 * L
    T, D = 0, lambda l: l  # delta_l at column l (1-based)

    def X(l):  # xi_l at column L + l
        return L + l

    rows, rhs = [], []

    def add(coef: dict, value: float):
        r = np.zeros(n)
        for j, v in coef.items():
            r[j] += v
        rows.append(r)
        rhs.append(value)

    def cum(coef, l, scale):
        # scale * S_l without its constant k: -k xi_l + sum delta
        coef[X(l)] = coef.get(X(l), 0.0) - scale * k
        for i in range(1, l + 1):
            coef[D(i)] = coef.get(D(i), 0.0) + scale

    add({T: 1.0, D(1): ups}, nu + phi)
    for l in range(1, L):
        if l <= q:
            add({T: 1.0, X(l): -phi, D(l + 1): ups}, nu)
        else:
            coef = {T: 1.0, X(l): -phi, D(l + 1): ups}
            cum(coef, l, -b)
            add(coef, b * k)
    if q == L:
        add({T: 1.0}, nu)
    else:
        coef = {T: 1.0}
        cum(coef, L, -b)
        add(coef, b * k)
    if q >= 1:
        coef = {}
        cum(coef, q, b)
        add(coef, nu - b * k)
    keep = 1.0 - gap_slack
    for l in range(1, L + 1):
        coef = {D(l): 1.0, X(l): keep}
        if l == 1:
            add(coef, keep)
        else:
            coef[X(l - 1)] = -keep
            add(coef, 0.0)
    for l in range(2, L + 1):
        add({X(l): 1.0, X(l - 1): -1.0}, 0.0)

    obj = np.zeros(n)
    obj[T] = 1.0
    bounds = [(0.0, np.inf)] + [(0.0, np.inf)] * L + [(0.0, 1.0)] * L
    names = ["t"] + [f"delta_{l}" for l in range(1, L + 1)] + [f"xi_{l}" for l in range(1, L + 1)]
    return LpInstance(obj, np.array(rows), np.array(rhs), ["<="] * len(rows), bounds, names)


def _build_sparse(cfg: SystemConfig, L: int, q: int, k: int, gap_slack: float = GAP_SLACK):
    """Same program as :func:`build_lp` with running sums ``S_l = delta_1 + ... + delta_l``
    as extra variables (appended after ``xi``), so every row has O(1) entries.

    Returns ``linprog`` arguments for a minimisation of ``-t``.
    """
    from scipy import sparse

    b, nu = cfg.b, cfg.nu
    phi, ups = _phi(cfg, k), _upsilon(cfg, k)
    n = 1 + 3 * L
    D = lambda l: l  # noqa: E731
    X = lambda l: L + l  # noqa: E731
    S = lambda l: 2 * L + l  # noqa: E731
    ri, ci, vals, rhs = [], [], [], []

    def add(coef, value):
        r = len(rhs)
        for j, v in coef.items():
            ri.append(r)
            ci.append(j)
            vals.append(v)
        rhs.append(value)

    def cum(coef, l, scale):
        coef[X(l)] = coef.get(X(l), 0.0) - scale * k
        coef[S(l)] = coef.get(S(l), 0.0) + scale

    add({0: 1.0, D(1): ups}, nu + phi)
    for l in range(1, L):
        coef = {0: 1.0, X(l): -phi, D(l + 1): ups}
        if l <= q:
            add(coef, nu)
        else:
            cum(coef, l, -b)
            add(coef, b * k)
    if q == L:
        add({0: 1.0}, nu)
    else:
        coef = {0: 1.0}
        cum(coef, L, -b)
        add(coef, b * k)
    if q >= 1:
        coef = {}
        cum(coef, q, b)
        add(coef, nu - b * k)
    keep = 1.0 - gap_slack
    for l in range(1, L + 1):
        coef = {D(l): 1.0, X(l): keep}
        if l == 1:
            add(coef, keep)
        else:
            coef[X(l - 1)] = -keep
            add(coef, 0.0)
    for l in range(2, L + 1):
        add({X(l): 1.0, X(l - 1): -1.0}, 0.0)
    a_ub = sparse.csr_matrix((vals, (ri, ci)), shape=(len(rhs), n))

    ei, ej, ev = [], [], []
    for l in range(1, L + 1):
        ei += [l - 1, l - 1]
        ej += [S(l), D(l)]
        ev += [1.0, -1.0]
        if l > 1:
            ei.append(l - 1)
            ej.append(S(l - 1))
            ev.append(-1.0)
    a_eq = sparse.csr_matrix((ev, (ei, ej)), shape=(L, n))
    c = np.zeros(n)
    c[0] = -1.0
    bounds = [(0, None)] * (1 + L) + [(0, 1)] * L + [(0, None)] * L
    return dict(c=c, A_ub=a_ub, b_ub=np.array(rhs), A_eq=a_eq, b_eq=np.zeros(L), bounds=bounds)


def _solve_sparse(cfg, L, q, k):
    from scipy.optimize import linprog

    res = linprog(method="highs", **_build_sparse(cfg, L, q, k))
    if res.status != 0:
        raise LpError({2: "infeasible", 3: "unbounded"}.get(res.status, "iteration_limit"), res.message)
    return -float(res.fun), res.x[: 1 + 2 * L]


def format_lp(lp: LpInstance) -> str:
    """Plain-text dump: a header of variable names, then one row per constraint."""
    out = ["# " + " ".join(lp.names or [f"x{j}" for j in range(lp.matrix.shape[1])])]
    out.append("max " + " ".join(f"{v:.9g}" for v in lp.objective))
    for row, s, r in zip(lp.matrix, lp.senses, lp.rhs):
        out.append(" ".join(f"{v:.9g}" for v in row) + f" {s} {r:.9g}")
    out.append("bounds " + " ".join(f"[{lo:.9g},{hi:.9g}]" for lo, hi in lp.bounds))
    return "\n".join(out)


def _allocation(x: np.ndarray, L: int, k: int, q: int) -> LayeredAllocation:
    return LayeredAllocation(xi=x[1 + L:].copy(), delta=x[1:1 + L].copy(), k=k, q=q)


def _solve_one(cfg, L, q, k, solver, dump):
    if solver == "highs-sparse" and dump is None:
        return _solve_sparse(cfg, L, q, k)
    lp = build_lp(cfg, L, q, k)
    if dump is not None:
        dump.write(f"## L={L} q={q} k={k}\n{format_lp(lp)}\n")
    return SOLVERS[solver.replace("-sparse", "")](lp)


def delta_bs_lp(
    cfg: SystemConfig,
    L: int,
    solver: str = "simplex",
    dump=None,
    q_stride: int = 1,
    workers: int = 1,
) -> ExponentResult:
    """Best BS-LD exponent with ``L`` layers over the ``(q, k)`` programs.

    ``solver`` is ``"simplex"`` (own dense tableau), ``"highs"`` (scipy, same
    dense instance) or ``"highs-sparse"`` (scipy on an equivalent program with
    running-sum variables, for large ``L``). ``dump``, if given, is a writable
    text stream receiving every dense instance.

    ``q_stride > 1`` only visits ``q = 0, s, 2s, ...`` plus ``q = L``; every
    program is a restriction of the true problem, so the result is then a
    lower bound. ``workers > 1`` solves programs on a thread pool; the
    reduction is in ``(k, q)`` order either way, so results do not depend on it.
    """
    if L < 1:
        raise DomainError("L must be >= 1")
    if solver not in (*SOLVERS, "highs-sparse"):
        raise ValueError(f"unknown solver {solver!r}")
    if q_stride < 1:
        raise ValueError("q_stride must be >= 1")
    qs = sorted(set(range(0, L + 1, q_stride)) | {L})
    jobs = [(q, k) for k in range(cfg.m_star) for q in qs]
    if workers > 1 and dump is None:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda j: _solve_one(cfg, L, j[0], j[1], solver, None), jobs))
    else:
        results = [_solve_one(cfg, L, q, k, solver, dump) for q, k in jobs]
    best = None
    for (q, k), (val, x) in zip(jobs, results):
        if best is None or val > best[0] + 1e-12:
            best = (val, x, q, k)
    val, x, q, k = best
    return ExponentResult(
        val,
        dict(branch="lp", k=k, q=q, L=L, exhaustive=q_stride == 1),
        dict(allocation=_allocation(x, L, k, q)),
    )


# ---------------------------------------------------------------- closed-form allocation

def power_allocation_closed(cfg: SystemConfig, L: int) -> LayeredAllocation:
    """Equal-exponent power split for fixed gains ``(k+1)(xi_{l-1} - xi_l)``.

    Layer gaps form a geometric sequence with ratio ``eta_k`` from the second
    layer on. ``delta`` equals the gap (the supremum of the open constraint).
    """
    if L < 1:
        raise DomainError("L must be >= 1")
    k = bs_regime(cfg)
    if k is None:
        raise DomainError("b * m_star <= nu: no layered allocation needed")
    _, xi_1, gap_2, con = _bs_scaled(cfg, k, L)
    gaps = np.empty(L)
    gaps[0] = 1.0 - xi_1
    if L > 1:
        # gap_l = (xi_1 - xi_L) eta^(l-2) / sum_j eta^j, weights formed stably
        total = gap_2 * con.gamma_k_L if np.isfinite(con.gamma_k_L) else None
        gaps[1:] = _geometric_weights(con.eta_k, L - 1) * (
            total if total is not None else _tail_mass(cfg, k, L)
        )
    xi = 1.0 - np.cumsum(gaps)
    if np.any(gaps < -1e-12) or xi[-1] < -1e-12:
        raise DomainError("closed-form allocation infeasible for this configuration")
    xi = np.maximum(xi, 0.0)
    return LayeredAllocation(xi=xi, delta=gaps.copy(), k=k, q=0)


def _geometric_weights(eta: float, n: int) -> np.ndarray:
    """``eta^j / sum_i eta^i`` for ``j = 0..n-1``."""
    if eta == 0.0:
        w = np.zeros(n)
        w[0] = 1.0
        return w
    logs = np.arange(n) * np.log(eta)
    w = np.exp(logs - logs.max())
    return w / w.sum()


def _tail_mass(cfg, k, L):
    # xi_1 - xi_L in the Gamma -> inf limit: Phi_k top / ((Ups+B)B - B Phi_k)
    phi, ups = _phi(cfg, k), _upsilon(cfg, k)
    B = cfg.b * (k + 1)
    return phi * (ups + B - phi - cfg.nu) / ((ups + B) * B - B * phi)


def layer_exponents(cfg: SystemConfig, alloc: LayeredAllocation) -> np.ndarray:
    """Exponents of the ``L + 1`` decoding outcomes of a layered allocation.

    Entry ``l`` is ``max(b S_l, nu) + phi_k xi_l - upsilon_k delta_{l+1}``,
    with ``S_0 = 0`` and no diversity term after the last layer.
    """
    k = alloc.k
    phi, ups = _phi(cfg, k), _upsilon(cfg, k)
    xi = np.concatenate([[1.0], alloc.xi])
    cum = np.concatenate([[0.0], np.cumsum(alloc.rates)])
    L = alloc.xi.size
    out = np.empty(L + 1)
    for l in range(L + 1):
        base = max(cfg.b * cum[l], cfg.nu)
        out[l] = base if l == L else base + phi * xi[l] - ups * alloc.delta[l]
    return out
