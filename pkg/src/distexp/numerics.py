"""Special functions and random-matrix utilities.

Exponential integral, principal Lambert W, complex Gaussian channel draws,
Hermitian eigenvalues by cyclic Jacobi, and log-det capacity. Functions accept
scalars or arrays and broadcast like numpy ufuncs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dmt import DomainError

EULER_GAMMA = 0.57721566490153286061
_INV_E = np.exp(-1.0)


# ---------------------------------------------------------------- E1

def _e1_series(x):
    # E1(x) = -gamma - ln x - sum_{n>=1} (-x)^n / (n n!), used for x <= 1
    total = np.zeros_like(x)
    term = np.ones_like(x)
    for n in range(1, 40):
        term = term * (-x) / n
        total += term / n
    return -EULER_GAMMA - np.log(x) - total


def _exp_e1_cf(x, max_iter=2000, eps=1e-16):
    # modified Lentz on the continued fraction for e^x E1(x), used for x > 1
    tiny = 1e-300
    b = x + 1.0
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, max_iter):
        an = -float(i * i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > eps
        if not active.any():
            break
    return h


def _check_positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("exponential integral needs x > 0")
    return x


def exp_integral_e1(x):
    """Exponential integral ``E1(x) = int_x^inf exp(-t)/t dt`` for ``x > 0``.

    Series expansion for ``x <= 1``, continued fraction above.
    """
    x = _check_positive(x)
    xs = np.atleast_1d(x)
    out = np.empty_like(xs)
    lo = xs <= 1.0
    out[lo] = _e1_series(xs[lo])
    hi = ~lo
    out[hi] = _exp_e1_cf(xs[hi]) * np.exp(-xs[hi])
    return out.reshape(x.shape) if x.ndim else float(out[0])


def exp_scaled_e1(x):
    """``exp(x) * E1(x)``, finite for large ``x`` where ``E1`` underflows."""
    x = _check_positive(x)
    xs = np.atleast_1d(x)
    out = np.empty_like(xs)
    lo = xs <= 1.0
    out[lo] = np.exp(xs[lo]) * _e1_series(xs[lo])
    hi = ~lo
    out[hi] = _exp_e1_cf(xs[hi])
    return out.reshape(x.shape) if x.ndim else float(out[0])


# ---------------------------------------------------------------- Lambert W

def lambert_w0(z):
    """Principal branch of the Lambert W function, ``w * exp(w) = z``.

    Halley iteration from a branch-point series near ``-1/e``, ``log1p`` for
    moderate arguments and the two-term asymptotic ``log z - log log z``
    beyond ``e``.
    """
    z = np.asarray(z, dtype=float)
    # tolerate rounding of expressions such as x*exp(x) at x = -1
    if np.any(z < -_INV_E - 1e-15) or np.any(np.isnan(z)):
        raise DomainError("lambert_w0 needs z >= -1/e")
    zs = np.atleast_1d(np.maximum(z, -_INV_E))

    p2 = 2.0 * (np.e * zs + 1.0)
    p = np.sqrt(np.maximum(p2, 0.0))
    w_branch = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    w_mid = np.log1p(np.maximum(zs, -0.3))
    lz = np.log(np.maximum(zs, np.e))
    w_big = lz - np.log(lz)
    w = np.where(zs < -0.25, w_branch, np.where(zs <= np.e, w_mid, w_big))

    for _ in range(60):
        ew = np.exp(w)
        f = w * ew - zs
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * np.where(wp1 == 0, 1.0, wp1))
        step = np.where(denom != 0, f / np.where(denom == 0, 1.0, denom), 0.0)
        w_new = w - step
        done = np.abs(step) <= 1e-15 * (1.0 + np.abs(w_new))
        w = w_new
        if done.all():
            break
    w = np.where(zs == -_INV_E, -1.0, w)
    w = np.where(zs == 0.0, 0.0, w)
    return w.reshape(z.shape) if z.ndim else float(w[0])


# ---------------------------------------------------------------- random channels

@dataclass(frozen=True)
class RngStream:
    """Counter-based random substream identified by ``(seed, index)``.

    Backed by the Philox generator keyed with both numbers, so any
    ``(seed, index)`` pair reproduces the same draws on every platform.
    """

    seed: int
    index: int = 0

    def generator(self) -> np.random.Generator:
        key = (int(self.seed) % 2**64) | ((int(self.index) % 2**64) << 64)
        return np.random.Generator(np.random.Philox(key=key))


def complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) draws by Box-Muller: modulus ``sqrt(-ln u1)``, uniform phase."""
    u1 = 1.0 - gen.random(shape)  # in (0, 1]
    u2 = gen.random(shape)
    return np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)


def sample_channel(m_t: int, m_r: int, rng: RngStream, n: int | None = None) -> np.ndarray:
    """I.i.d. CN(0, 1) channel of shape ``(m_r, m_t)``, or ``(n, m_r, m_t)``."""
    shape = (m_r, m_t) if n is None else (n, m_r, m_t)
    return complex_normal(rng.generator(), shape)


# ---------------------------------------------------------------- eigenvalues

def gram_matrix(h: np.ndarray) -> np.ndarray:
    """The smaller of ``H H^H`` and ``H^H H`` (batched over leading axes)."""
    h = np.asarray(h)
    hh = np.conj(np.swapaxes(h, -1, -2))
    if h.shape[-2] <= h.shape[-1]:
        return h @ hh
    return hh @ h


def hermitian_eigenvalues(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of Hermitian matrices by cyclic Jacobi rotations.

    Works on a stack ``(..., n, n)`` at once; each rotation first rotates the
    phase of the pivot so the 2x2 block becomes real symmetric. Returns
    eigenvalues in ascending order.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[-1]
    batch = a.shape[:-2]
    a = a.reshape((-1, n, n))
    if n == 1:
        return a[:, 0, 0].real.reshape(batch + (1,))
    scale = np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2)))
    scale = np.where(scale > 0, scale, 1.0)
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    for _ in range(max_sweeps):
        off = np.zeros(a.shape[0])
        for p, q in pairs:
            off = np.maximum(off, np.abs(a[:, p, q]))
        if np.all(off <= tol * scale):
            break
        for p, q in pairs:
            apq = a[:, p, q]
            g = np.abs(apq)
            live = g > tol * scale * 1e-3
            if not live.any():
                continue
            idx = np.nonzero(live)[0]
            g = g[idx]
            phase = apq[idx] / g
            app = a[idx, p, p].real
            aqq = a[idx, q, q].real
            zeta = (aqq - app) / (2.0 * g)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # U = diag(1, conj(phase)) @ [[c, s], [-s, c]] on the (p, q) plane
            u_pp = c
            u_pq = s
            u_qp = -s * np.conj(phase)
            u_qq = c * np.conj(phase)
            sub = a[idx]
            col_p = sub[:, :, p].copy()
            col_q = sub[:, :, q].copy()
            sub[:, :, p] = col_p * u_pp[:, None] + col_q * u_qp[:, None]
            sub[:, :, q] = col_p * u_pq[:, None] + col_q * u_qq[:, None]
            row_p = sub[:, p, :].copy()
            row_q = sub[:, q, :].copy()
            sub[:, p, :] = np.conj(u_pp)[:, None] * row_p + np.conj(u_qp)[:, None] * row_q
            sub[:, q, :] = np.conj(u_pq)[:, None] * row_p + np.conj(u_qq)[:, None] * row_q
            sub[:, p, q] = 0.0
            sub[:, q, p] = 0.0
            a[idx] = sub
    eig = np.sort(np.real(np.diagonal(a, axis1=1, axis2=2)), axis=1)
    return eig.reshape(batch + (n,))


def gram_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the ``min(m_t, m_r)``-dimensional Gram matrix."""
    lam = hermitian_eigenvalues(gram_matrix(h))
    # clip tiny negative round-off of a positive semidefinite form
    return np.maximum(lam, 0.0)


def capacity_from_eigs(eigs, rho: float, m_t: int) -> np.ndarray:
    """``sum_i log2(1 + rho/m_t * lambda_i)`` over the last axis."""
    eigs = np.asarray(eigs, dtype=float)
    return np.sum(np.log2(1.0 + (rho / m_t) * eigs), axis=-1)


def log_det_capacity(h: np.ndarray, rho: float, m_t: int) -> float:
    """``log2 det(I + rho/m_t H H^H)`` via the Gram eigenvalues."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    return capacity_from_eigs(gram_eigenvalues(h), rho, m_t)
