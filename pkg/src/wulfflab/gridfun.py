"""Grid functions, discrete anisotropic total variation and its dual.

Two discretisations of |Du|_F live here.

``tv_F``
    sum over cells of h^2 F(grad_h u) with forward differences and zero
    extension outside the lattice. Its dual uses vector fields sigma with
    F°(sigma) <= 1 and ``div_h = -grad_h^T``, so weak duality holds to
    rounding error.

``tv_stencil``
    sum over a fixed set of lattice offsets e_k of w_k h |u(x+e_k) - u(x)|.
    The weights are fitted so that sum_k w_k |<nu, e_k>| approximates
    F(nu). The level-set perimeter of this functional is a graph cut, so the
    discrete coarea formula holds exactly. Set perimeters and the Cheeger
    relaxation are built on it.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InfeasibleDual

# ---------------------------------------------------------------------------
# forward-difference calculus


def grad_h(u, h):
    """Forward-difference gradient, shape ``u.shape + (2,)``; u is zero beyond the lattice."""
    g = np.zeros(u.shape + (2,))
    g[:-1, :, 0] = u[1:, :] - u[:-1, :]
    g[-1, :, 0] = -u[-1, :]
    g[:, :-1, 1] = u[:, 1:] - u[:, :-1]
    g[:, -1, 1] = -u[:, -1]
    return g / h


def div_h(p, h):
    """Discrete divergence, the exact negative adjoint of :func:`grad_h`."""
    px, py = p[..., 0], p[..., 1]
    d = px.copy()
    d[1:, :] -= px[:-1, :]
    d += py
    d[:, 1:] -= py[:, :-1]
    return d / h


@dataclass
class GridFunction:
    """Scalar field on a GridDomain, exactly zero outside the mask."""

    domain: object
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.domain.mask.shape:
            raise ValueError("values must match the domain lattice")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        self.values = np.where(self.domain.mask, v, 0.0)

    @classmethod
    def indicator(cls, subset):
        return cls(subset.parent, subset.cells.astype(float))

    def __mul__(self, c):
        return GridFunction(self.domain, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other):
        return GridFunction(self.domain, self.values + other.values)

    def integral(self):
        return float(self.values.sum() * self.domain.h**2)

    def lp_norm(self, p):
        return float((np.abs(self.values) ** p).sum() * self.domain.h**2) ** (1.0 / p)


@dataclass
class DualField:
    domain: object
    sigma: np.ndarray  # shape (nx, ny, 2)

    def max_polar(self, norm):
        return float(np.max(norm.polar(self.sigma)))


def tv_F(u, norm):
    """Forward-difference anisotropic total variation sum h^2 F(grad_h u)."""
    h = u.domain.h
    return float(np.sum(norm.value(grad_h(u.values, h))) * h * h)


def tv_F_dual_gap(u, sigma, norm, feas_tol=1e-6):
    """tv_F(u) + sum h^2 u div_h(sigma), nonnegative for every feasible sigma."""
    if sigma.max_polar(norm) > 1.0 + feas_tol:
        raise InfeasibleDual("dual field violates F°(sigma) <= 1")
    h = u.domain.h
    pairing = -float(np.sum(u.values * div_h(sigma.sigma, h)) * h * h)
    return tv_F(u, norm) - pairing


def optimal_dual(u, norm):
    """The pointwise maximiser sigma = grad F(grad_h u) of the dual pairing.

    Where the gradient vanishes any feasible value works; zero is used.
    With this field the dual gap of :func:`tv_F_dual_gap` is zero up to
    rounding.
    """
    g = grad_h(u.values, u.domain.h)
    nz = norm.value(g) > 0
    s = np.zeros_like(g)
    s[nz] = norm.grad(g[nz])
    return DualField(u.domain, s)


# ---------------------------------------------------------------------------
# projection onto the polar unit ball


def project_polar_ball(sigma, norm, mode="exact", iters=60):
    """Euclidean projection of vectors (..., n) onto {F° <= 1}.

    ``mode="gauge_rescale"`` returns sigma / max(1, F°(sigma)) instead. It is
    feasible and cheap but is not the Euclidean projection, so primal-dual
    iterations using it lose their convergence guarantee.
    """
    sigma = np.asarray(sigma, dtype=float)
    fo = norm.polar(sigma)
    if mode == "gauge_rescale":
        warnings.warn("gauge rescaling is not the Euclidean projection", stacklevel=2)
        return sigma / np.maximum(1.0, fo)[..., None]
    if mode != "exact":
        raise ValueError(f"unknown projection mode {mode!r}")
    out = sigma.copy()
    outside = fo > 1.0
    if not np.any(outside):
        return out
    s0 = sigma[outside]
    if norm.kind == "euclidean":
        out[outside] = s0 / fo[outside][:, None]
    elif norm.kind == "quadratic":
        out[outside] = _project_ellipsoid(s0, norm.matrix_inv, iters)
    else:
        out[outside] = _project_lq_ball(s0, norm.weights_polar, norm.q_polar, iters)
    return out


def _project_ellipsoid(s0, B, iters):
    # minimise |s - s0|^2 s.t. s.B s <= 1; s = (I + mu B)^-1 s0 in B's eigenbasis
    lam, Q = np.linalg.eigh(B)
    z = s0 @ Q
    lz2 = lam * z * z
    mu = np.zeros(len(s0))
    for _ in range(iters):
        d = 1.0 + mu[:, None] * lam
        f = np.sum(lz2 / d**2, axis=1) - 1.0
        df = -2.0 * np.sum(lz2 * lam / d**3, axis=1)
        step = f / df
        mu = mu - step
        if np.all(np.abs(step) <= 1e-15 * (1.0 + mu)):
            break
    return (z / (1.0 + mu[:, None] * lam)) @ Q.T


def _project_lq_ball(s0, c, r, iters):
    # constraint sum c_i |s_i|^r <= 1 with 1 < r <= 2; KKT s_i + mu c_i r |s_i|^(r-1) = |s0_i|
    a = np.abs(s0)
    sign = np.sign(s0)

    def solve_components(mu):
        lo = np.zeros_like(a)
        hi = a.copy()
        s = a * 0.5
        for _ in range(40):
            g = s + mu[:, None] * c * r * s ** (r - 1.0) - a
            lo = np.where(g < 0, s, lo)
            hi = np.where(g >= 0, s, hi)
            dg = 1.0 + mu[:, None] * c * r * (r - 1.0) * np.maximum(s, 1e-300) ** (r - 2.0)
            newton = s - g / dg
            s = np.where((newton > lo) & (newton < hi), newton, 0.5 * (lo + hi))
        return s

    def G(mu):
        return np.sum(c * solve_components(mu) ** r, axis=1) - 1.0

    mu_lo = np.zeros(len(a))
    mu_hi = np.ones(len(a))
    while True:
        bad = G(mu_hi) > 0
        if not np.any(bad):
            break
        mu_hi[bad] *= 4.0
    for _ in range(iters):
        mid = 0.5 * (mu_lo + mu_hi)
        pos = G(mid) > 0
        mu_lo = np.where(pos, mid, mu_lo)
        mu_hi = np.where(pos, mu_hi, mid)
    return sign * solve_components(mu_hi)


# ---------------------------------------------------------------------------
# coarea


@dataclass
class CoareaReport:
    tv: float
    integral: float
    layer_cake: float | None
    levels: int

    @property
    def relative_gap(self):
        return (self.integral - self.tv) / max(self.integral, 1e-300)


def _set_tv(cells, domain, norm):
    return tv_F(GridFunction(domain, cells.astype(float)), norm)


def coarea_check(u, norm, levels=256, perimeter=None):
    """Compare tv_F(u) with the integral over s of the perimeters of its level sets.

    Level sets are {u > s} for s > 0 and {u < s} for s < 0, and
    ``perimeter(cells)`` defaults to tv_F of the indicator. The midpoint
    rule over ``levels`` thresholds gives ``integral``. When u has at most
    4096 distinct values, ``layer_cake`` also holds the exact layer-cake sum
    over them, which bounds tv_F from above by convexity.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    dom = u.domain
    if perimeter is None:
        perimeter = functools.partial(_set_tv, domain=dom, norm=norm)
    v = u.values
    lo, hi = min(float(v.min()), 0.0), max(float(v.max()), 0.0)
    tv = tv_F(u, norm)
    if hi == lo:
        return CoareaReport(tv, 0.0, 0.0, levels)
    ds = (hi - lo) / levels
    total = 0.0
    for k in range(levels):
        s = lo + (k + 0.5) * ds
        cells = (v > s) if s >= 0 else (v < s)
        if np.any(cells):
            total += perimeter(cells) * ds
    cake = None
    vals = np.unique(v)
    if len(vals) <= 4096:
        cake = 0.0
        pos = np.concatenate([[0.0], vals[vals > 0]])
        for a, b in zip(pos[:-1], pos[1:]):
            cake += perimeter(v >= b) * (b - a)
        neg = np.concatenate([[0.0], -np.sort(-vals[vals < 0])])
        for a, b in zip(neg[:-1], neg[1:]):
            cake += perimeter(v <= b) * (a - b)
    return CoareaReport(tv, total, cake, levels)


# ---------------------------------------------------------------------------
# lattice stencils


@dataclass(frozen=True)
class Stencil:
    """Lattice offsets e_k with weights w_k >= 0, approximating F(nu) by sum w_k |<nu, e_k>|."""

    offsets: tuple
    weights: tuple
    max_rel_error: float

    @property
    def radius(self):
        return max(max(abs(a), abs(b)) for a, b in self.offsets)

    def approx_norm(self, nu):
        E = np.asarray(self.offsets, float)
        return np.abs(np.asarray(nu, float) @ E.T) @ np.asarray(self.weights)


def primitive_offsets(radius):
    out = []
    for a in range(0, radius + 1):
        for b in range(-radius, radius + 1):
            if a == 0 and b <= 0:
                continue
            if math.gcd(a, abs(b)) == 1:
                out.append((a, b))
    return out


@functools.lru_cache(maxsize=64)
def fit_stencil(norm, radius=5, samples=1440):
    """Minimax fit of nonnegative stencil weights to F on the unit circle.

    Solves min t subject to |sum_k w_k |<nu_j, e_k>| / F(nu_j) - 1| <= t
    as a linear program over ``samples`` directions in [0, pi). Weights below
    1e-10 are dropped.
    """
    if norm.n != 2:
        raise ValueError("stencils are planar")
    offs = primitive_offsets(radius)
    th = np.linspace(0.0, np.pi, samples, endpoint=False)
    nu = np.stack([np.cos(th), np.sin(th)], axis=-1)
    M = np.abs(nu @ np.asarray(offs, float).T) / norm.value(nu)[:, None]
    k = len(offs)
    ones = np.ones((samples, 1))
    A_ub = np.block([[M, -ones], [-M, -ones]])
    b_ub = np.concatenate([np.ones(samples), -np.ones(samples)])
    c = np.zeros(k + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * (k + 1), method="highs")
    if not res.success:
        raise RuntimeError(f"stencil fit failed: {res.message}")
    w = res.x[:k]
    keep = w > 1e-10
    offs = tuple(o for o, kk in zip(offs, keep) if kk)
    w = w[keep]
    err = float(np.max(np.abs(M[:, keep] @ w - 1.0)))
    return Stencil(offs, tuple(float(x) for x in w), err)


def _pad(u, r):
    return np.pad(u, r)


def stencil_differences(U, offset):
    """u(x + e) - u(x) on a padded array, zero where x + e leaves the array."""
    a, b = offset
    nx, ny = U.shape
    D = np.zeros_like(U)
    x0, x1 = max(0, -a), nx - max(0, a)
    y0, y1 = max(0, -b), ny - max(0, b)
    D[x0:x1, y0:y1] = U[x0 + a:x1 + a, y0 + b:y1 + b] - U[x0:x1, y0:y1]
    return D


def tv_stencil(values, h, stencil):
    """sum_k w_k h sum_x |u(x + e_k) - u(x)| with u zero beyond the lattice."""
    U = _pad(np.asarray(values, float), stencil.radius)
    total = 0.0
    for e, w in zip(stencil.offsets, stencil.weights):
        total += w * np.abs(stencil_differences(U, e)).sum()
    return float(total * h)


def tv_stencil_fn(u, norm, stencil=None):
    """Stencil total variation of a GridFunction."""
    stencil = stencil or fit_stencil(norm)
    return tv_stencil(u.values, u.domain.h, stencil)
