"""First anisotropic Cheeger constant on cell domains.

``solve_h1`` runs a Dinkelbach-type outer loop. Each inner step solves the
convex relaxation

    min over 0 <= u <= 1 of  TV(u) - h_k * sum_x h^2 u(x)

with a preconditioned primal-dual iteration and thresholds the result. With
the default stencil relaxation the level-set perimeters satisfy an exact
discrete coarea formula, so a thresholded minimiser is a minimiser of
P(E) - h_k |E| over cell sets. The outer iteration therefore stops at the
discrete Cheeger constant.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig
from .errors import BisectionFailure, EmptyLevelSet, NonConvergence, NotConvex, TooLarge
from .geometry import GridSubset, Polygon, grid_set_perimeter_F, polygon_measure, polygon_perimeter_F
from .gridfun import fit_stencil, grad_h, div_h, project_polar_ball, stencil_differences
from .norms import kappa


@dataclass
class CheegerResult:
    h1: float
    set: GridSubset
    iterations: int
    history: list = field(default_factory=list)  # (h_k, P(E_k), |E_k|)
    dual_gap: float = float("nan")
    relaxation: str = "stencil"

    def to_json(self):
        return {
            "h1": self.h1,
            "measure": self.set.measure,
            "perimeter": self.h1 * self.set.measure,
            "iterations": self.iterations,
            "history": [list(map(float, r)) for r in self.history],
            "dual_gap": self.dual_gap,
            "relaxation": self.relaxation,
        }


# ---------------------------------------------------------------------------
# linear operators for the relaxation


class _StencilOperator:
    """K u = ((w_k / h) (u(x + e_k) - u(x)))_k with dual box |y_k| <= 1.

    Dual variables live only on the pairs (x, x + e_k) inside the lattice,
    so y_k has the shape of the overlap block of offset k.
    """

    def __init__(self, stencil, h):
        self.offsets = stencil.offsets
        self.coef = [w / h for w in stencil.weights]
        self.pad = stencil.radius
        self.tau = 1.0 / sum(2.0 * c for c in self.coef)
        self.sigma = [0.5 / c for c in self.coef]

    def _slices(self, shape):
        nx, ny = shape
        out = []
        for a, b in self.offsets:
            x0, x1 = max(0, -a), nx - max(0, a)
            y0, y1 = max(0, -b), ny - max(0, b)
            out.append(((slice(x0, x1), slice(y0, y1)),
                        (slice(x0 + a, x1 + a), slice(y0 + b, y1 + b))))
        return out

    def bind(self, shape):
        self.shape = shape
        self.sl = self._slices(shape)

    def zeros_dual(self, shape):
        return [np.zeros((s[0].stop - s[0].start, s[1].stop - s[1].start)) for s, _ in self.sl]

    def apply(self, u):
        return [c * (u[t] - u[s]) for (s, t), c in zip(self.sl, self.coef)]

    def adjoint(self, y):
        out = np.zeros(self.shape)
        for (s, t), c, yk in zip(self.sl, self.coef, y):
            out[s] -= c * yk
            out[t] += c * yk
        return out

    def dual_step(self, y, ubar):
        # sigma_k * c_k = 1/2 by construction
        for (s, t), yk in zip(self.sl, y):
            yk += 0.5 * (ubar[t] - ubar[s])
            np.clip(yk, -1.0, 1.0, out=yk)

    def tv(self, Ku):
        return float(sum(np.abs(d).sum() for d in Ku))


class _GradientOperator:
    """K u = grad_h u with the pointwise polar constraint F°(y) <= 1."""

    def __init__(self, norm, h, mode):
        self.norm = norm
        self.h = h
        self.mode = mode
        self.pad = 1
        L = np.sqrt(8.0) / h
        self.tau = 1.0 / L
        self.sigma = 1.0 / L

    def bind(self, shape):
        self.shape = shape

    def zeros_dual(self, shape):
        return np.zeros(shape + (2,))

    def apply(self, u):
        return grad_h(u, self.h)

    def adjoint(self, y):
        return -div_h(y, self.h)

    def dual_step(self, y, ubar):
        y += self.sigma * self.apply(ubar)
        y[...] = project_polar_ball(y, self.norm, self.mode)

    def tv(self, Ku):
        return float(np.sum(self.norm.value(Ku)))


def _make_operator(norm, h, cfg):
    if cfg.relaxation == "stencil":
        return _StencilOperator(fit_stencil(norm, cfg.stencil_radius), h)
    return _GradientOperator(norm, h, cfg.projection_mode)


def _crop(mask, pad):
    ii = np.nonzero(mask.any(axis=1))[0]
    jj = np.nonzero(mask.any(axis=0))[0]
    sl = (slice(ii[0], ii[-1] + 1), slice(jj[0], jj[-1] + 1))
    return sl, np.pad(mask[sl], pad)


@dataclass
class InnerResult:
    u: np.ndarray
    y: object
    primal: float
    gap: float
    iterations: int


def solve_relaxation(op, mask, lam, cfg, u0=None, y0=None, probe=None):
    """Primal-dual iteration for min_{0<=u<=1, u=0 off mask} sum |K u| - lam sum u.

    Values are per unit cell area. The returned gap is primal minus dual
    objective, a certificate of suboptimality. ``probe(u)`` is called at
    every gap check; a truthy return stops the iteration early.
    """
    op.bind(mask.shape)
    m = mask.astype(float)
    u = m.copy() if u0 is None else u0.copy()
    y = op.zeros_dual(mask.shape) if y0 is None else y0
    ubar = u.copy()
    n_cells = max(1.0, m.sum())
    primal = gap = np.inf
    it = 0
    for it in range(1, cfg.max_inner + 1):
        op.dual_step(y, ubar)
        u_new = np.clip(u - op.tau * (op.adjoint(y) - lam), 0.0, 1.0) * m
        ubar = 2.0 * u_new - u
        u = u_new
        if it % cfg.check_every == 0 or it == cfg.max_inner:
            primal = op.tv(op.apply(u)) - lam * u.sum()
            dual = float(np.minimum(0.0, op.adjoint(y) - lam)[mask].sum())
            gap = primal - dual
            if gap <= cfg.inner_tol * lam * n_cells:
                break
            if probe is not None and probe(u):
                break
    return InnerResult(u, y, primal, gap, it)


def _level_perimeters(U, levels, stencil, h):
    """Stencil perimeters of {U > s} for every s in ``levels`` in one pass per offset."""
    out = np.zeros(len(levels))
    for e, w in zip(stencil.offsets, stencil.weights):
        D = stencil_differences(U, e)
        a = U
        b = U + D
        lo = np.minimum(a, b).ravel()
        hi = np.maximum(a, b).ravel()
        nz = hi > lo
        lo, hi = np.sort(lo[nz]), np.sort(hi[nz])
        cnt = np.searchsorted(lo, levels, side="right") - np.searchsorted(hi, levels, side="right")
        out += w * h * cnt
    return out


def _threshold_levels(u, n_levels):
    levels = (np.arange(n_levels) + 0.5) / n_levels
    vals = np.unique(u[(u > 0) & (u < 1)])
    if 0 < len(vals) <= n_levels:
        # thresholds just below each distinct intermediate value
        levels = np.union1d(levels, np.nextafter(vals, -np.inf))
    return levels


def _solve_h1(domain, norm, cfg, full_mask):
    h = domain.h
    op = _make_operator(norm, h, cfg)
    sl, work = _crop(full_mask, op.pad)
    pad = op.pad
    op_stencil = fit_stencil(norm, cfg.stencil_radius) if cfg.relaxation == "stencil" else None

    def embed(cells):
        big = np.zeros_like(full_mask)
        big[sl] = cells[pad:-pad, pad:-pad]
        return big

    def ratio_of(cells):
        s = GridSubset(domain, embed(cells))
        return grid_set_perimeter_F(s, norm, method=cfg.relaxation,
                                    stencil=op_stencil) / s.measure, s

    best_cells = work.copy()
    hk, best_set = ratio_of(best_cells)
    history = [(hk, hk * best_set.measure, best_set.measure)]
    u = y = None

    last_gap = float("nan")

    def best_level(u):
        levels = _threshold_levels(u, cfg.levels)
        meas = np.array([np.count_nonzero(u > s) for s in levels], float)
        if cfg.relaxation == "stencil":
            per = _level_perimeters(u, levels, op_stencil, h)
        else:
            per = np.array([grid_set_perimeter_F(GridSubset(domain, embed(u > s)), norm, method="forward")
                            if c else 0.0 for s, c in zip(levels, meas)])
        ok = meas > 0
        if not ok.any():
            return np.inf, None
        ratios = np.full(len(levels), np.inf)
        ratios[ok] = per[ok] / (meas[ok] * h * h)
        k = int(np.argmin(ratios))
        return ratios[k], levels[k]

    probe = None
    if cfg.relaxation == "stencil":
        def probe(u):
            return best_level(u)[0] < hk - cfg.tol

    for outer in range(1, cfg.max_outer + 1):
        inner = solve_relaxation(op, work, hk, cfg, u, y, probe)
        u, y = inner.u, inner.y
        last_gap = inner.gap * h * h
        _, level = best_level(u)
        if level is None:
            if inner.primal < -cfg.tol * h * h:
                raise EmptyLevelSet("relaxed objective is negative but every level set is empty")
            break
        cand = u > level
        cand_ratio, cand_set = ratio_of(cand)
        if cand_ratio < hk - cfg.tol:
            hk, best_cells, best_set = cand_ratio, cand, cand_set
            history.append((hk, hk * best_set.measure, best_set.measure))
            continue
        break
    else:
        raise NonConvergence(f"Cheeger iteration did not settle in {cfg.max_outer} outer steps")
    return CheegerResult(hk, best_set, outer, history, last_gap, cfg.relaxation)


def solve_h1(domain, norm, cfg=None, mask=None):
    """Discrete anisotropic Cheeger constant of ``domain``.

    Parameters
    ----------
    domain : GridDomain
    norm : NormDescriptor
    cfg : SolverConfig, optional
    mask : bool array, optional
        Restrict the admissible sets to ``mask & domain.mask``.

    Returns
    -------
    CheegerResult
    """
    cfg = cfg or SolverConfig()
    full_mask = domain.mask if mask is None else np.asarray(mask, bool) & domain.mask
    if not full_mask.any():
        raise ValueError("cannot compute a Cheeger set of an empty mask")
    return _solve_h1(domain, norm, cfg, full_mask)


# ---------------------------------------------------------------------------
# oracles


def _pair_weights(domain, norm, stencil):
    """Cell list, within-mask pair weights W and the per-cell degree d with P(E) = d|E| - x.W.x."""
    idx = np.argwhere(domain.mask)
    pos = {tuple(p): k for k, p in enumerate(idx)}
    N = len(idx)
    W = np.zeros((N, N))
    h = domain.h
    for (a, b), w in zip(stencil.offsets, stencil.weights):
        for k, (i, j) in enumerate(idx):
            l = pos.get((i + a, j + b))
            if l is not None:
                W[k, l] += w * h
                W[l, k] += w * h
    d = 2.0 * h * sum(stencil.weights)
    return idx, W, d


def _enumerate_ratios(W, d, h, N, chunk=1 << 15):
    """Perimeter and measure of every nonempty subset, indexed by bitmask."""
    total = 1 << N
    P = np.zeros(total)
    M = np.zeros(total)
    bits = np.arange(N)
    for start in range(0, total, chunk):
        ids = np.arange(start, min(total, start + chunk))
        X = ((ids[:, None] >> bits) & 1).astype(float)
        P[ids] = d * X.sum(1) - np.einsum("ij,ij->i", X @ W, X)
        M[ids] = X.sum(1) * h * h
    return P, M


def brute_force_h1(domain, norm, cfg=None):
    """Exhaustive minimum of the stencil ratio over all nonempty cell subsets (<= 20 cells)."""
    cfg = cfg or SolverConfig()
    N = domain.cell_count
    if N > 20:
        raise TooLarge(f"brute force limited to 20 cells, got {N}")
    stencil = fit_stencil(norm, cfg.stencil_radius)
    idx, W, d = _pair_weights(domain, norm, stencil)
    P, M = _enumerate_ratios(W, d, domain.h, N)
    r = np.full(len(P), np.inf)
    r[1:] = P[1:] / M[1:]
    best = int(np.argmin(r))
    cells = np.zeros_like(domain.mask)
    for k in range(N):
        if best >> k & 1:
            cells[tuple(idx[k])] = True
    s = GridSubset(domain, cells)
    h1 = grid_set_perimeter_F(s, norm, stencil=stencil) / s.measure
    return CheegerResult(h1, s, 1 << N, [(h1, h1 * s.measure, s.measure)], 0.0, "stencil")


def _clip_halfplane(pts, nu, c):
    """Clip a convex polygon (list of points) to {x : nu.x <= c}."""
    out = []
    n = len(pts)
    for k in range(n):
        p, q = pts[k], pts[(k + 1) % n]
        fp, fq = nu @ p - c, nu @ q - c
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            t = fp / (fp - fq)
            out.append(p + t * (q - p))
    return out


def _area(pts):
    if len(pts) < 3:
        return 0.0
    v = np.asarray(pts)
    x, y = v.T
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def inner_parallel_set(poly, norm, rho):
    """{x in poly : d_F(x, boundary) >= rho} for a convex polygon, as a vertex list."""
    v = poly.array
    e = poly.edges()
    nu = np.stack([e[:, 1], -e[:, 0]], -1)
    nu = nu / np.linalg.norm(nu, axis=1, keepdims=True)
    c = np.sum(nu * v, axis=1) - rho * norm.value(nu)
    pts = list(v)
    for k in range(len(nu)):
        pts = _clip_halfplane(pts, nu[k], c[k])
        if not pts:
            break
    return pts


def convex_planar_h1_oracle(poly, norm, tol=1e-13, max_iter=200):
    """Cheeger constant of a convex polygon from the inner-parallel-set equation.

    Solves |{d_F(., boundary) >= 1/t}| = kappa / t^2 by bisection. This is
    an independent cross-check and is not a proof for anisotropic norms.
    """
    if not isinstance(poly, Polygon):
        poly = Polygon(poly)
    if not poly.is_convex():
        raise NotConvex("oracle requires a convex polygon")
    area = polygon_measure(poly)
    k = kappa(norm)
    lo = 2.0 * np.sqrt(k / area)
    hi = 4.0 * polygon_perimeter_F(poly, norm) / area

    def f(t):
        return _area(inner_parallel_set(poly, norm, 1.0 / t)) * t * t - k

    flo, fhi = f(lo), f(hi)
    if flo > 0 and abs(flo) > 1e-12:
        # the lower bound is attained (the polygon is its own Cheeger set)
        return lo
    if fhi < 0:
        raise BisectionFailure("inner-set equation has no root in the bracket")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


def cheeger_touches_boundary(result):
    """True iff some cell of the Cheeger set has a 4-neighbour outside the domain mask."""
    cells = result.set.cells
    outside = ~result.set.parent.mask
    nb = np.zeros_like(cells)
    nb[1:, :] |= outside[:-1, :]
    nb[:-1, :] |= outside[1:, :]
    nb[:, 1:] |= outside[:, :-1]
    nb[:, :-1] |= outside[:, 1:]
    return bool(np.any(cells & nb))


def subsets_of(mask):
    """All nonempty cell subsets of a small mask, as boolean arrays."""
    idx = np.argwhere(mask)
    for r in range(1, len(idx) + 1):
        for comb in itertools.combinations(range(len(idx)), r):
            c = np.zeros_like(mask)
            for k in comb:
                c[tuple(idx[k])] = True
            yield c
