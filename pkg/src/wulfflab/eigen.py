"""Dirichlet eigenvalues of the anisotropic p-Laplacian on cell domains.

The first eigenvalue minimises the discrete Rayleigh quotient

    R_p(u) = sum h^2 (F(grad_h u)^2 + eps^2)^(p/2) / sum h^2 |u|^p

over nonnegative u vanishing off the mask, with eps-continuation down to
eps <= 1e-6. The reported eigenvalue is the unregularised quotient (eps = 0)
at the final iterate; the regularisation bias is reported alongside.

The second eigenvalue is computed as min over disjoint subdomain pairs of
max(lambda1(p, Omega_1), lambda1(p, Omega_2)), an upper bound.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.integrate import solve_ivp
from scipy.optimize import minimize

from .config import SolverConfig
from .errors import InvalidP, NonConvergence, NoRoomForPair
from .geometry import GridDomain, GridSubset, anisotropic_distance, coarsen, prolong
from .gridfun import GridFunction
from .norms import kappa
from .partition import SubsetPair, farthest_points, solve_h2, voronoi_split

log = logging.getLogger(__name__)

P_MAX = 4.0


def _check_p(p):
    if not p > 1:
        raise InvalidP(f"p must exceed 1, got {p}")
    if p > P_MAX:
        raise InvalidP(f"p is capped at {P_MAX}, got {p}")


@dataclass
class EigenResult:
    p: float
    lam: float
    eigenfunction: GridFunction
    residual: float
    nodal: SubsetPair | None = None
    eps_bias: float = 0.0
    iterations: int = 0
    lower_bound: float | None = None

    def to_json(self):
        out = {"p": self.p, "lambda": self.lam, "lambda_pow_1_over_p": self.lam ** (1 / self.p),
               "residual": self.residual, "eps_bias": self.eps_bias, "iterations": self.iterations}
        if self.nodal is not None:
            out["nodal_measures"] = [self.nodal.first.measure, self.nodal.second.measure]
            out["upper_bound"] = True
        if self.lower_bound is not None:
            out["lower_bound"] = self.lower_bound
        return out


class RayleighQuotient:
    """R_p and its gradient in the mask unknowns of a GridDomain.

    Work happens on the bounding box of the mask padded by one cell, which
    holds every forward difference that can be nonzero.
    """

    def __init__(self, domain, norm, p, eps, mask=None):
        m = domain.mask if mask is None else mask
        ii = np.nonzero(m.any(axis=1))[0]
        jj = np.nonzero(m.any(axis=0))[0]
        self.sl = (slice(max(ii[0] - 1, 0), ii[-1] + 2), slice(max(jj[0] - 1, 0), jj[-1] + 2))
        self.mask = m
        self.sub = m[self.sl]
        self.idx = np.flatnonzero(self.sub)
        # cells whose forward differences can be nonzero
        s = self.sub
        supp = s.copy()
        supp[:-1] |= s[1:]
        supp[:, :-1] |= s[:, 1:]
        self.supp = supp
        self.h = domain.h
        self.norm, self.p, self.eps = norm, p, eps

    @property
    def size(self):
        return len(self.idx)

    def field(self, x):
        u = np.zeros(self.sub.shape)
        u.flat[self.idx] = x
        return u

    def embed(self, x):
        u = np.zeros(self.mask.shape)
        u[self.sl] = self.field(x)
        return u

    def restrict(self, u):
        return u[self.sl].flat[self.idx]

    def _grad(self, u):
        h = self.h
        gx = np.zeros_like(u)
        gy = np.zeros_like(u)
        gx[:-1] = u[1:] - u[:-1]
        gy[:, :-1] = u[:, 1:] - u[:, :-1]
        return np.stack([gx, gy], -1) / h

    def _grad_T(self, v):
        vx, vy = v[..., 0], v[..., 1]
        out = np.zeros(vx.shape)
        out[1:] += vx[:-1]
        out[:-1] -= vx[:-1]
        out[:, 1:] += vy[:, :-1]
        out[:, :-1] -= vy[:, :-1]
        return out / self.h

    def parts(self, x, eps=None):
        eps = self.eps if eps is None else eps
        g = self._grad(self.field(x))[self.supp]
        G = self.norm.value(g) ** 2 + eps * eps
        num = float(np.sum(G ** (self.p / 2)))
        den = float(np.sum(np.abs(x) ** self.p))
        return num, den, g, G

    def value(self, x, eps=None):
        num, den, _, _ = self.parts(x, eps)
        return num / den

    def __call__(self, x):
        """Value and gradient of R_p (the h^2 factors cancel)."""
        p = self.p
        num, den, g, G = self.parts(x)
        R = num / den
        w = np.zeros(self.sub.shape + (2,))
        # d/dg (F^2 + eps^2)^(p/2) = p (F^2 + eps^2)^(p/2 - 1) F grad F
        w[self.supp] = (p * G ** (p / 2 - 1))[:, None] * self.norm.half_grad_sq(g)
        dnum = self._grad_T(w).flat[self.idx]
        dden = p * np.abs(x) ** (p - 1) * np.sign(x)
        return R, dnum / den - R * dden / den

    def normalize(self, x):
        return x / (self.h ** 2 * np.sum(np.abs(x) ** self.p)) ** (1 / self.p)


def _smooth_random(domain, mask, seed, passes=20):
    rng = np.random.default_rng(seed)
    u = rng.random(mask.shape) * mask
    for _ in range(passes):
        u = ndimage.uniform_filter(u, 3, mode="constant") * mask
    return u


def _residual(rq, x, lam):
    """Relative dual-norm residual of the discrete eigen equation (KKT-aware at u = 0)."""
    p = rq.p
    _, g = rq(x)
    den = np.sum(np.abs(x) ** p)
    r = g * den / p  # = dN/p - lam |u|^(p-2) u, per unit h^2
    r = np.where(x > 0, r, np.minimum(r, 0.0))
    q = p / (p - 1)
    return float((rq.h ** 2 * np.sum(np.abs(r) ** q)) ** (1 / q) / (lam * (rq.h ** 2 * den) ** (1 / q)))


def _minimize(rq_factory, x0, cfg):
    """eps-continuation: loose, capped solves for the large eps, a tight one for the last."""
    x = x0
    nit = 0
    rq = None
    last = len(cfg.eps_schedule) - 1
    for k, eps in enumerate(cfg.eps_schedule):
        rq = rq_factory(eps)
        x = rq.normalize(x)
        f0 = rq(x)[0]
        final = k == last
        opts = dict(maxiter=cfg.eig_maxiter if final else min(cfg.eig_maxiter, 300), maxcor=10,
                    ftol=1e-13 if final else 1e-9, gtol=1e-10 * f0 * rq.h ** 2)
        res = minimize(rq, x, jac=True, method="L-BFGS-B", bounds=[(0, None)] * len(x), options=opts)
        nit += res.nit
        if res.fun > f0 + 1e-12 * f0:
            raise NonConvergence("descent increased the Rayleigh quotient")
        x = res.x
    if not np.any(x > 0):
        raise NonConvergence("eigenfunction collapsed to zero")
    return rq.normalize(x), rq, nit


def _solve_on_mask(domain, norm, p, cfg, mask, u_init=None, levels=None):
    levels = cfg.multilevel if levels is None else levels
    if u_init is None and levels > 0:
        cdom = coarsen(domain.with_mask(mask))
        if cdom.cell_count >= 64:
            uc = _solve_on_mask(cdom, norm, p, cfg, cdom.mask, None, levels - 1)[0]
            u_init = prolong(uc, cdom, domain) * mask
            for _ in range(2):
                u_init = ndimage.uniform_filter(u_init, 3, mode="constant") * mask
            if not np.any(u_init > 0):
                u_init = None
    if u_init is None:
        u_init = _smooth_random(domain, mask, cfg.seed)
    u_init = np.abs(u_init) * mask
    if not np.any(u_init > 0):
        u_init = _smooth_random(domain, mask, cfg.seed)

    def factory(eps):
        return RayleighQuotient(domain, norm, p, eps, mask)

    rq0 = factory(cfg.eps_schedule[0])
    x, rq, nit = _minimize(factory, rq0.restrict(u_init), cfg)
    lam = rq.value(x, eps=0.0)
    bias = rq.value(x) - lam
    return rq.embed(x), lam, bias, _residual(rq, x, lam) if lam > 0 else np.inf, nit


def solve_lambda1(domain, norm, p, cfg=None, u_init=None, mask=None):
    """First Dirichlet eigenvalue of the anisotropic p-Laplacian.

    Parameters
    ----------
    domain : GridDomain
    norm : NormDescriptor
    p : float
        Exponent in (1, 4].
    cfg : SolverConfig, optional
    u_init : array, optional
        Warm start on the domain lattice.
    mask : bool array, optional
        Solve on a subdomain of the lattice.

    Returns
    -------
    EigenResult
        Nonnegative eigenfunction with unit p-norm.
    """
    _check_p(p)
    cfg = cfg or SolverConfig()
    m = domain.mask if mask is None else np.asarray(mask, bool) & domain.mask
    if not m.any():
        raise ValueError("empty domain")
    u, lam, bias, res, nit = _solve_on_mask(domain, norm, p, cfg, m, u_init)
    if res > cfg.max_residual:
        raise NonConvergence(f"eigen residual {res:.3g} exceeds {cfg.max_residual}")
    return EigenResult(p, lam, GridFunction(domain, u), res, None, bias, nit)


# ---------------------------------------------------------------------------
# second eigenvalue by partitions


def _interface(src, dst):
    """Cells of ``src`` that are 4-adjacent to ``dst``."""
    nb = ndimage.binary_dilation(dst, structure=ndimage.generate_binary_structure(2, 1))
    return src & nb


def extend_pair(domain, norm, cells1, cells2):
    """Partition the domain by F°-distance to two disjoint cell sets."""
    d1 = anisotropic_distance(domain, cells1, norm, where=domain.mask)
    d2 = anisotropic_distance(domain, cells2, norm, where=domain.mask)
    a = domain.mask & ((d1 < d2) | cells1) & ~cells2
    return a, domain.mask & ~a


@dataclass
class _Part:
    mask: np.ndarray
    u: np.ndarray
    lam: float
    res: float
    bias: float


def _part(domain, norm, p, cfg, mask, u0):
    u, lam, bias, res, _ = _solve_on_mask(domain, norm, p, cfg, mask, None if u0 is None else u0 * mask)
    return _Part(mask, u, lam, res, bias)


def _improve_partition(domain, norm, p, cfg, a, b):
    """Interface transfers from the smaller-lambda part to the larger while max(lambda) drops."""
    for _ in range(cfg.max_transfer):
        big, small = (a, b) if a.lam >= b.lam else (b, a)
        layer = _interface(small.mask, big.mask)
        if not layer.any():
            break
        accepted = False
        for frac in (1.0, 0.5):
            move = layer
            if frac < 1.0:
                vals = small.u[layer]
                if len(vals) < 2:
                    break
                move = layer & (small.u <= np.median(vals))
            nm_small = small.mask & ~move
            if not nm_small.any():
                continue
            nb = _part(domain, norm, p, cfg, big.mask | move, big.u)
            ns = _part(domain, norm, p, cfg, nm_small, small.u)
            if max(nb.lam, ns.lam) < max(big.lam, small.lam) - cfg.tol * big.lam:
                a, b = nb, ns
                accepted = True
                break
        if not accepted:
            break
    return a, b


def solve_lambda2(domain, norm, p, cfg=None, h2=None, init=None, n_seeds=1):
    """Upper bound for the second eigenvalue via disjoint subdomain pairs.

    Parameters
    ----------
    h2 : CoupledCheegerResult, optional
        Reused for the initial partition and the lower bound; computed if absent.
    init : (mask1, mask2, u1, u2), optional
        Warm start partition (used by sweeps); replaces the seeded starts.
    n_seeds : int
        Number of far-apart seed pairs tried besides the h2 pair.
    """
    _check_p(p)
    cfg = cfg or SolverConfig()
    if domain.cell_count < 2:
        raise NoRoomForPair("a pair needs at least two cells")
    if h2 is None:
        h2 = solve_h2(domain, norm, cfg)
    starts = []
    if init is not None:
        starts.append(init)
    else:
        a, b = extend_pair(domain, norm, h2.pair.first.cells, h2.pair.second.cells)
        starts.append((a, b, None, None))
        if n_seeds > 0:
            idx, _ = farthest_points(domain, norm, 2)
            if len(idx) == 2:
                v1, v2 = voronoi_split(domain, norm, list(idx))
                starts.append((v1, v2, None, None))
    best = None
    seen = set()
    for m1, m2, u1, u2 in starts:
        key = np.packbits(m1).tobytes()
        if key in seen or not m1.any() or not m2.any():
            continue
        seen.add(key)
        pa = _part(domain, norm, p, cfg, m1, u1)
        pb = _part(domain, norm, p, cfg, m2, u2)
        pa, pb = _improve_partition(domain, norm, p, cfg, pa, pb)
        if best is None or max(pa.lam, pb.lam) < max(best[0].lam, best[1].lam):
            best = (pa, pb)
    if best is None:
        raise NoRoomForPair("no admissible starting partition")
    pa, pb = best
    # glue with opposite signs, each half carrying p-mass 1/2
    u = (pa.u - pb.u) * 0.5 ** (1 / p)
    lam = max(pa.lam, pb.lam)
    nodal = SubsetPair(GridSubset(domain, pa.mask), GridSubset(domain, pb.mask))
    lower = (h2.bounds.best / p) ** p
    return EigenResult(p, lam, GridFunction(domain, u), max(pa.res, pb.res), nodal,
                       max(pa.bias, pb.bias), 0, lower)


# ---------------------------------------------------------------------------
# p-sweeps


@dataclass
class SweepResult:
    p_list: list
    lambda1_list: list
    lambda2_list: list
    h1: float
    h2: float
    h2_lower: float
    margin1: list = field(default_factory=list)
    margin2: list = field(default_factory=list)
    nodal_min_measure: list = field(default_factory=list)
    nodal_bound: float = 0.0

    @property
    def gap1(self):
        return [abs(l - self.h1) for l in self.lambda1_list]

    @property
    def gap2(self):
        return [abs(l - self.h2) for l in self.lambda2_list]

    def monotone(self, which=1, slack=0.0):
        g = self.gap1 if which == 1 else self.gap2
        return all(b <= a + slack * max(a, 1e-300) for a, b in zip(g, g[1:]))

    def rows(self):
        return [dict(p=p, lambda1=l1, lambda2=l2, h1=self.h1, h2=self.h2, margin1=m1, margin2=m2)
                for p, l1, l2, m1, m2 in zip(self.p_list, self.lambda1_list, self.lambda2_list,
                                             self.margin1, self.margin2)]

    def to_json(self):
        return {
            "p": self.p_list, "lambda1": self.lambda1_list, "lambda2": self.lambda2_list,
            "lambda1_pow_1_over_p": [l ** (1 / p) for l, p in zip(self.lambda1_list, self.p_list)],
            "lambda2_pow_1_over_p": [l ** (1 / p) for l, p in zip(self.lambda2_list, self.p_list)],
            "h1": self.h1, "h2": self.h2, "h2_lower": self.h2_lower,
            "margin1": self.margin1, "margin2": self.margin2,
            "gap1": self.gap1, "gap2": self.gap2,
            "nodal_min_measure": self.nodal_min_measure, "nodal_bound": self.nodal_bound,
        }


def sweep_p(domain, norm, p_list, cfg=None, h1=None, h2=None):
    """lambda1(p) and lambda2(p) along a decreasing p list, warm-started from the previous p.

    ``h1`` (float) and ``h2`` (CoupledCheegerResult) are computed when absent.
    """
    from .cheeger import solve_h1

    cfg = cfg or SolverConfig()
    p_list = [float(p) for p in p_list]
    if any(b >= a for a, b in zip(p_list, p_list[1:])):
        raise ValueError("p_list must be strictly decreasing")
    if min(p_list) < 1.02:
        raise InvalidP("sweeps stop at p >= 1.02")
    if h1 is None:
        h1 = solve_h1(domain, norm, cfg).h1
    if h2 is None:
        h2 = solve_h2(domain, norm, cfg)
    n = norm.n
    out = SweepResult(p_list, [], [], float(h1), float(h2.h2), float(h2.bounds.best))
    out.nodal_bound = kappa(norm) * (n / (2 * h2.h2)) ** n
    u1 = None
    init = None
    for p in p_list:
        r1 = solve_lambda1(domain, norm, p, cfg, u_init=u1)
        u1 = r1.eigenfunction.values
        r2 = solve_lambda2(domain, norm, p, cfg, h2=h2, init=init)
        pos, neg = np.maximum(r2.eigenfunction.values, 0), np.maximum(-r2.eigenfunction.values, 0)
        init = (r2.nodal.first.cells, r2.nodal.second.cells, pos, neg)
        out.lambda1_list.append(r1.lam)
        out.lambda2_list.append(r2.lam)
        out.margin1.append(r1.lam - (h1 / p) ** p)
        out.margin2.append(r2.lam - (out.h2_lower / p) ** p)
        out.nodal_min_measure.append(min(r2.nodal.first.measure, r2.nodal.second.measure))
        log.info("p=%g lambda1=%.6g lambda2=%.6g", p, r1.lam, r2.lam)
    return out


# ---------------------------------------------------------------------------
# radial oracle


def radial_lambda1(p, n=2, R=1.0):
    """First eigenvalue on the Wulff shape of radius R (equivalently the ball, radial profile).

    Shoots u' = |v|^(1/(p-1)) sign v, v' = -(n-1) v / r - |u|^(p-2) u from
    u(0) = 1 and returns z^p / R^p, where z is the first zero of u.
    """
    _check_p(p)
    q = 1.0 / (p - 1.0)

    def rhs(r, y):
        u, v = y
        return [np.sign(v) * abs(v) ** q, -(n - 1) / r * v - np.sign(u) * abs(u) ** (p - 1)]

    def hit(r, y):
        return y[0]

    hit.terminal = True
    hit.direction = -1
    r0 = 1e-6
    sol = solve_ivp(rhs, [r0, 1e4], [1.0, -r0 / n], events=hit, rtol=1e-12, atol=1e-14, method="LSODA")
    if not len(sol.t_events[0]):
        raise NonConvergence("radial profile has no zero")
    z = sol.t_events[0][0]
    return z ** p / R ** p
