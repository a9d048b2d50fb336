"""Twisted anisotropic q-Cheeger constant and the two-Wulff reduction.

For disjoint G1, G2 the pair objective is

    l(G1, G2) = (rho_1 + rho_2) / (|G1|^(1-q) + |G2|^(1-q))^(1/q),   rho_i = P_F(G_i)/|G_i|.

Restricted to two Wulff shapes of total measure c = 2 kappa_n, it becomes the
one-dimensional function phi(t) of the measure fraction t = r1^n/(r1^n + r2^n).
The critical exponent q~(n) is where the global minimiser of phi leaves the
symmetric point t = 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .config import SolverConfig
from .errors import BadExponent, BadT, BisectionFailure, NoRoomForPair, NotDisjoint, SolverError
from .geometry import GridSubset, grid_set_perimeter_F
from .gridfun import fit_stencil, tv_stencil
from .partition import SubsetPair, _CheegerCache, seed_pairs, solve_h2, voronoi_split

MP_DPS = 50
SYMMETRIC_TOL = 1e-8


def ball_kappa(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _check_q(q, n):
    if n < 2:
        raise BadExponent("dimension must be >= 2")
    if not 1 <= q < n / (n - 1):
        raise BadExponent(f"q must lie in [1, {n / (n - 1):g}), got {q}")


@dataclass
class TwistedResult:
    q: float
    value: float
    pair: SubsetPair
    ratios: tuple
    measures: tuple
    sandwich: dict = field(default_factory=dict)

    def to_json(self):
        return {"q": self.q, "value": self.value, "ratios": list(self.ratios),
                "measures": list(self.measures), "upper_bound": True, **self.sandwich}


def pair_objective(rho, meas, q):
    r1, r2 = rho
    m1, m2 = meas
    return (r1 + r2) / (m1 ** (1 - q) + m2 ** (1 - q)) ** (1 / q)


def twisted_value(pair, norm, q, check=True, rtol=1e-10):
    """Pair objective l(G1, G2), cross-checked against J_q of the zero-mean test function.

    U = |G1| chi_G2 - |G2| chi_G1 (cell counts, so sum U = 0 exactly); J_q(U) =
    TV(U) / ||U||_q uses the same stencil total variation as the perimeters,
    which makes the two values agree to rounding.
    """
    if not isinstance(pair, SubsetPair):
        raise NotDisjoint("twisted_value needs a SubsetPair")
    _check_q(q, norm.n)
    stencil = fit_stencil(norm)
    g1, g2 = pair.first, pair.second
    meas = (g1.measure, g2.measure)
    rho = tuple(grid_set_perimeter_F(g, norm, stencil=stencil) / g.measure for g in (g1, g2))
    val = pair_objective(rho, meas, q)
    if check:
        n1, n2 = g1.count, g2.count
        U = n1 * g2.cells.astype(np.int64) - n2 * g1.cells.astype(np.int64)
        if U.sum() != 0:
            raise SolverError("test function does not have zero mean")
        h = g1.parent.h
        Uf = U * h * h  # |G1| chi_G2 - |G2| chi_G1 in measure units
        tv = tv_stencil(Uf, h, stencil)
        qn = (h * h * np.sum(np.abs(Uf) ** q)) ** (1 / q)
        J = tv / qn
        if abs(J - val) > rtol * val:
            raise SolverError(f"pair objective {val} disagrees with J_q(U) = {J}")
    return val


def solve_twisted(domain, norm, q, cfg=None, h2=None):
    """Seeded search for the pair minimising l(G1, G2); an upper bound for K_{q,F}.

    Candidates: the h2 couple, Cheeger sets of far-apart Voronoi splits, and
    (C1, Cheeger(domain minus C1)); each is improved by Cheeger replacements
    accepted only when the pair objective drops. At q = 1 the result carries
    the sandwich h1 <= value <= twisted value of the h2 pair.
    """
    _check_q(q, norm.n)
    cfg = cfg or SolverConfig()
    if domain.cell_count < 2:
        raise NoRoomForPair("a pair needs at least two cells")
    if h2 is None:
        h2 = solve_h2(domain, norm, cfg)
    cache = _CheegerCache(domain, norm, cfg)
    mask = domain.mask

    def value(c1, c2):
        return twisted_value(SubsetPair(GridSubset(domain, c1), GridSubset(domain, c2)), norm, q, check=False)

    starts = [(h2.pair.first.cells, h2.pair.second.cells)]
    c1, h1 = cache(mask)
    if (mask & ~c1).any():
        starts.append((c1, cache(mask & ~c1)[0]))
    for p_, q_ in seed_pairs(domain, norm, cfg.seeds):
        v1, v2 = voronoi_split(domain, norm, [p_, q_])
        starts.append((cache(v1)[0], cache(v2)[0]))
    best = None
    for a, b in starts:
        val = value(a, b)
        for _ in range(cfg.max_outer):
            changed = False
            nb = cache(mask & ~a)[0]
            if not np.array_equal(nb, b) and value(a, nb) < val - cfg.tol:
                b, val, changed = nb, value(a, nb), True
            na = cache(mask & ~b)[0]
            if not np.array_equal(na, a) and value(na, b) < val - cfg.tol:
                a, val, changed = na, value(na, b), True
            if not changed:
                break
        if best is None or val < best[0]:
            best = (val, a, b)
    val, a, b = best
    pair = SubsetPair(GridSubset(domain, a), GridSubset(domain, b))
    val = twisted_value(pair, norm, q)
    stencil = fit_stencil(norm, cfg.stencil_radius)
    rho = tuple(grid_set_perimeter_F(g, norm, stencil=stencil) / g.measure for g in pair)
    sandwich = {}
    if q == 1:
        sandwich = {"h1": float(h1), "h2_pair_value": twisted_value(h2.pair, norm, q, check=False),
                    "h2": float(h2.h2)}
    return TwistedResult(q, float(val), pair, rho, (pair.first.measure, pair.second.measure), sandwich)


# ---------------------------------------------------------------------------
# two Wulff shapes


@dataclass
class TwoWulffSolution:
    n: int
    q: float
    c: float
    r1: float
    r2: float
    t: float
    value: float
    branch: str  # "symmetric" | "asymmetric"


def two_wulff_objective(n, q, t, kappa=None):
    """phi(t) for two Wulff shapes of total measure 2 kappa_n and measure fraction t."""
    _check_q(q, n)
    if not 0 < t <= 0.5:
        raise BadT(f"t must lie in (0, 1/2], got {t}")
    k = ball_kappa(n) if kappa is None else kappa
    return float(_phi(n, q, t, k))


def _phi(n, q, t, k, ctx=math):
    """Objective in plain floats (ctx=math) or mpmath numbers (ctx=mp)."""
    r1 = (2 * t) ** (ctx.mpf(1) / n if ctx is mp else 1.0 / n)
    r2 = (2 * (1 - t)) ** (ctx.mpf(1) / n if ctx is mp else 1.0 / n)
    num = n / r1 + n / r2
    den = (k * r1 ** n) ** (1 - q) + (k * r2 ** n) ** (1 - q)
    return num / den ** (1 / q if ctx is math else 1 / ctx.mpf(q))


def scaled_two_wulff_objective(n, q, t, c, kappa=None):
    """phi at total measure c: phi(t) * (c / (2 kappa))^((n-1)/n - 1/q)."""
    k = ball_kappa(n) if kappa is None else kappa
    return two_wulff_objective(n, q, t, k) * (c / (2 * k)) ** ((n - 1) / n - 1 / q)


def two_wulff_solution(n, q, t, c=None, kappa=None):
    k = ball_kappa(n) if kappa is None else kappa
    c = 2 * k if c is None else c
    s = (c / (2 * k)) ** (1 / n)
    r1, r2 = s * (2 * t) ** (1 / n), s * (2 * (1 - t)) ** (1 / n)
    branch = "symmetric" if abs(t - 0.5) <= SYMMETRIC_TOL else "asymmetric"
    return TwoWulffSolution(n, q, c, r1, r2, t, scaled_two_wulff_objective(n, q, t, c, k), branch)


def _golden(f, a, b, tol):
    half = mp.mpf(1) / 2
    at_half = b == half
    g = (mp.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    t = (a + b) / 2
    # the symmetric endpoint is a candidate of its own
    if at_half and f(half) <= f(t):
        t = half
    return t, f(t)


def local_minima(n, q, kappa=None, grid=10_000, tol=1e-20):
    """All local minimisers of phi on (0, 1/2]: dense scan, then golden refinement per basin.

    Returns a list of (t, phi) in mpmath precision, sorted by phi.
    """
    k = ball_kappa(n) if kappa is None else kappa
    ts = 0.5 * np.arange(1, grid + 1) / grid
    vals = _phi(n, q, ts, k)
    idx = [i for i in range(grid)
           if (i == 0 or vals[i] <= vals[i - 1]) and (i == grid - 1 or vals[i] <= vals[i + 1])]
    out = []
    with mp.workdps(MP_DPS):
        kk, qq = mp.mpf(k), mp.mpf(q)

        def f(t):
            return _phi(n, qq, t, kk, mp)

        half = mp.mpf(1) / 2
        for i in idx:
            a = mp.mpf(ts[i - 1]) if i > 0 else mp.mpf(ts[0]) / 2
            b = half if i == grid - 1 else mp.mpf(ts[i + 1])
            # float noise can misplace a flat basin: widen the bracket until
            # the refined minimiser is interior (or sits at t = 1/2)
            for _ in range(60):
                t, v = _golden(f, a, b, mp.mpf(tol))
                w = b - a
                if t - a <= 2 * tol and a > ts[0] / 4:
                    a = max(a - 2 * w, mp.mpf(ts[0]) / 4)
                elif b - t <= 2 * tol and b < half:
                    b = min(b + 2 * w, half)
                else:
                    break
            if all(abs(t - t2) > 1e-9 for t2, _ in out):
                out.append((t, v))
    out.sort(key=lambda tv: tv[1])
    return out


def global_minimizer(n, q, kappa=None):
    mins = local_minima(n, q, kappa)
    t, v = mins[0]
    branch = "symmetric" if abs(t - mp.mpf(1) / 2) <= SYMMETRIC_TOL else "asymmetric"
    return float(t), v, branch, mins


@dataclass
class QTildeResult:
    n: int
    q_tilde: float
    bracket: tuple
    minimizers: list  # [(t, phi)] global minimisers at q~ (values within value_tol)
    unique_symmetric: bool
    value_gap: float  # |phi(asymmetric) - phi(symmetric)| at q~ (nan if no second basin)
    scan: list = field(default_factory=list)  # (q, t*, phi*, branch)

    def to_json(self):
        return {"n": self.n, "q_tilde": self.q_tilde, "bracket": list(self.bracket),
                "minimizers": [[t, v] for t, v in self.minimizers],
                "unique_symmetric": self.unique_symmetric, "value_gap": self.value_gap,
                "scan": [list(r) for r in self.scan]}


def find_q_tilde(n, tol=1e-10, grid_q=24, value_tol=1e-8, kappa=None):
    """Critical exponent where the global minimiser of phi stops being symmetric.

    A coarse q-grid on [1, n/(n-1) - 1e-3] brackets the switch, then bisection
    narrows the bracket to ``tol``. The report at q~ uses the symmetric end
    of the final bracket.
    """
    if n < 2:
        raise BadExponent("dimension must be >= 2")
    qmax = n / (n - 1) - 1e-3
    qs = np.linspace(1.0, qmax, grid_q)
    scan = []
    lo = hi = None
    for q in qs:
        t, v, br, _ = global_minimizer(n, q, kappa)
        scan.append((float(q), t, float(v), br))
        if br == "symmetric":
            lo = q
        elif lo is not None and hi is None:
            hi = q
    if lo is None or hi is None or lo > hi:
        raise BisectionFailure("no symmetric-to-asymmetric switch on the q grid")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if global_minimizer(n, mid, kappa)[2] == "symmetric":
            lo = mid
        else:
            hi = mid
    q_t = lo
    _, _, _, mins = global_minimizer(n, q_t, kappa)
    best = mins[0][1]
    near = [(float(t), float(v)) for t, v in mins if v - best <= value_tol]
    sym = [m for m in mins if abs(m[0] - mp.mpf(1) / 2) <= SYMMETRIC_TOL]
    asym = [m for m in mins if abs(m[0] - mp.mpf(1) / 2) > SYMMETRIC_TOL]
    gap = float(abs(asym[0][1] - sym[0][1])) if sym and asym else float("nan")
    unique_sym = len(near) == 1 and abs(near[0][0] - 0.5) <= SYMMETRIC_TOL
    return QTildeResult(n, float(0.5 * (lo + hi)), (float(lo), float(hi)), near, unique_sym, gap, scan)
