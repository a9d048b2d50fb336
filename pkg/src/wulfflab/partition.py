"""Second and k-th anisotropic Cheeger constants by disjoint-set optimisation.

Computed values are upper bounds (the min-max over pairs is non-convex);
``lower_bounds`` supplies the matching provable lower bounds.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .cheeger import _enumerate_ratios, _pair_weights, solve_h1
from .config import SolverConfig
from .errors import NonConvergence, NoRoomForPair, NotDisjoint, TooLarge
from .geometry import GridSubset, grid_set_perimeter_F
from .gridfun import fit_stencil
from .norms import kappa

log = logging.getLogger(__name__)


@dataclass
class SubsetPair:
    first: GridSubset
    second: GridSubset

    def __post_init__(self):
        if self.first.parent is not self.second.parent:
            raise NotDisjoint("pair members must share a parent domain")
        if np.any(self.first.cells & self.second.cells):
            raise NotDisjoint("pair members overlap")
        if self.first.is_empty() or self.second.is_empty():
            raise ValueError("pair members must be nonempty")

    def __iter__(self):
        return iter((self.first, self.second))


@dataclass
class LowerBounds:
    h1: float
    volume: float  # n (2 kappa / |Omega|)^(1/n)
    two_wulff: float  # h2 of two Wulff shapes of measure |Omega| / 2 each

    @property
    def best(self):
        return max(self.h1, self.volume, self.two_wulff)

    def to_json(self):
        return {"h1": self.h1, "volume": self.volume, "two_wulff": self.two_wulff, "best": self.best}


@dataclass
class CoupledCheegerResult:
    h2: float
    pair: SubsetPair
    ratios: tuple
    adjusted: bool
    connected: tuple = (True, True)
    bounds: LowerBounds | None = None
    history: list = field(default_factory=list)  # max-ratio after each adjustment

    def to_json(self):
        return {
            "h2_upper": self.h2,
            "ratios": list(self.ratios),
            "measures": [self.pair.first.measure, self.pair.second.measure],
            "adjusted": self.adjusted,
            "connected": list(self.connected),
            "lower_bounds": None if self.bounds is None else self.bounds.to_json(),
            "history": list(self.history),
        }


def is_connected(s):
    _, k = ndimage.label(s.cells)
    return k == 1


def _ratio(cells, domain, norm, cfg):
    s = GridSubset(domain, cells)
    return grid_set_perimeter_F(s, norm, method=cfg.relaxation,
                                stencil=fit_stencil(norm, cfg.stencil_radius)) / s.measure


class _CheegerCache:
    """Memoised Cheeger sets of sub-masks of one domain."""

    def __init__(self, domain, norm, cfg):
        self.domain, self.norm, self.cfg = domain, norm, cfg
        self.store = {}

    def __call__(self, mask):
        key = np.packbits(mask).tobytes()
        if key not in self.store:
            r = solve_h1(self.domain, self.norm, self.cfg, mask=mask)
            self.store[key] = (r.set.cells, r.h1)
        return self.store[key]


def _adjust(cells1, cells2, cache, domain, norm, cfg):
    mask = domain.mask
    r1 = _ratio(cells1, domain, norm, cfg)
    r2 = _ratio(cells2, domain, norm, cfg)
    history = [max(r1, r2)]
    for _ in range(cfg.max_outer):
        changed = False
        c, r = cache(mask & ~cells1)
        if r < r2 - cfg.tol:
            cells2, r2, changed = c, r, True
        c, r = cache(mask & ~cells2)
        if r < r1 - cfg.tol:
            cells1, r1, changed = c, r, True
        history.append(max(r1, r2))
        if not changed:
            return cells1, cells2, r1, r2, history
    raise NonConvergence(f"adjust_couple did not reach a fixed point in {cfg.max_outer} sweeps")


def _result(domain, cells1, cells2, r1, r2, history, bounds=None, adjusted=True):
    pair = SubsetPair(GridSubset(domain, cells1), GridSubset(domain, cells2))
    return CoupledCheegerResult(max(r1, r2), pair, (r1, r2), adjusted,
                                (is_connected(pair.first), is_connected(pair.second)), bounds, history)


def adjust_couple(pair, norm, cfg=None, _cache=None):
    """Alternate Cheeger replacements until the max ratio stops decreasing.

    A member is replaced only when the new Cheeger set has a strictly smaller
    ratio, so the max ratio is nonincreasing along the iteration.
    """
    cfg = cfg or SolverConfig()
    domain = pair.first.parent
    cache = _cache or _CheegerCache(domain, norm, cfg)
    out = _adjust(pair.first.cells, pair.second.cells, cache, domain, norm, cfg)
    return _result(domain, *out)


def farthest_points(domain, norm, m):
    """Greedy farthest-point sample of ``m`` cells in the metric F°(x - y)."""
    pts = domain.centers()[domain.mask]
    idx = np.argwhere(domain.mask)
    m = min(m, len(pts))
    d = norm.polar(pts - pts.mean(axis=0))
    chosen = [int(np.argmax(d))]
    d = norm.polar(pts - pts[chosen[0]])
    while len(chosen) < m:
        k = int(np.argmax(d))
        chosen.append(k)
        d = np.minimum(d, norm.polar(pts - pts[k]))
    return idx[chosen], pts[chosen]


def seed_pairs(domain, norm, K=8, exhaustive=False):
    """Index pairs of seed cells: K far-apart pairs, or every pair."""
    if exhaustive:
        idx = np.argwhere(domain.mask)
        return [(idx[i], idx[j]) for i in range(len(idx)) for j in range(i + 1, len(idx))]
    idx, pts = farthest_points(domain, norm, 2 * K)
    pairs = [(i, j) for i in range(len(idx)) for j in range(i + 1, len(idx))]
    pairs.sort(key=lambda ij: -norm.polar(pts[ij[0]] - pts[ij[1]]))
    return [(idx[i], idx[j]) for i, j in pairs[:K]]


def voronoi_split(domain, norm, seeds):
    """Assign every mask cell to its F°-nearest seed (ties go to the earlier seed)."""
    C = domain.centers()
    d = np.stack([norm.polar(C - C[tuple(s)]) for s in seeds])
    lab = np.argmin(d, axis=0)
    return [domain.mask & (lab == k) for k in range(len(seeds))]


def halfplane_splits(domain, n_dir=8):
    """Equal-count splits of the mask by lines through the median, in n_dir directions."""
    C = domain.centers()[domain.mask]
    out = []
    for k in range(n_dir):
        th = np.pi * k / n_dir
        proj = C @ np.array([np.cos(th), np.sin(th)])
        # stable ordering so ties on the median line are split deterministically
        order = np.argsort(proj, kind="stable")
        left = np.zeros(len(C), dtype=bool)
        left[order[: len(C) // 2]] = True
        a = np.zeros_like(domain.mask)
        a[domain.mask] = left
        out.append((a, domain.mask & ~a))
    return out


def _polish(cells1, cells2, domain, norm, cfg, radius=2):
    """Local search on the max ratio over relabelings of up to ``radius`` cells
    (each cell to outside, first or second set). Small domains only."""
    lab = cells1.astype(np.int8) + 2 * cells2.astype(np.int8)
    idx = [tuple(i) for i in np.argwhere(domain.mask)]

    def score(L):
        a, b = L == 1, L == 2
        if not a.any() or not b.any():
            return np.inf, None
        r = (_ratio(a, domain, norm, cfg), _ratio(b, domain, norm, cfg))
        return max(r), r

    cur, r = score(lab)
    moves = [c for k in range(1, radius + 1) for c in itertools.combinations(idx, k)]
    while True:
        best = (cur - cfg.tol, None)
        for cells in moves:
            for new in itertools.product((0, 1, 2), repeat=len(cells)):
                if any(lab[c] == v for c, v in zip(cells, new)):
                    continue
                L = lab.copy()
                for c, v in zip(cells, new):
                    L[c] = v
                m, rr = score(L)
                if m < best[0]:
                    best = (m, (L, rr))
        if best[1] is None:
            return lab == 1, lab == 2, r[0], r[1]
        cur, (lab, r) = best[0], best[1]


def lower_bounds(domain, norm, h1):
    n = norm.n
    k = kappa(norm)
    vol = domain.measure
    b = n * (2 * k / vol) ** (1.0 / n)
    r = (vol / (2 * k)) ** (1.0 / n)
    return LowerBounds(float(h1), float(b), float(n / r))


def solve_h2(domain, norm, cfg=None, exhaustive=False):
    """Upper bound for h2 over disjoint cell pairs, with lower bounds attached.

    Candidates: the Cheeger set C1 of the domain with the Cheeger set of its
    complement, and Voronoi splits around far-apart seed pairs; every
    candidate is adjusted to a 1-adjusted couple and the best max-ratio wins.
    """
    cfg = cfg or SolverConfig()
    mask = domain.mask
    if mask.sum() < 2:
        raise NoRoomForPair("a pair needs at least two cells")
    cache = _CheegerCache(domain, norm, cfg)
    c1, h1 = cache(mask)
    starts = []
    if (mask & ~c1).any():
        c2, _ = cache(mask & ~c1)
        starts.append((c1, c2))
    else:
        log.info("Cheeger set fills the domain; using seeded splits only")
    splits = [voronoi_split(domain, norm, [p, q]) for p, q in seed_pairs(domain, norm, cfg.seeds, exhaustive)]
    splits += halfplane_splits(domain)
    for v1, v2 in splits:
        if v1.any() and v2.any():
            starts.append((cache(v1)[0], cache(v2)[0]))
    outs = {}
    for a, b in starts:
        key = (np.packbits(a).tobytes(), np.packbits(b).tobytes())
        if key not in outs:
            outs[key] = _adjust(a, b, cache, domain, norm, cfg)
    best = min(outs.values(), key=lambda o: max(o[2], o[3]))
    adjusted = True
    if exhaustive:
        # tiny domains: alternate local relabelings with Cheeger adjustment from the best couple
        a, b, r1, r2, hist = best
        while True:
            a, b, r1, r2 = _polish(a, b, domain, norm, cfg)
            out = _adjust(a, b, cache, domain, norm, cfg)
            hist = hist + out[4]
            if max(out[2], out[3]) >= max(r1, r2) - cfg.tol:
                adjusted = np.array_equal(out[0], a) and np.array_equal(out[1], b)
                break
            a, b, r1, r2 = out[:4]
        best = (a, b, r1, r2, hist)
    return _result(domain, *best, bounds=lower_bounds(domain, norm, h1), adjusted=adjusted)


@dataclass
class HkResult:
    value: float
    sets: list
    ratios: list
    lower_bound: float

    @property
    def satisfies_bound(self):
        return self.value >= self.lower_bound * (1 - 1e-2)

    def to_json(self):
        return {"hk_upper": self.value, "ratios": self.ratios, "lower_bound": self.lower_bound,
                "measures": [s.measure for s in self.sets]}


def _sweep(sets, cache, domain, norm, cfg):
    ratios = [_ratio(s, domain, norm, cfg) for s in sets]
    for _ in range(cfg.max_outer):
        changed = False
        for i in range(len(sets)):
            others = np.zeros_like(domain.mask)
            for j, s in enumerate(sets):
                if j != i:
                    others |= s
            c, r = cache(domain.mask & ~others)
            if r < ratios[i] - cfg.tol:
                sets[i], ratios[i], changed = c, r, True
        if not changed:
            return sets, ratios
    raise NonConvergence(f"k-set adjustment did not settle in {cfg.max_outer} sweeps")


def solve_hk(domain, norm, k, cfg=None):
    """Greedy upper bound for h_k: extend the h2 pair and k-seed Voronoi splits, then adjust."""
    if k < 2:
        raise ValueError("k must be >= 2")
    cfg = cfg or SolverConfig()
    bound = norm.n * (k * kappa(norm) / domain.measure) ** (1.0 / norm.n)
    pair = solve_h2(domain, norm, cfg)
    if k == 2:
        return HkResult(pair.h2, [pair.pair.first, pair.pair.second], list(pair.ratios), bound)
    if domain.cell_count < k:
        raise NoRoomForPair(f"{k} disjoint sets need at least {k} cells")
    cache = _CheegerCache(domain, norm, cfg)
    candidates = []
    sets = [pair.pair.first.cells, pair.pair.second.cells]
    while len(sets) < k:
        rest = domain.mask.copy()
        for s in sets:
            rest &= ~s
        if not rest.any():
            break
        sets.append(cache(rest)[0])
    if len(sets) == k:
        candidates.append(_sweep(sets, cache, domain, norm, cfg))
    idx, _ = farthest_points(domain, norm, k)
    parts = voronoi_split(domain, norm, list(idx))
    candidates.append(_sweep([cache(p)[0] for p in parts], cache, domain, norm, cfg))
    sets, ratios = min(candidates, key=lambda c: max(c[1]))
    return HkResult(max(ratios), [GridSubset(domain, s) for s in sets], ratios, bound)


def brute_force_h2(domain, norm, cfg=None):
    """Exact discrete min over disjoint nonempty pairs of the max stencil ratio (<= 12 cells)."""
    cfg = cfg or SolverConfig()
    N = domain.cell_count
    if N > 12:
        raise TooLarge(f"brute force limited to 12 cells, got {N}")
    if N < 2:
        raise NoRoomForPair("a pair needs at least two cells")
    stencil = fit_stencil(norm, cfg.stencil_radius)
    idx, W, d = _pair_weights(domain, norm, stencil)
    P, M = _enumerate_ratios(W, d, domain.h, N)
    full = (1 << N) - 1
    r = np.full(full + 1, np.inf)
    r[1:] = P[1:] / M[1:]
    # g[S] = min ratio over nonempty subsets of S
    g = r.copy()
    S = np.arange(full + 1)
    for i in range(N):
        has = S[(S >> i) & 1 == 1]
        g[has] = np.minimum(g[has], g[has ^ (1 << i)])
    A = S[1:full]
    vals = np.maximum(r[A], g[full ^ A])
    a = int(A[np.argmin(vals)])
    rest = full ^ a
    sub = [t for t in range(1, rest + 1) if t & rest == t]
    b = min(sub, key=lambda t: (r[t], t))

    def cells_of(bits):
        c = np.zeros_like(domain.mask)
        for k in range(N):
            if bits >> k & 1:
                c[tuple(idx[k])] = True
        return c

    c1, c2 = cells_of(a), cells_of(b)
    r1, r2 = _ratio(c1, domain, norm, cfg), _ratio(c2, domain, norm, cfg)
    return _result(domain, c1, c2, r1, r2, [max(r1, r2)], adjusted=False)
