"""Planar domains: polygons, cell masks, set perimeters and anisotropic distances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from matplotlib.path import Path
from shapely.geometry import LinearRing

from .errors import ConfigError, DegeneratePolygon, EmptyTarget, EpsilonUnresolvable
from .gridfun import GridFunction, fit_stencil, tv_F, tv_stencil
from .norms import kappa

# ---------------------------------------------------------------------------
# polygons


@dataclass(frozen=True)
class Polygon:
    vertices: tuple  # ((x, y), ...) counterclockwise

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DegeneratePolygon("a polygon needs at least three 2D vertices")
        object.__setattr__(self, "vertices", tuple(map(tuple, v)))
        if self.signed_area() <= 0:
            raise DegeneratePolygon("polygon must be counterclockwise with positive area")
        if not LinearRing(v).is_simple:
            raise DegeneratePolygon("polygon self-intersects")

    @classmethod
    def from_json(cls, spec):
        if "polygon" not in spec:
            raise ConfigError("domain spec needs 'polygon'", field="polygon")
        return cls(spec["polygon"])

    @property
    def array(self):
        return np.asarray(self.vertices)

    def signed_area(self):
        x, y = self.array.T
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def edges(self):
        v = self.array
        return np.roll(v, -1, axis=0) - v

    def is_convex(self, tol=1e-12):
        e = self.edges()
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        return bool(np.all(cross >= -tol))

    def contains(self, pts):
        return Path(self.array).contains_points(np.asarray(pts).reshape(-1, 2))


def regular_polygon(m, radius=1.0, center=(0.0, 0.0)):
    t = 2 * np.pi * np.arange(m) / m
    return Polygon(np.stack([radius * np.cos(t), radius * np.sin(t)], -1) + np.asarray(center))


def polygon_measure(poly):
    a = poly.signed_area()
    if a <= 0:
        raise DegeneratePolygon("nonpositive area")
    return a


def polygon_perimeter_F(poly, norm):
    """Sum over edges of |edge| F(outward unit normal) = F((dy, -dx)) for a ccw polygon."""
    e = poly.edges()
    return float(np.sum(norm.value(np.stack([e[:, 1], -e[:, 0]], -1))))


# ---------------------------------------------------------------------------
# lattices and cell sets


@dataclass
class GridDomain:
    """Cell lattice with spacing h; cell (i, j) has center origin + ((i+.5)h, (j+.5)h).

    ``mask`` marks the cells of the domain. Cells on the lattice border are
    never in the mask, so extension by zero is always well defined.
    """

    mask: np.ndarray
    h: float
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2:
            raise ConfigError("mask must be two-dimensional", field="mask")
        if not m.any():
            raise ConfigError("domain has no interior cell", field="mask")
        if m[0].any() or m[-1].any() or m[:, 0].any() or m[:, -1].any():
            raise ConfigError("mask cells must not touch the lattice border", field="mask")
        if self.h <= 0:
            raise ConfigError("spacing must be positive", field="h")
        self.mask = m
        self.origin = tuple(float(o) for o in self.origin)

    @property
    def nx(self):
        return self.mask.shape[0]

    @property
    def ny(self):
        return self.mask.shape[1]

    @property
    def cell_count(self):
        return int(self.mask.sum())

    @property
    def measure(self):
        return self.cell_count * self.h**2

    def centers(self):
        i = self.origin[0] + (np.arange(self.nx) + 0.5) * self.h
        j = self.origin[1] + (np.arange(self.ny) + 0.5) * self.h
        X, Y = np.meshgrid(i, j, indexing="ij")
        return np.stack([X, Y], -1)

    def with_mask(self, mask):
        return GridDomain(mask, self.h, self.origin)

    def full(self):
        return GridSubset(self, self.mask.copy())

    @classmethod
    def from_predicate(cls, pred, bbox, h, pad=1):
        """Cells whose centers satisfy ``pred(points)``, on a lattice covering bbox plus ``pad`` cells."""
        x0, x1, y0, y1 = bbox
        nx = int(round((x1 - x0) / h)) + 2 * pad
        ny = int(round((y1 - y0) / h)) + 2 * pad
        origin = (x0 - pad * h, y0 - pad * h)
        dom = np.zeros((nx, ny), bool)
        tmp = cls.__new__(cls)
        tmp.mask, tmp.h, tmp.origin = dom, h, origin
        pts = tmp.centers()
        inside = np.asarray(pred(pts.reshape(-1, 2)), bool).reshape(nx, ny)
        inside[:pad] = inside[-pad:] = False
        inside[:, :pad] = inside[:, -pad:] = False
        return cls(inside, h, origin)

    @classmethod
    def from_polygon(cls, poly, h, pad=1):
        v = poly.array
        lo = np.floor(v.min(0) / h) * h
        hi = np.ceil(v.max(0) / h) * h
        return cls.from_predicate(poly.contains, (lo[0], hi[0], lo[1], hi[1]), h, pad)

    @classmethod
    def rectangle(cls, width, height, h, pad=1, origin=(0.0, 0.0)):
        nx, ny = int(round(width / h)), int(round(height / h))
        m = np.zeros((nx + 2 * pad, ny + 2 * pad), bool)
        m[pad:pad + nx, pad:pad + ny] = True
        return cls(m, h, (origin[0] - pad * h, origin[1] - pad * h))

    @classmethod
    def wulff(cls, norm, R, h, center=(0.0, 0.0), pad=1):
        c = np.asarray(center, float)
        ext = R * np.array([norm.value(np.array([1.0, 0.0])), norm.value(np.array([0.0, 1.0]))])
        bbox = (c[0] - ext[0], c[0] + ext[0], c[1] - ext[1], c[1] + ext[1])
        bbox = tuple(np.floor(np.asarray(bbox) / h + np.array([0, 1, 0, 1])) * h)
        return cls.from_predicate(lambda p: norm.polar(p - c) < R, bbox, h, pad)

    @classmethod
    def wulff_union(cls, norm, radii, h, gap=None, pad=1):
        """Disjoint Wulff shapes placed side by side along the x axis."""
        ex = float(norm.value(np.array([1.0, 0.0])))
        ey = float(norm.value(np.array([0.0, 1.0])))
        gap = 4 * h if gap is None else gap
        centers = []
        x = 0.0
        for r in radii:
            x += r * ex
            centers.append((x, 0.0))
            x += r * ex + gap
        width = x - gap
        Rmax = max(radii)

        def pred(p):
            out = np.zeros(len(p), bool)
            for (cx, cy), r in zip(centers, radii):
                out |= norm.polar(p - np.array([cx, cy])) < r
            return out

        bbox = (-h, width + h, -Rmax * ey - h, Rmax * ey + h)
        bbox = tuple(np.round(np.asarray(bbox) / h) * h)
        return cls.from_predicate(pred, bbox, h, pad)

    def to_json(self):
        return {"mask_shape": list(self.mask.shape), "h": self.h, "origin": list(self.origin)}


def coarsen(domain):
    """Half-resolution lattice: a coarse cell is inside iff all four fine cells are."""
    m = np.pad(domain.mask, 2)
    m = np.pad(m, ((0, m.shape[0] % 2), (0, m.shape[1] % 2)))
    c = m.reshape(m.shape[0] // 2, 2, m.shape[1] // 2, 2).all(axis=(1, 3))
    origin = (domain.origin[0] - 2 * domain.h, domain.origin[1] - 2 * domain.h)
    return GridDomain(c, 2 * domain.h, origin)


def prolong(values, coarse, fine):
    """Piecewise-constant transfer of coarse cell values onto the fine lattice."""
    C = fine.centers()
    i = np.floor((C[..., 0] - coarse.origin[0]) / coarse.h).astype(int)
    j = np.floor((C[..., 1] - coarse.origin[1]) / coarse.h).astype(int)
    i = np.clip(i, 0, coarse.nx - 1)
    j = np.clip(j, 0, coarse.ny - 1)
    return np.where(fine.mask, values[i, j], 0.0)


@dataclass
class GridSubset:
    parent: GridDomain
    cells: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cells, dtype=bool)
        if c.shape != self.parent.mask.shape:
            raise ValueError("subset must live on the parent lattice")
        if np.any(c & ~self.parent.mask):
            raise ValueError("subset leaves the domain mask")
        self.cells = c

    @property
    def count(self):
        return int(self.cells.sum())

    @property
    def measure(self):
        return self.count * self.parent.h**2

    def is_empty(self):
        return not self.cells.any()

    def complement(self):
        return GridSubset(self.parent, self.parent.mask & ~self.cells)

    def __and__(self, other):
        return GridSubset(self.parent, self.cells & other.cells)

    def __or__(self, other):
        return GridSubset(self.parent, self.cells | other.cells)


# ---------------------------------------------------------------------------
# perimeters


def grid_set_perimeter_F(s, norm, method="stencil", stencil=None):
    """Anisotropic perimeter of a cell set.

    ``method="stencil"`` (default) is the lattice-stencil cut of
    :func:`wulfflab.gridfun.tv_stencil`; ``method="forward"`` is the
    forward-difference tv_F of the indicator.
    """
    if method == "forward":
        return tv_F(GridFunction(s.parent, s.cells.astype(float)), norm)
    if method != "stencil":
        raise ValueError(f"unknown perimeter method {method!r}")
    if not s.cells.any():
        return 0.0
    return tv_stencil(s.cells.astype(float), s.parent.h, stencil or fit_stencil(norm))


def set_ratio(s, norm, **kw):
    return grid_set_perimeter_F(s, norm, **kw) / s.measure


def isoperimetric_deficit(s, norm, **kw):
    """P_F(E) - n kappa^(1/n) |E|^(1 - 1/n); nonnegative in the continuum."""
    n = 2
    return grid_set_perimeter_F(s, norm, **kw) - n * kappa(norm) ** (1 / n) * s.measure ** (1 - 1 / n)


# ---------------------------------------------------------------------------
# anisotropic distance


def _boundary_edge_points(cells, domain):
    """Midpoints of lattice edges between ``cells`` and their complement."""
    h = domain.h
    C = domain.centers()
    pts = []
    inner = cells[:-1, :] != cells[1:, :]
    pts.append(0.5 * (C[:-1, :][inner] + C[1:, :][inner]))
    inner = cells[:, :-1] != cells[:, 1:]
    pts.append(0.5 * (C[:, :-1][inner] + C[:, 1:][inner]))
    # cells on the lattice border facing the outside
    for sl, shift in (((0, slice(None)), (-h, 0)), ((-1, slice(None)), (h, 0)),
                      ((slice(None), 0), (0, -h)), ((slice(None), -1), (0, h))):
        on = cells[sl]
        if on.any():
            pts.append(C[sl][on] + 0.5 * np.asarray(shift))
    return np.concatenate(pts, axis=0)


def _min_polar_distance(points, targets, norm, chunk_elems=2_000_000):
    out = np.empty(len(points))
    step = max(1, chunk_elems // max(1, len(targets)))
    for k in range(0, len(points), step):
        d = points[k:k + step, None, :] - targets[None, :, :]
        out[k:k + step] = norm.polar(d).min(axis=1)
    return out


def anisotropic_distance(domain, target, norm, anchor="center", where=None):
    """Per-cell min over target points y of F°(x - y), computed by brute force.

    ``anchor="center"`` uses the centers of the target cells;
    ``anchor="edge"`` uses the midpoints of the target set's boundary edges,
    i.e. the distance to the boundary of the target. ``where`` restricts the
    evaluation to a boolean cell mask; other cells get +inf.
    """
    cells = target.cells if isinstance(target, GridSubset) else np.asarray(target, bool)
    if not cells.any():
        raise EmptyTarget("distance target is empty")
    if anchor == "center":
        tpts = domain.centers()[cells]
    elif anchor == "edge":
        tpts = _boundary_edge_points(cells, domain)
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    sel = np.ones(domain.mask.shape, bool) if where is None else np.asarray(where, bool)
    out = np.full(domain.mask.shape, np.inf)
    out[sel] = _min_polar_distance(domain.centers()[sel], tpts, norm)
    return out


def boundary_distance(domain, norm, signed=False):
    """d_F(x) = inf over y in the domain boundary of F°(x - y), at every lattice cell.

    With ``signed=True`` the values outside the mask are negated.
    """
    d = anisotropic_distance(domain, domain.mask, norm, anchor="edge")
    if signed:
        d = np.where(domain.mask, d, -d)
    return d


def eikonal_volume(domain, norm):
    """Sum over the mask of h^2 F(grad_h d_F), which should reproduce |Omega|."""
    from .gridfun import grad_h

    d = boundary_distance(domain, norm, signed=True)
    g = grad_h(d, domain.h)
    return float(np.sum(norm.value(g[domain.mask])) * domain.h**2)


@dataclass
class StripRow:
    eps: float
    strip_measure: float
    ratio: float


def strip_volume_check(s, norm, eps_list):
    """|E^eps \\ E| / eps for each eps, where E^eps = {d_F(x, E) <= eps}.

    The strip is measured on the whole lattice of ``s.parent`` (not only
    inside the domain mask), so the lattice must leave room around E.
    """
    dom = s.parent
    h = dom.h
    eps_list = [float(e) for e in eps_list]
    for e in eps_list:
        if e < 2 * h:
            raise EpsilonUnresolvable(f"eps={e} is below two cells (h={h})")
    emax = max(eps_list)
    # cells that can lie in the largest strip
    reach = int(np.ceil(emax / (norm.a * h))) + 1
    near = np.zeros_like(s.cells)
    ii, jj = np.nonzero(s.cells)
    near[max(ii.min() - reach, 0):ii.max() + reach + 1, max(jj.min() - reach, 0):jj.max() + reach + 1] = True
    near &= ~s.cells
    d = anisotropic_distance(dom, s.cells, norm, anchor="edge", where=near)
    border = np.zeros_like(near)
    border[0] = border[-1] = True
    border[:, 0] = border[:, -1] = True
    if np.any(border & (d <= emax)):
        raise ValueError("strip reaches the lattice border; pad the lattice")
    rows = []
    for e in eps_list:
        m = np.count_nonzero(d <= e) * h * h
        rows.append(StripRow(e, m, m / e))
    return rows


def domain_from_spec(spec, norm=None, coarsen_by=1):
    """Build a GridDomain from a JSON-style spec.

    Kinds: ``rectangle`` (width, height), ``polygon`` (vertices), ``wulff``
    (R, needs ``norm``), ``wulff_union`` (radii, optional gap), ``mask``
    (rows of '#' and '.'). Every kind takes the spacing ``h``;
    ``coarsen_by`` multiplies it (used for quick runs).
    """
    if not isinstance(spec, dict):
        raise ConfigError("domain spec must be an object", field="domain")
    kind = spec.get("kind")
    if kind is None:
        raise ConfigError("domain spec needs 'kind'", field="kind")
    if "h" not in spec and kind != "mask":
        raise ConfigError("domain spec needs 'h'", field="h")
    try:
        h = float(spec.get("h", 1.0)) * coarsen_by
    except (TypeError, ValueError):
        raise ConfigError("'h' must be a number", field="h") from None
    if h <= 0:
        raise ConfigError("spacing must be positive", field="h")

    def need(key):
        if key not in spec:
            raise ConfigError(f"{kind} domain needs {key!r}", field=key)
        return spec[key]

    if kind == "rectangle":
        return GridDomain.rectangle(float(need("width")), float(need("height")), h)
    if kind == "polygon":
        try:
            poly = Polygon(tuple(map(tuple, need("vertices"))))
        except DegeneratePolygon as exc:
            raise ConfigError(str(exc), field="vertices") from None
        return GridDomain.from_polygon(poly, h)
    if kind in ("wulff", "wulff_union"):
        if norm is None:
            raise ConfigError(f"{kind} domain needs a norm", field="norm")
        if kind == "wulff":
            return GridDomain.wulff(norm, float(need("R")), h)
        gap = spec.get("gap")
        return GridDomain.wulff_union(norm, [float(r) for r in need("radii")], h,
                                      None if gap is None else float(gap))
    if kind == "mask":
        rows = need("rows")
        m = np.array([[c == "#" for c in row] for row in rows], bool).T[:, ::-1]
        return GridDomain(np.pad(m, 1), float(spec.get("h", 1.0)))
    raise ConfigError(f"unknown domain kind {kind!r}", field="kind")
