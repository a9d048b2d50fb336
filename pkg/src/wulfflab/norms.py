"""Smooth anisotropic norms, their polars, and Wulff-shape measures.

Three families are supported:

* ``euclidean``: F(x) = |x|
* ``quadratic``: F(x) = sqrt(x.A x) with A symmetric positive definite
* ``lq``: F(x) = (sum_i w_i |x_i|^q)^(1/q) with q >= 2 and w_i > 0

All evaluation routines are vectorised over leading axes: ``xi`` may have
shape ``(..., n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import ConfigError, ZeroVector

KINDS = ("euclidean", "quadratic", "lq")


def _as_tuple_matrix(A):
    return tuple(tuple(float(v) for v in row) for row in A)


@dataclass(frozen=True)
class NormDescriptor:
    """An even, convex, 1-homogeneous norm F on R^n.

    ``a`` and ``b`` are the equivalence constants a|x| <= F(x) <= b|x|,
    computed in closed form at construction.
    """

    kind: str
    n: int = 2
    A: tuple | None = None
    q_norm: float | None = None
    weights: tuple | None = None
    a: float = field(init=False)
    b: float = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown norm kind {self.kind!r}", field="kind")
        if self.n < 2:
            raise ConfigError("dimension must be >= 2", field="n")
        if self.kind == "euclidean":
            a = b = 1.0
        elif self.kind == "quadratic":
            A = np.asarray(self.A, dtype=float)
            if A.shape != (self.n, self.n):
                raise ConfigError(f"A must be {self.n}x{self.n}", field="A")
            if not np.allclose(A, A.T):
                raise ConfigError("A must be symmetric", field="A")
            eig = np.linalg.eigvalsh(A)
            if eig[0] <= 0:
                raise ConfigError("A must be positive definite", field="A")
            object.__setattr__(self, "A", _as_tuple_matrix(A))
            a, b = math.sqrt(eig[0]), math.sqrt(eig[-1])
        else:
            q = self.q_norm
            if q is None or q < 2:
                raise ConfigError("lq norms need q_norm >= 2", field="q_norm")
            w = np.ones(self.n) if self.weights is None else np.asarray(self.weights, float)
            if w.shape != (self.n,) or np.any(w <= 0):
                raise ConfigError(f"weights must be {self.n} positive numbers", field="weights")
            object.__setattr__(self, "weights", tuple(float(x) for x in w))
            b = float(w.max()) ** (1.0 / q)
            if q == 2:
                a = math.sqrt(w.min())
            else:
                # min of sum w_i s_i^(q/2) over the simplex: s_i ~ w_i^(-2/(q-2))
                s = np.exp(-2.0 / (q - 2.0) * np.log(w / w.min()))  # scaled to avoid overflow near q = 2
                s = s / s.sum()
                a = float((w * s ** (q / 2.0)).sum()) ** (1.0 / q)
        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "b", float(b))

    # -- construction helpers -------------------------------------------------

    @classmethod
    def euclidean(cls, n=2):
        return cls("euclidean", n=n)

    @classmethod
    def quadratic(cls, A):
        A = np.asarray(A, dtype=float)
        return cls("quadratic", n=A.shape[0], A=_as_tuple_matrix(A))

    @classmethod
    def lq(cls, q, weights=None, n=2):
        if weights is not None:
            n = len(weights)
            weights = tuple(float(w) for w in weights)
        return cls("lq", n=n, q_norm=float(q), weights=weights)

    @classmethod
    def from_json(cls, spec):
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigError("norm spec must be an object with a 'kind' field", field="kind")
        kind = spec["kind"]
        if kind == "euclidean":
            return cls.euclidean(int(spec.get("n", 2)))
        if kind == "quadratic":
            if "A" not in spec:
                raise ConfigError("quadratic norm needs 'A'", field="A")
            return cls.quadratic(spec["A"])
        if kind == "lq":
            if "q" not in spec and "q_norm" not in spec:
                raise ConfigError("lq norm needs 'q'", field="q")
            q = spec.get("q", spec.get("q_norm"))
            return cls.lq(q, spec.get("weights"), n=int(spec.get("n", 2)))
        raise ConfigError(f"unknown norm kind {kind!r}", field="kind")

    def to_json(self):
        if self.kind == "euclidean":
            return {"kind": "euclidean", "n": self.n}
        if self.kind == "quadratic":
            return {"kind": "quadratic", "A": [list(r) for r in self.A]}
        return {"kind": "lq", "q": self.q_norm, "weights": list(self.weights)}

    def scaled(self, c):
        """The norm c*F (c > 0)."""
        if self.kind == "euclidean":
            return NormDescriptor.quadratic(c * c * np.eye(self.n))
        if self.kind == "quadratic":
            return NormDescriptor.quadratic(c * c * self.matrix)
        return NormDescriptor.lq(self.q_norm, [c**self.q_norm * w for w in self.weights])

    # -- cached numeric views ---------------------------------------------------

    @property
    def matrix(self):
        return np.asarray(self.A, dtype=float)

    @property
    def matrix_inv(self):
        return np.linalg.inv(self.matrix)

    @property
    def q_polar(self):
        q = self.q_norm
        return q / (q - 1.0)

    @property
    def weights_polar(self):
        w = np.asarray(self.weights, float)
        return w ** (-self.q_polar / self.q_norm)

    # -- evaluation -------------------------------------------------------------

    def __call__(self, xi):
        return self.value(xi)

    def value(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.kind == "euclidean":
            return np.sqrt(np.sum(xi * xi, axis=-1))
        if self.kind == "quadratic":
            Ax = xi @ self.matrix.T
            return np.sqrt(np.maximum(np.sum(xi * Ax, axis=-1), 0.0))
        return _weighted_lq(xi, np.asarray(self.weights), self.q_norm)

    def polar(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "euclidean":
            return np.sqrt(np.sum(v * v, axis=-1))
        if self.kind == "quadratic":
            Bv = v @ self.matrix_inv.T
            return np.sqrt(np.maximum(np.sum(v * Bv, axis=-1), 0.0))
        return _weighted_lq(v, self.weights_polar, self.q_polar)

    def grad(self, xi):
        xi = np.asarray(xi, dtype=float)
        Fx = self.value(xi)
        if np.any(Fx == 0):
            raise ZeroVector("gradient of F is undefined at the origin")
        if self.kind == "euclidean":
            return xi / Fx[..., None]
        if self.kind == "quadratic":
            return (xi @ self.matrix.T) / Fx[..., None]
        return _weighted_lq_grad(xi, Fx, np.asarray(self.weights), self.q_norm)

    def polar_grad(self, v):
        v = np.asarray(v, dtype=float)
        Fv = self.polar(v)
        if np.any(Fv == 0):
            raise ZeroVector("gradient of the polar is undefined at the origin")
        if self.kind == "euclidean":
            return v / Fv[..., None]
        if self.kind == "quadratic":
            return (v @ self.matrix_inv.T) / Fv[..., None]
        return _weighted_lq_grad(v, Fv, self.weights_polar, self.q_polar)

    def half_grad_sq(self, xi):
        """F(xi) * grad F(xi), i.e. the gradient of F^2/2; zero at the origin."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "euclidean":
            return xi.copy()
        if self.kind == "quadratic":
            return xi @ self.matrix.T
        q = self.q_norm
        w = np.asarray(self.weights)
        num = w * np.abs(xi) ** (q - 1.0) * np.sign(xi)
        if q == 2:
            return num
        Fx = self.value(xi)[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / Fx ** (q - 2.0)
        return np.where(Fx > 0, out, 0.0)


def _weighted_lq(x, w, q):
    ax = np.abs(x)
    scale = np.max(ax, axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    s = np.sum(w * (ax / safe) ** q, axis=-1)
    return scale[..., 0] * s ** (1.0 / q)


def _weighted_lq_grad(x, Fx, w, q):
    r = np.abs(x) / Fx[..., None]
    return w * r ** (q - 1.0) * np.sign(x)


# ---------------------------------------------------------------------------
# module-level operations


def evaluate(norm, xi):
    return norm.value(xi)


def grad(norm, xi):
    return norm.grad(xi)


def polar_eval(norm, v):
    return norm.polar(v)


def _sphere_directions_2d(m):
    t = 2.0 * np.pi * np.arange(m) / m
    return t, np.stack([np.cos(t), np.sin(t)], axis=-1)


def _fibonacci_sphere(m):
    k = np.arange(m) + 0.5
    z = 1.0 - 2.0 * k / m
    phi = np.pi * (1.0 + 5.0**0.5) * k
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def _sup_ratio(numer_norm, v, denom, nodes=4096):
    """sup over unit xi of <xi, v> / denom(xi)."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return 0.0
    n = v.shape[-1]
    if n == 2:
        t, om = _sphere_directions_2d(nodes)
        vals = (om @ v) / denom(om)
        k = int(np.argmax(vals))
        dt = 2.0 * np.pi / nodes

        def f(s):
            w = np.array([math.cos(s), math.sin(s)])
            return -float(w @ v) / float(denom(w))

        res = minimize_scalar(f, bounds=(t[k] - 2 * dt, t[k] + 2 * dt), method="bounded",
                              options={"xatol": 1e-12})
        return max(float(vals[k]), -float(res.fun))
    om = _fibonacci_sphere(nodes)
    vals = (om @ v) / denom(om)
    x0 = om[int(np.argmax(vals))]

    def g(x):
        return -float(x @ v) / float(denom(x))

    res = minimize(g, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    return max(float(vals.max()), -float(res.fun))


def polar_eval_numeric(norm, v, nodes=4096):
    """F°(v) by direct maximisation of <xi, v>/F(xi) over the unit sphere."""
    return _sup_ratio(norm, v, norm.value, nodes)


def dual_eval_numeric(norm, v, nodes=4096):
    """F(v) recovered from the polar by maximising <xi, v>/F°(xi)."""
    return _sup_ratio(norm, v, norm.polar, nodes)


def hessian_fd(norm, xi, rel_step=1e-5):
    """Central finite-difference Hessian of F built from the analytic gradient."""
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    d = rel_step * np.linalg.norm(xi)
    H = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = d
        H[:, j] = (norm.grad(xi + e) - norm.grad(xi - e)) / (2 * d)
    return H


@dataclass
class IdentityReport:
    norm: NormDescriptor
    sample_count: int
    residuals: dict

    def passes(self, tol=1e-8, hessian_tol=1e-5):
        return all(v <= (hessian_tol if k == "hessian_xi" else tol) for k, v in self.residuals.items())


def verify_identities(norm, sample_count=1000, seed=0):
    """Check the first- and second-order calculus identities of F and F° on random samples.

    Residuals reported (max over samples, all relative or dimensionless):

    * ``euler``: |grad F(x).x - F(x)| / F(x)
    * ``polar_of_grad``: |F°(grad F(x)) - 1|
    * ``norm_of_polar_grad``: |F(grad F°(x)) - 1|
    * ``reconstruct_polar``: |F°(x) grad F(grad F°(x)) - x| / |x|
    * ``reconstruct_primal``: |F(x) grad F°(grad F(x)) - x| / |x|
    * ``hessian_xi``: |Hess F(x) x| with the Hessian from central differences
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((sample_count, norm.n))
    xi *= 10.0 ** rng.uniform(-2, 2, size=(sample_count, 1))
    Fx = norm.value(xi)
    Fo = norm.polar(xi)
    gF = norm.grad(xi)
    gFo = norm.polar_grad(xi)
    nx = np.linalg.norm(xi, axis=-1)
    res = {
        "euler": np.max(np.abs(np.sum(gF * xi, axis=-1) - Fx) / Fx),
        "polar_of_grad": np.max(np.abs(norm.polar(gF) - 1.0)),
        "norm_of_polar_grad": np.max(np.abs(norm.value(gFo) - 1.0)),
        "reconstruct_polar": np.max(np.linalg.norm(Fo[:, None] * norm.grad(gFo) - xi, axis=-1) / nx),
        "reconstruct_primal": np.max(np.linalg.norm(Fx[:, None] * norm.polar_grad(gF) - xi, axis=-1) / nx),
    }
    hx = [np.linalg.norm(hessian_fd(norm, x) @ x) for x in xi]
    res["hessian_xi"] = float(np.max(hx))
    return IdentityReport(norm, sample_count, {k: float(v) for k, v in res.items()})


# ---------------------------------------------------------------------------
# Wulff shapes


@dataclass(frozen=True)
class WulffShape:
    norm: NormDescriptor
    radius: float
    center: tuple = (0.0, 0.0)

    def contains(self, x):
        x = np.asarray(x, dtype=float) - np.asarray(self.center)
        return self.norm.polar(x) < self.radius

    @property
    def measure(self):
        return wulff_measure(self.norm, self.radius)

    @property
    def perimeter(self):
        return wulff_perimeter(self.norm, self.radius)


def _gauss_sphere(m):
    """Product rule on S^2: Gauss-Legendre in cos(theta), uniform in phi."""
    z, wz = np.polynomial.legendre.leggauss(m)
    phi = 2.0 * np.pi * np.arange(2 * m) / (2 * m)
    Z, P = np.meshgrid(z, phi, indexing="ij")
    R = np.sqrt(1.0 - Z * Z)
    pts = np.stack([R * np.cos(P), R * np.sin(P), Z], axis=-1).reshape(-1, 3)
    w = (wz[:, None] * np.full(2 * m, 2.0 * np.pi / (2 * m))[None, :]).reshape(-1)
    return pts, w


def kappa(norm, nodes=None):
    """Measure of the unit Wulff shape {F° < 1}.

    Polar coordinates give kappa = (1/n) * integral over S^{n-1} of F°(w)^{-n}.
    For n = 2 the rule is the periodic trapezoid rule on ``nodes`` (default
    4096) equispaced angles; for n = 3 it is a product Gauss rule with
    ``nodes`` (default 64) Legendre nodes in cos(theta).
    """
    n = norm.n
    if n == 2:
        m = nodes or 4096
        _, om = _sphere_directions_2d(m)
        return float(np.sum(norm.polar(om) ** -2.0) * (2.0 * np.pi / m) / 2.0)
    if n == 3:
        pts, w = _gauss_sphere(nodes or 64)
        return float(np.sum(w * norm.polar(pts) ** -3.0) / 3.0)
    raise NotImplementedError("sphere quadrature implemented for n = 2, 3")


def wulff_measure(norm, r, nodes=None):
    if r <= 0:
        raise ValueError("radius must be positive")
    return kappa(norm, nodes) * r**norm.n


def wulff_perimeter(norm, r, nodes=None):
    """Anisotropic perimeter of the Wulff shape of radius r by boundary quadrature.

    The boundary is parametrised radially, x(w) = r w / F°(w); the
    integrand F(nu) dH^{n-1} is evaluated as F of the (unnormalised)
    outward area vector, which avoids normalising nu.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    n = norm.n
    if n == 2:
        m = nodes or 4096
        t, om = _sphere_directions_2d(m)
        dom = np.stack([-np.sin(t), np.cos(t)], axis=-1)
        fo = norm.polar(om)
        dfo = np.sum(norm.polar_grad(om) * dom, axis=-1)
        dx = r * (dom / fo[:, None] - om * (dfo / fo**2)[:, None])
        area_vec = np.stack([dx[:, 1], -dx[:, 0]], axis=-1)
        return float(np.sum(norm.value(area_vec)) * 2.0 * np.pi / m)
    if n == 3:
        m = nodes or 64
        th, wt = np.polynomial.legendre.leggauss(m)
        th = (th + 1.0) * np.pi / 2.0
        wt = wt * np.pi / 2.0
        phi = 2.0 * np.pi * np.arange(2 * m) / (2 * m)
        T, P = np.meshgrid(th, phi, indexing="ij")
        st, ct, sp, cp = np.sin(T), np.cos(T), np.sin(P), np.cos(P)
        om = np.stack([st * cp, st * sp, ct], axis=-1)
        om_t = np.stack([ct * cp, ct * sp, -st], axis=-1)
        om_p = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1)
        fo = norm.polar(om)[..., None]
        g = norm.polar_grad(om)
        x_t = r * (om_t / fo - om * np.sum(g * om_t, -1, keepdims=True) / fo**2)
        x_p = r * (om_p / fo - om * np.sum(g * om_p, -1, keepdims=True) / fo**2)
        area_vec = np.cross(x_t, x_p)
        W = wt[:, None] * np.full(2 * m, 2.0 * np.pi / (2 * m))[None, :]
        return float(np.sum(W * norm.value(area_vec)))
    raise NotImplementedError("boundary quadrature implemented for n = 2, 3")


def wulff_boundary_polygon(norm, r=1.0, m=256, center=(0.0, 0.0)):
    """Vertices (counterclockwise) of an m-gon inscribed in the Wulff shape boundary."""
    if norm.n != 2:
        raise ValueError("planar norms only")
    _, om = _sphere_directions_2d(m)
    return r * om / norm.polar(om)[:, None] + np.asarray(center, float)
