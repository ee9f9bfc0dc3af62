"""Model spaces and their distance oracles.

A space is a tree of constructors (sphere, circle, line, products, Euclidean
cones, spherical suspensions and joins, weighted graphs, convex Euclidean
bodies).  Points are flat float arrays whose layout follows the tree:

    Sphere(n)        unit vector, n + 1 coordinates
    Circle(L)        [s] with s in [0, L)
    Line, HalfLine   [x]
    Product(A, B)    A-coordinates followed by B-coordinates
    Cone(B)          [t, *b]   radius t >= 0, apex at t = 0
    Suspension(B)    [t, *b]   latitude t in [0, pi], poles at 0 and pi
    Join(A, B)       [t, *a, *b] mixing angle t in [0, pi/2]
    Graph            [node index]
    Euclidean(n)     Cartesian coordinates inside a convex region

All distance formulas are written in chord/half-angle form so that nearby
points keep full relative precision.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.sparse import coo_matrix
from scipy.spatial.distance import cdist
from scipy.sparse.csgraph import shortest_path

PI = math.pi
UNIT_TOL = 1e-12


class InvalidSpec(ValueError):
    pass


class ForeignPoint(ValueError):
    pass


class AmbiguousGeodesic(ValueError):
    pass


# ---------------------------------------------------------------------------
# number parsing for spec documents
# ---------------------------------------------------------------------------

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return PI
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_node(node.operand))
    raise InvalidSpec(f"unsupported numeric expression: {ast.dump(node)}")


def parse_number(value) -> float:
    """Numbers in spec files: JSON numbers, decimal strings, or simple expressions in ``pi``."""
    if isinstance(value, bool):
        raise InvalidSpec(f"not a number: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
        try:
            return _eval_node(ast.parse(value, mode="eval"))
        except SyntaxError as exc:
            raise InvalidSpec(f"not a number: {value!r}") from exc
    raise InvalidSpec(f"not a number: {value!r}")


# ---------------------------------------------------------------------------
# constructor tree
# ---------------------------------------------------------------------------


def _norm(x):
    return np.sqrt(np.sum(x * x, axis=-1))


def _mix_collinear(r1, r2, a, b):
    """Signed radius of a*P + b*Q when P, Q lie on opposite rays through the apex."""
    return a * r1 - b * r2


class Geometry:
    """Node of a constructor tree.  Subclasses implement the metric."""

    kind: str = ""
    compact: bool = True

    @property
    def width(self) -> int:
        raise NotImplementedError

    @property
    def natural_k(self) -> float:
        raise NotImplementedError

    def dist(self, X, Y) -> np.ndarray:
        raise NotImplementedError

    def pairwise(self, X, Y) -> np.ndarray:
        """Distance matrix between the rows of X and the rows of Y."""
        return self.dist(X[:, None, :], Y[None, :, :])

    def canonical(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float)

    def check(self, X) -> None:
        X = np.asarray(X, dtype=float)
        if X.shape[-1:] != (self.width,):
            raise ForeignPoint(f"{self.kind} expects {self.width} coordinates, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ForeignPoint(f"non-finite coordinates for {self.kind}")

    def origin(self) -> np.ndarray:
        raise NotImplementedError

    def geodesic(self, p, q, u: float) -> np.ndarray:
        raise NotImplementedError

    def geodesics(self, P: np.ndarray, Q: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Row-wise geodesic for canonical rows; u = 0 and u = 1 return the endpoints."""
        out = np.array(P, dtype=float)
        for i in np.nonzero(u > 0)[0]:
            out[i] = Q[i] if u[i] >= 1 else self.geodesic(P[i], Q[i], float(u[i]))
        return out

    def sample(self, resolution: float, rng: np.random.Generator, radius: float) -> np.ndarray:
        raise NotImplementedError

    def random(self, n: int, rng: np.random.Generator, radius: float) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def encode(self, p) -> Any:
        return [float(v) for v in np.asarray(p, dtype=float)]

    def decode(self, obj) -> np.ndarray:
        return np.asarray([parse_number(v) for v in obj], dtype=float)

    def children(self) -> tuple["Geometry", ...]:
        return ()

    def prepare(self) -> None:
        for child in self.children():
            child.prepare()

    # cone arithmetic over this node, used by Cone/Suspension/Join geodesics
    def cone_mix(self, r1: float, x, r2: float, y, a: float, b: float):
        """Return (radius, base point) of a*(r1, x) + b*(r2, y) in the Euclidean cone over self."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if r1 * a == 0.0 and r2 * b == 0.0:
            return 0.0, self.origin()
        if r2 * b == 0.0:
            return a * r1, x
        if r1 * a == 0.0:
            return b * r2, y
        d = min(float(self.dist(x, y)), PI)
        if d == 0.0:
            return a * r1 + b * r2, x
        if d >= PI:
            w = _mix_collinear(r1, r2, a, b)
            if w > 0:
                return w, x
            if w < 0:
                return -w, y
            return 0.0, self.origin()
        px = a * r1 + b * r2 * math.cos(d)
        py = b * r2 * math.sin(d)
        rad = math.hypot(px, py)
        phi = math.atan2(py, px)
        frac = min(max(phi / d, 0.0), 1.0)
        return rad, self.geodesic(x, y, frac)

    def cone_mixes(self, r1, X, r2, Y, a, b):
        """Row-wise cone_mix; generic rows are vectorised, the rest use the scalar rule."""
        w1, w2 = a * r1, b * r2
        d = np.minimum(self.dist(X, Y), PI)
        generic = (w1 != 0.0) & (w2 != 0.0) & (d > 0.0) & (d < PI)
        rad = np.empty(len(X))
        out = np.array(X, dtype=float)
        for i in np.nonzero(~generic)[0]:
            rad[i], out[i] = self.cone_mix(r1[i], X[i], r2[i], Y[i], a[i], b[i])
        g = generic
        px = w1[g] + w2[g] * np.cos(d[g])
        py = w2[g] * np.sin(d[g])
        rad[g] = np.hypot(px, py)
        frac = np.clip(np.arctan2(py, px) / d[g], 0.0, 1.0)
        out[g] = self.geodesics(X[g], Y[g], frac)
        return rad, out


def _slerp_weights(D: float, u: float):
    s = math.sin(D)
    return math.sin((1.0 - u) * D) / s, math.sin(u * D) / s


def _slerp_rows(D, u, label: str):
    """Vectorised slerp weights; zero-length rows get (1, 0)."""
    moving = D > 0.0
    if np.any(moving & (u > 0) & (u < 1) & (PI - D < 1e-12)):
        raise AmbiguousGeodesic(f"points at distance pi in a {label}")
    Ds = np.where(moving, D, 1.0)
    s = np.sin(Ds)
    a = np.where(moving, np.sin((1.0 - u) * Ds) / s, 1.0)
    b = np.where(moving, np.sin(u * Ds) / s, 0.0)
    return a, b


class Sphere(Geometry):
    kind = "Sphere"

    def __init__(self, dim: int):
        if int(dim) != dim or dim < 1:
            raise InvalidSpec(f"Sphere dimension must be a positive integer, got {dim}")
        self.dim = int(dim)

    @property
    def width(self):
        return self.dim + 1

    @property
    def natural_k(self):
        return 1.0

    def dist(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return 2.0 * np.arctan2(_norm(X - Y), _norm(X + Y))

    def pairwise(self, X, Y):
        return 2.0 * np.arctan2(cdist(X, Y), cdist(X, -Y))

    def canonical(self, X):
        X = np.asarray(X, dtype=float)
        return X / _norm(X)[..., None]

    def check(self, X):
        super().check(X)
        if np.any(np.abs(_norm(np.asarray(X, dtype=float)) - 1.0) > UNIT_TOL):
            raise ForeignPoint("Sphere points must be unit vectors")

    def origin(self):
        e = np.zeros(self.width)
        e[0] = 1.0
        return e

    def geodesic(self, p, q, u):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        D = float(self.dist(p, q))
        if D == 0.0:
            return p.copy()
        if PI - D < 1e-12:
            raise AmbiguousGeodesic(f"antipodal points on Sphere({self.dim})")
        a, b = _slerp_weights(D, u)
        r = a * p + b * q
        return r / np.linalg.norm(r)

    def geodesics(self, P, Q, u):
        a, b = _slerp_rows(self.dist(P, Q), u, "sphere")
        r = a[:, None] * P + b[:, None] * Q
        return r / np.linalg.norm(r, axis=1, keepdims=True)

    def sample(self, resolution, rng, radius):
        if self.dim == 1:
            n = max(1, math.ceil(2 * PI / resolution))
            ang = 2 * PI * np.arange(n) / n
            return np.column_stack([np.cos(ang), np.sin(ang)])
        if self.dim == 2:
            n = max(2, math.ceil(1.25 * 4 * PI / resolution**2))
            i = np.arange(n) + 0.5
            z = 1.0 - 2.0 * i / n
            phi = PI * (1.0 + 5**0.5) * i
            rr = np.sqrt(np.maximum(0.0, 1.0 - z * z))
            pts = np.column_stack([rr * np.cos(phi), rr * np.sin(phi), z])
            rot = _random_rotation(3, rng)
            return pts @ rot.T
        area = 2 * PI ** ((self.dim + 1) / 2) / math.gamma((self.dim + 1) / 2)
        n = max(2, math.ceil(4.0 * area / resolution**self.dim))
        return self.random(n, rng, radius)

    def random(self, n, rng, radius):
        g = rng.standard_normal((n, self.width))
        return g / _norm(g)[:, None]

    def to_dict(self):
        return {"type": "Sphere", "dim": self.dim}


def _random_rotation(n: int, rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


class Circle(Geometry):
    kind = "Circle"

    def __init__(self, perimeter: float):
        if not perimeter > 0:
            raise InvalidSpec(f"Circle perimeter must be positive, got {perimeter}")
        self.perimeter = float(perimeter)

    @property
    def width(self):
        return 1

    @property
    def natural_k(self):
        return min(1.0, (2 * PI / self.perimeter) ** 2)

    def dist(self, X, Y):
        L = self.perimeter
        d = np.abs(np.asarray(X, dtype=float)[..., 0] - np.asarray(Y, dtype=float)[..., 0]) % L
        return np.minimum(d, L - d)

    def pairwise(self, X, Y):
        # rows are canonical, so the raw difference already lies in (-L, L)
        d = np.abs(X[:, 0][:, None] - Y[:, 0][None, :])
        return np.minimum(d, self.perimeter - d)

    def canonical(self, X):
        X = np.asarray(X, dtype=float) % self.perimeter
        return np.where(X >= self.perimeter, 0.0, X)

    def origin(self):
        return np.zeros(1)

    def geodesic(self, p, q, u):
        L = self.perimeter
        s = float(p[0]) % L
        delta = (float(q[0]) - s) % L
        if delta <= L / 2:
            out = s + u * delta
        else:
            out = s - u * (L - delta)
        return np.array([out % L])

    def geodesics(self, P, Q, u):
        L = self.perimeter
        s = P[:, 0] % L
        delta = (Q[:, 0] - s) % L
        out = np.where(delta <= L / 2, s + u * delta, s - u * (L - delta))
        return (out % L)[:, None]

    def sample(self, resolution, rng, radius):
        n = max(1, math.ceil(self.perimeter / resolution - 1e-12))
        return (self.perimeter * np.arange(n) / n)[:, None]

    def random(self, n, rng, radius):
        return rng.uniform(0, self.perimeter, (n, 1))

    def to_dict(self):
        return {"type": "Circle", "perimeter": self.perimeter}

    def encode(self, p):
        return float(np.asarray(p, dtype=float).reshape(-1)[0])

    def decode(self, obj):
        if isinstance(obj, (list, tuple)):
            return super().decode(obj)
        return np.array([parse_number(obj)])


class Line(Geometry):
    kind = "Line"
    compact = False
    lower = -math.inf

    @property
    def width(self):
        return 1

    @property
    def natural_k(self):
        return 0.0

    def dist(self, X, Y):
        return np.abs(np.asarray(X, dtype=float)[..., 0] - np.asarray(Y, dtype=float)[..., 0])

    def pairwise(self, X, Y):
        return np.abs(X[:, 0][:, None] - Y[:, 0][None, :])

    def check(self, X):
        super().check(X)
        if np.any(np.asarray(X, dtype=float)[..., 0] < self.lower):
            raise ForeignPoint(f"{self.kind} coordinate below {self.lower}")

    def origin(self):
        return np.zeros(1)

    def geodesic(self, p, q, u):
        return (1.0 - u) * np.asarray(p, dtype=float) + u * np.asarray(q, dtype=float)

    def geodesics(self, P, Q, u):
        return (1.0 - u)[:, None] * P + u[:, None] * Q

    def _range(self, radius):
        return -radius, radius

    def sample(self, resolution, rng, radius):
        lo, hi = self._range(radius)
        n = max(1, math.ceil((hi - lo) / resolution - 1e-12))
        return np.linspace(lo, hi, n + 1)[:, None]

    def random(self, n, rng, radius):
        lo, hi = self._range(radius)
        return rng.uniform(lo, hi, (n, 1))

    def to_dict(self):
        return {"type": self.kind}

    encode = Circle.encode
    decode = Circle.decode


class HalfLine(Line):
    kind = "HalfLine"
    lower = 0.0

    def _range(self, radius):
        return 0.0, radius


class Product(Geometry):
    kind = "Product"

    def __init__(self, a: Geometry, b: Geometry):
        self.a = a
        self.b = b

    @property
    def compact(self):
        return self.a.compact and self.b.compact

    @property
    def width(self):
        return self.a.width + self.b.width

    @property
    def natural_k(self):
        return min(self.a.natural_k, self.b.natural_k, 0.0)

    def children(self):
        return (self.a, self.b)

    def _split(self, X):
        X = np.asarray(X, dtype=float)
        w = self.a.width
        return X[..., :w], X[..., w:]

    def dist(self, X, Y):
        xa, xb = self._split(X)
        ya, yb = self._split(Y)
        return np.hypot(self.a.dist(xa, ya), self.b.dist(xb, yb))

    def pairwise(self, X, Y):
        xa, xb = self._split(X)
        ya, yb = self._split(Y)
        return np.hypot(self.a.pairwise(xa, ya), self.b.pairwise(xb, yb))

    def canonical(self, X):
        xa, xb = self._split(X)
        return np.concatenate([self.a.canonical(xa), self.b.canonical(xb)], axis=-1)

    def check(self, X):
        super().check(X)
        xa, xb = self._split(X)
        self.a.check(xa)
        self.b.check(xb)

    def origin(self):
        return np.concatenate([self.a.origin(), self.b.origin()])

    def geodesic(self, p, q, u):
        pa, pb = self._split(p)
        qa, qb = self._split(q)
        ga = pa.copy() if self.a.dist(pa, qa) == 0 else self.a.geodesic(pa, qa, u)
        gb = pb.copy() if self.b.dist(pb, qb) == 0 else self.b.geodesic(pb, qb, u)
        return np.concatenate([ga, gb])

    def geodesics(self, P, Q, u):
        pa, pb = self._split(P)
        qa, qb = self._split(Q)
        ua = np.where(self.a.dist(pa, qa) == 0, 0.0, u)
        ub = np.where(self.b.dist(pb, qb) == 0, 0.0, u)
        return np.concatenate([self.a.geodesics(pa, qa, ua), self.b.geodesics(pb, qb, ub)], axis=1)

    def sample(self, resolution, rng, radius):
        r = resolution / math.sqrt(2.0)
        A = self.a.sample(r, rng, radius)
        B = self.b.sample(r, rng, radius)
        ia, ib = np.meshgrid(np.arange(len(A)), np.arange(len(B)), indexing="ij")
        return np.concatenate([A[ia.ravel()], B[ib.ravel()]], axis=1)

    def random(self, n, rng, radius):
        return np.concatenate([self.a.random(n, rng, radius), self.b.random(n, rng, radius)], axis=1)

    def to_dict(self):
        return {"type": "Product", "factors": [self.a.to_dict(), self.b.to_dict()]}

    def encode(self, p):
        pa, pb = self._split(p)
        return [self.a.encode(pa), self.b.encode(pb)]

    def decode(self, obj):
        return np.concatenate([self.a.decode(obj[0]), self.b.decode(obj[1])])


def _check_spherical_base(base: Geometry, owner: str) -> None:
    if base.natural_k < 1.0:
        raise InvalidSpec(f"{owner} base must have curvature bound >= 1, got {base.natural_k}")


class Cone(Geometry):
    """Euclidean cone over an Alex(1) base."""

    kind = "Cone"
    compact = False

    def __init__(self, base: Geometry):
        _check_spherical_base(base, "Cone")
        self.base = base

    @property
    def width(self):
        return 1 + self.base.width

    @property
    def natural_k(self):
        return 0.0

    def children(self):
        return (self.base,)

    def dist(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        t, s = X[..., 0], Y[..., 0]
        d = np.minimum(self.base.dist(X[..., 1:], Y[..., 1:]), PI)
        return np.sqrt((t - s) ** 2 + 4.0 * t * s * np.sin(0.5 * d) ** 2)

    def pairwise(self, X, Y):
        t, s = X[:, 0][:, None], Y[:, 0][None, :]
        d = np.minimum(self.base.pairwise(X[:, 1:], Y[:, 1:]), PI)
        return np.sqrt((t - s) ** 2 + 4.0 * t * s * np.sin(0.5 * d) ** 2)

    def canonical(self, X):
        X = np.array(X, dtype=float)
        base = self.base.canonical(X[..., 1:])
        apex = X[..., 0] == 0.0
        base = np.where(apex[..., None], self.base.origin(), base)
        return np.concatenate([X[..., :1], base], axis=-1)

    def check(self, X):
        super().check(X)
        X = np.asarray(X, dtype=float)
        if np.any(X[..., 0] < 0):
            raise ForeignPoint("Cone radius must be nonnegative")
        self.base.check(X[..., 1:])

    def origin(self):
        return np.concatenate([[0.0], self.base.origin()])

    def geodesic(self, p, q, u):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        rad, b = self.base.cone_mix(p[0], p[1:], q[0], q[1:], 1.0 - u, u)
        return self.canonical(np.concatenate([[rad], b]))

    def geodesics(self, P, Q, u):
        rad, B = self.base.cone_mixes(P[:, 0], P[:, 1:], Q[:, 0], Q[:, 1:], 1.0 - u, u)
        return self.canonical(np.column_stack([rad, B]))

    def sample(self, resolution, rng, radius):
        n_r = max(1, math.ceil(radius / resolution - 1e-12))
        rows = [self.origin()[None, :]]
        for j in range(1, n_r + 1):
            t = radius * j / n_r
            B = self.base.sample(resolution / t, rng, radius)
            rows.append(np.column_stack([np.full(len(B), t), B]))
        return np.concatenate(rows)

    def random(self, n, rng, radius):
        t = radius * np.sqrt(rng.uniform(0, 1, n))
        return np.column_stack([t, self.base.random(n, rng, radius)])

    def to_dict(self):
        return {"type": "Cone", "base": self.base.to_dict()}

    def encode(self, p):
        p = np.asarray(p, dtype=float)
        return {"t": float(p[0]), "base": self.base.encode(p[1:])}

    def decode(self, obj):
        return np.concatenate([[parse_number(obj["t"])], self.base.decode(obj["base"])])


class Suspension(Geometry):
    """Spherical suspension over an Alex(1) base; poles at latitude 0 and pi."""

    kind = "Suspension"

    def __init__(self, base: Geometry):
        _check_spherical_base(base, "Suspension")
        self.base = base

    @property
    def width(self):
        return 1 + self.base.width

    @property
    def natural_k(self):
        return 1.0

    def children(self):
        return (self.base,)

    def dist(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        d = np.minimum(self.base.dist(X[..., 1:], Y[..., 1:]), PI)
        return self._formula(X[..., 0], Y[..., 0], d)

    def pairwise(self, X, Y):
        d = np.minimum(self.base.pairwise(X[:, 1:], Y[:, 1:]), PI)
        return self._formula(X[:, 0][:, None], Y[:, 0][None, :], d)

    @staticmethod
    def _formula(t, s, d):
        ss = np.sin(t) * np.sin(s)
        num = np.sin(0.5 * (t - s)) ** 2 + ss * np.sin(0.5 * d) ** 2
        den = np.cos(0.5 * (t + s)) ** 2 + ss * np.cos(0.5 * d) ** 2
        return 2.0 * np.arctan2(np.sqrt(np.maximum(num, 0.0)), np.sqrt(np.maximum(den, 0.0)))

    def canonical(self, X):
        X = np.array(X, dtype=float)
        base = self.base.canonical(X[..., 1:])
        pole = (X[..., 0] == 0.0) | (X[..., 0] == PI)
        base = np.where(pole[..., None], self.base.origin(), base)
        return np.concatenate([X[..., :1], base], axis=-1)

    def check(self, X):
        super().check(X)
        X = np.asarray(X, dtype=float)
        if np.any((X[..., 0] < 0) | (X[..., 0] > PI)):
            raise ForeignPoint("Suspension latitude must lie in [0, pi]")
        self.base.check(X[..., 1:])

    def origin(self):
        return np.concatenate([[0.0], self.base.origin()])

    def pole(self, which: int) -> np.ndarray:
        return np.concatenate([[0.0 if which == 1 else PI], self.base.origin()])

    def geodesic(self, p, q, u):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        D = float(self.dist(p, q))
        if D == 0.0:
            return p.copy()
        if PI - D < 1e-12:
            raise AmbiguousGeodesic("points at distance pi in a suspension")
        a, b = _slerp_weights(D, u)
        z = a * math.cos(p[0]) + b * math.cos(q[0])
        rad, base = self.base.cone_mix(math.sin(p[0]), p[1:], math.sin(q[0]), q[1:], a, b)
        t = math.atan2(rad, z)
        return self.canonical(np.concatenate([[t], base]))

    def geodesics(self, P, Q, u):
        a, b = _slerp_rows(self.dist(P, Q), u, "suspension")
        z = a * np.cos(P[:, 0]) + b * np.cos(Q[:, 0])
        rad, B = self.base.cone_mixes(np.sin(P[:, 0]), P[:, 1:], np.sin(Q[:, 0]), Q[:, 1:], a, b)
        return self.canonical(np.column_stack([np.arctan2(rad, z), B]))

    def meridian(self, x, n: int) -> np.ndarray:
        """n + 1 equally spaced points of the pole-to-pole meridian through the base of x."""
        x = np.asarray(x, dtype=float)
        t = PI * np.arange(n + 1) / n
        return self.canonical(np.column_stack([t, np.tile(x[1:], (n + 1, 1))]))

    def sample(self, resolution, rng, radius):
        n_t = max(2, math.ceil(PI / resolution - 1e-12))
        rows = [self.pole(1)[None, :]]
        for j in range(1, n_t):
            t = PI * j / n_t
            B = self.base.sample(resolution / math.sin(t), rng, radius)
            rows.append(np.column_stack([np.full(len(B), t), B]))
        rows.append(self.pole(2)[None, :])
        return np.concatenate(rows)

    def random(self, n, rng, radius):
        t = np.arccos(1.0 - 2.0 * rng.uniform(0, 1, n))
        return np.column_stack([t, self.base.random(n, rng, radius)])

    def to_dict(self):
        return {"type": "Suspension", "base": self.base.to_dict()}

    def encode(self, p):
        p = np.asarray(p, dtype=float)
        return {"t": float(p[0]), "base": self.base.encode(p[1:])}

    decode = Cone.decode


class Join(Geometry):
    """Spherical join of two Alex(1) spaces; t = 0 is the first factor, t = pi/2 the second."""

    kind = "Join"

    def __init__(self, a: Geometry, b: Geometry):
        _check_spherical_base(a, "Join")
        _check_spherical_base(b, "Join")
        self.a = a
        self.b = b

    @property
    def width(self):
        return 1 + self.a.width + self.b.width

    @property
    def natural_k(self):
        return 1.0

    def children(self):
        return (self.a, self.b)

    def _split(self, X):
        X = np.asarray(X, dtype=float)
        w = self.a.width
        return X[..., 0], X[..., 1 : 1 + w], X[..., 1 + w :]

    def dist(self, X, Y):
        t, xa, xb = self._split(X)
        s, ya, yb = self._split(Y)
        d1 = np.minimum(self.a.dist(xa, ya), PI)
        d2 = np.minimum(self.b.dist(xb, yb), PI)
        return self._formula(t, s, d1, d2)

    def pairwise(self, X, Y):
        t, xa, xb = self._split(X)
        s, ya, yb = self._split(Y)
        d1 = np.minimum(self.a.pairwise(xa, ya), PI)
        d2 = np.minimum(self.b.pairwise(xb, yb), PI)
        return self._formula(t[:, None], s[None, :], d1, d2)

    @staticmethod
    def _formula(t, s, d1, d2):
        cc = np.cos(t) * np.cos(s)
        sn = np.sin(t) * np.sin(s)
        base = np.sin(0.5 * (t - s)) ** 2
        num = base + cc * np.sin(0.5 * d1) ** 2 + sn * np.sin(0.5 * d2) ** 2
        den = base + cc * np.cos(0.5 * d1) ** 2 + sn * np.cos(0.5 * d2) ** 2
        return 2.0 * np.arctan2(np.sqrt(np.maximum(num, 0.0)), np.sqrt(np.maximum(den, 0.0)))

    def canonical(self, X):
        t, xa, xb = self._split(np.array(X, dtype=float))
        xa = self.a.canonical(xa)
        xb = self.b.canonical(xb)
        xb = np.where((t == 0.0)[..., None], self.b.origin(), xb)
        xa = np.where((t == PI / 2)[..., None], self.a.origin(), xa)
        return np.concatenate([np.asarray(t)[..., None], xa, xb], axis=-1)

    def check(self, X):
        super().check(X)
        t, xa, xb = self._split(X)
        if np.any((t < 0) | (t > PI / 2)):
            raise ForeignPoint("Join mixing angle must lie in [0, pi/2]")
        self.a.check(xa)
        self.b.check(xb)

    def origin(self):
        return np.concatenate([[0.0], self.a.origin(), self.b.origin()])

    def geodesic(self, p, q, u):
        t, pa, pb = self._split(p)
        s, qa, qb = self._split(q)
        D = float(self.dist(p, q))
        if D == 0.0:
            return np.asarray(p, dtype=float).copy()
        if PI - D < 1e-12:
            raise AmbiguousGeodesic("points at distance pi in a join")
        a, b = _slerp_weights(D, u)
        ra, xa = self.a.cone_mix(math.cos(t), pa, math.cos(s), qa, a, b)
        rb, xb = self.b.cone_mix(math.sin(t), pb, math.sin(s), qb, a, b)
        tt = math.atan2(rb, ra)
        return self.canonical(np.concatenate([[tt], xa, xb]))

    def geodesics(self, P, Q, u):
        t, pa, pb = self._split(P)
        s, qa, qb = self._split(Q)
        a, b = _slerp_rows(self.dist(P, Q), u, "join")
        ra, xa = self.a.cone_mixes(np.cos(t), pa, np.cos(s), qa, a, b)
        rb, xb = self.b.cone_mixes(np.sin(t), pb, np.sin(s), qb, a, b)
        return self.canonical(np.column_stack([np.arctan2(rb, ra), xa, xb]))

    def sample(self, resolution, rng, radius):
        n_t = max(2, math.ceil((PI / 2) / resolution - 1e-12))
        rows = []
        A0 = self.a.sample(resolution, rng, radius)
        rows.append(np.column_stack([np.zeros(len(A0)), A0, np.tile(self.b.origin(), (len(A0), 1))]))
        for j in range(1, n_t):
            t = (PI / 2) * j / n_t
            A = self.a.sample(resolution * math.sqrt(0.5) / math.cos(t), rng, radius)
            B = self.b.sample(resolution * math.sqrt(0.5) / math.sin(t), rng, radius)
            ia, ib = np.meshgrid(np.arange(len(A)), np.arange(len(B)), indexing="ij")
            rows.append(np.column_stack([np.full(ia.size, t), A[ia.ravel()], B[ib.ravel()]]))
        B1 = self.b.sample(resolution, rng, radius)
        rows.append(np.column_stack([np.full(len(B1), PI / 2), np.tile(self.a.origin(), (len(B1), 1)), B1]))
        return np.concatenate(rows)

    def random(self, n, rng, radius):
        t = np.arcsin(np.sqrt(rng.uniform(0, 1, n)))
        return np.column_stack([t, self.a.random(n, rng, radius), self.b.random(n, rng, radius)])

    def to_dict(self):
        return {"type": "Join", "factors": [self.a.to_dict(), self.b.to_dict()]}

    def encode(self, p):
        t, pa, pb = self._split(p)
        return {"t": float(t), "p1": self.a.encode(pa), "p2": self.b.encode(pb)}

    def decode(self, obj):
        return np.concatenate([[parse_number(obj["t"])], self.a.decode(obj["p1"]), self.b.decode(obj["p2"])])


@dataclass
class Region:
    """Convex region of R^n used by the Euclidean constructor."""

    kind: str
    radius: float = 1.0
    height: float = 1.0
    cone_height: float = 1.0
    extent: float = 3.0

    def contains(self, X, tol: float = 1e-9) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kind == "all":
            return np.ones(X.shape[:-1], dtype=bool)
        if self.kind == "disc":
            return _norm(X) <= self.radius + tol
        if self.kind == "capped_cylinder":
            r = _norm(X[..., :2])
            z = X[..., 2]
            allowed = np.where(z >= 0, self.radius, self.radius * (1.0 + z / self.cone_height))
            return (z >= -self.cone_height - tol) & (z <= self.height + tol) & (r <= allowed + tol)
        raise InvalidSpec(f"unknown region kind {self.kind!r}")

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind == "all":
            out["extent"] = self.extent
        if self.kind in ("disc", "capped_cylinder"):
            out["radius"] = self.radius
        if self.kind == "capped_cylinder":
            out["height"] = self.height
            out["cone_height"] = self.cone_height
        return out


class Euclidean(Geometry):
    """Convex region of Euclidean space with the straight-line metric."""

    kind = "Euclidean"

    def __init__(self, dim: int, region: Region | None = None):
        self.dim = int(dim)
        self.region = region or Region("all")
        if self.region.kind == "disc" and self.dim != 2:
            raise InvalidSpec("disc region requires dim 2")
        if self.region.kind == "capped_cylinder" and self.dim != 3:
            raise InvalidSpec("capped_cylinder region requires dim 3")

    @property
    def compact(self):
        return self.region.kind != "all"

    @property
    def width(self):
        return self.dim

    @property
    def natural_k(self):
        return 0.0

    def dist(self, X, Y):
        return _norm(np.asarray(X, dtype=float) - np.asarray(Y, dtype=float))

    def pairwise(self, X, Y):
        return cdist(X, Y)

    def check(self, X):
        super().check(X)
        if not np.all(self.region.contains(X)):
            raise ForeignPoint(f"point outside the {self.region.kind} region")

    def origin(self):
        return np.zeros(self.dim)

    def geodesic(self, p, q, u):
        return (1.0 - u) * np.asarray(p, dtype=float) + u * np.asarray(q, dtype=float)

    def geodesics(self, P, Q, u):
        return (1.0 - u)[:, None] * P + u[:, None] * Q

    def sample(self, resolution, rng, radius):
        reg = self.region
        h = resolution
        if reg.kind == "all":
            R = min(radius, reg.extent)
            n = max(1, math.ceil(2 * R / h - 1e-12))
            axes = [np.linspace(-R, R, n + 1)] * self.dim
            return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        if reg.kind == "disc":
            rho = reg.radius
            n = max(1, math.ceil(2 * rho / h))
            g = np.linspace(-rho, rho, n + 1)
            pts = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
            pts = pts[_norm(pts) < rho - 0.5 * h]
            m = max(3, math.ceil(2 * PI * rho / h))
            ang = 2 * PI * np.arange(m) / m
            rim = rho * np.column_stack([np.cos(ang), np.sin(ang)])
            return np.concatenate([rim, pts])
        if reg.kind == "capped_cylinder":
            return _capped_cylinder_sample(reg, h)
        raise InvalidSpec(f"unknown region kind {reg.kind!r}")

    def random(self, n, rng, radius):
        reg = self.region
        if reg.kind == "all":
            R = min(radius, reg.extent)
            return rng.uniform(-R, R, (n, self.dim))
        lo = np.full(self.dim, -reg.radius)
        hi = np.full(self.dim, reg.radius)
        if reg.kind == "capped_cylinder":
            lo[2], hi[2] = -reg.cone_height, reg.height
        out = []
        while sum(len(o) for o in out) < n:
            c = rng.uniform(lo, hi, (2 * n, self.dim))
            out.append(c[reg.contains(c, tol=0.0)])
        return np.concatenate(out)[:n]

    def to_dict(self):
        return {"type": "Euclidean", "dim": self.dim, "region": self.region.to_dict()}


def _capped_cylinder_sample(reg: Region, h: float) -> np.ndarray:
    rho, H, c = reg.radius, reg.height, reg.cone_height
    m = max(3, math.ceil(2 * PI * rho / h))
    ang = 2 * PI * np.arange(m) / m
    ring = np.column_stack([np.cos(ang), np.sin(ang)])
    rows = [np.column_stack([rho * ring, np.zeros(m)])]
    n_h = max(1, math.ceil(H / h - 1e-12))
    for j in range(1, n_h + 1):
        rows.append(np.column_stack([rho * ring, np.full(m, H * j / n_h)]))
    slant = math.hypot(rho, c)
    n_s = max(1, math.ceil(slant / h - 1e-12))
    for j in range(1, n_s):
        f = 1.0 - j / n_s
        k = max(3, math.ceil(2 * PI * rho * f / h))
        a2 = 2 * PI * np.arange(k) / k
        rows.append(np.column_stack([rho * f * np.cos(a2), rho * f * np.sin(a2), np.full(k, -c * (1 - f))]))
    rows.append(np.array([[0.0, 0.0, -c]]))
    n = max(1, math.ceil(2 * rho / h))
    g = np.linspace(-rho, rho, n + 1)
    nz = max(1, math.ceil((H + c) / h))
    zs = np.linspace(-c, H, nz + 1)
    grid = np.stack(np.meshgrid(g, g, zs, indexing="ij"), axis=-1).reshape(-1, 3)
    r = _norm(grid[:, :2])
    z = grid[:, 2]
    allowed = np.where(z >= 0, rho, rho * (1.0 + z / c))
    inner = grid[(r < allowed - 0.5 * h) & (z > -c) & (z <= H)]
    rows.append(inner)
    return np.concatenate(rows)


class Graph(Geometry):
    """Finite weighted graph with its shortest-path metric.

    ``coords`` is an optional embedding used only for display and for the
    glued-space builders; distances come from the edge weights alone.
    """

    kind = "Graph"

    def __init__(self, nodes, edges, coords=None, k: float = 0.0):
        self.nodes = list(nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise InvalidSpec("duplicate graph node identifiers")
        self.index = {n: i for i, n in enumerate(self.nodes)}
        self.edges = []
        seen: dict[tuple[int, int], float] = {}
        for e in edges:
            u, v, w = e
            if u not in self.index or v not in self.index:
                raise InvalidSpec(f"edge {e!r} references an unknown node")
            w = parse_number(w)
            if not w > 0:
                raise InvalidSpec(f"edge weight must be positive: {e!r}")
            i, j = self.index[u], self.index[v]
            if i == j:
                raise InvalidSpec(f"self-loop at {u!r}")
            key = (min(i, j), max(i, j))
            if key in seen and seen[key] != w:
                raise InvalidSpec(f"asymmetric edge weights between {u!r} and {v!r}")
            seen[key] = w
            self.edges.append((u, v, w))
        self._pairs = seen
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.declared = float(k)
        self.D: np.ndarray | None = None
        self.builder: dict | None = None

    @property
    def width(self):
        return 1

    @property
    def natural_k(self):
        return self.declared

    def prepare(self):
        if self.D is not None:
            return
        n = len(self.nodes)
        if n == 0:
            raise InvalidSpec("graph has no nodes")
        if self._pairs:
            ij = np.array(list(self._pairs.keys()), dtype=np.int64)
            w = np.array(list(self._pairs.values()), dtype=float)
        else:
            ij = np.zeros((0, 2), dtype=np.int64)
            w = np.zeros(0)
        G = coo_matrix((w, (ij[:, 0], ij[:, 1])), shape=(n, n)).tocsr()
        D = shortest_path(G, method="D", directed=False)
        if not np.all(np.isfinite(D)):
            raise InvalidSpec("graph is disconnected")
        self.D = D

    def _idx(self, X):
        return np.asarray(X, dtype=float)[..., 0].astype(np.int64)

    def dist(self, X, Y):
        self.prepare()
        return self.D[self._idx(X), self._idx(Y)]

    def pairwise(self, X, Y):
        self.prepare()
        return self.D[np.ix_(self._idx(X), self._idx(Y))]

    def check(self, X):
        super().check(X)
        v = np.asarray(X, dtype=float)[..., 0]
        if np.any(v != np.round(v)) or np.any((v < 0) | (v >= len(self.nodes))):
            raise ForeignPoint("graph points must be node indices")

    def origin(self):
        return np.zeros(1)

    def geodesic(self, p, q, u):
        self.prepare()
        i, j = int(p[0]), int(q[0])
        D = self.D[i, j]
        score = np.abs(self.D[i] - u * D) + np.abs(self.D[:, j] - (1.0 - u) * D)
        return np.array([float(np.argmin(score))])

    def sample(self, resolution, rng, radius):
        return np.arange(len(self.nodes), dtype=float)[:, None]

    def random(self, n, rng, radius):
        return rng.integers(0, len(self.nodes), n).astype(float)[:, None]

    def to_dict(self):
        if self.builder is not None:
            return {"type": "Graph", **self.builder}
        return {"type": "Graph"}

    def payload(self) -> dict:
        out = {"nodes": list(self.nodes), "edges": [[u, v, w] for u, v, w in self.edges]}
        if self.coords is not None:
            out["coords"] = self.coords.tolist()
        return out

    def encode(self, p):
        return self.nodes[int(np.asarray(p, dtype=float).reshape(-1)[0])]

    def decode(self, obj):
        if obj not in self.index:
            raise ForeignPoint(f"unknown graph node {obj!r}")
        return np.array([float(self.index[obj])])


# ---------------------------------------------------------------------------
# handles
# ---------------------------------------------------------------------------


@dataclass
class Space:
    """Built space: a constructor tree plus its declared curvature lower bound."""

    geometry: Geometry
    k: float
    name: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.geometry.width

    def dist(self, p, q) -> float:
        g = self.geometry
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        g.check(p)
        g.check(q)
        return float(g.dist(g.canonical(p), g.canonical(q)))

    def pairwise(self, X, Y, chunk: int = 4_000_000) -> np.ndarray:
        """Distance matrix between the rows of X and of Y."""
        X = self.geometry.canonical(np.atleast_2d(np.asarray(X, dtype=float)))
        Y = self.geometry.canonical(np.atleast_2d(np.asarray(Y, dtype=float)))
        n, m = len(X), len(Y)
        if n * m <= chunk:
            return self.geometry.pairwise(X, Y)
        out = np.empty((n, m))
        step = max(1, chunk // max(1, m))
        for s in range(0, n, step):
            out[s : s + step] = self.geometry.pairwise(X[s : s + step], Y)
        return out

    def geodesic_point(self, p, q, u: float) -> np.ndarray:
        if not 0.0 <= u <= 1.0:
            raise ValueError(f"fraction {u} outside [0, 1]")
        g = self.geometry
        g.check(p)
        g.check(q)
        p = g.canonical(p)
        q = g.canonical(q)
        if u == 0.0:
            return p
        if u == 1.0:
            return q
        return g.canonical(g.geodesic(p, q, u))

    def geodesic_points(self, P, Q, u) -> np.ndarray:
        """Row-wise geodesic_point; inputs are validated once for the whole batch."""
        g = self.geometry
        P = g.canonical(np.atleast_2d(np.asarray(P, dtype=float)))
        Q = g.canonical(np.atleast_2d(np.asarray(Q, dtype=float)))
        u = np.broadcast_to(np.asarray(u, dtype=float), (len(P),))
        if np.any((u < 0) | (u > 1)):
            raise ValueError("fractions must lie in [0, 1]")
        g.check(P)
        g.check(Q)
        return g.canonical(g.geodesics(P, Q, np.array(u)))

    def canonical(self, X) -> np.ndarray:
        return self.geometry.canonical(X)

    def check(self, X) -> None:
        self.geometry.check(X)

    def encode(self, p):
        return self.geometry.encode(p)

    def decode(self, obj) -> np.ndarray:
        return self.geometry.canonical(self.geometry.decode(obj))

    def to_dict(self) -> dict:
        out = {"constructor": self.geometry.to_dict(), "k": self.k}
        if isinstance(self.geometry, Graph) and self.geometry.builder is None:
            out["graph"] = self.geometry.payload()
        if self.name:
            out["name"] = self.name
        return out


def geometry_from_dict(obj: dict, graph_payload: dict | None = None, k: float | None = None) -> Geometry:
    if not isinstance(obj, dict) or "type" not in obj:
        raise InvalidSpec(f"constructor node must be an object with a 'type': {obj!r}")
    t = obj["type"]
    if t == "Sphere":
        return Sphere(int(obj.get("dim", 2)))
    if t == "Circle":
        return Circle(parse_number(obj["perimeter"]))
    if t == "Line":
        return Line()
    if t == "HalfLine":
        return HalfLine()
    if t in ("Product", "Join"):
        f = obj.get("factors")
        if not isinstance(f, list) or len(f) != 2:
            raise InvalidSpec(f"{t} needs exactly two factors")
        a, b = (geometry_from_dict(x) for x in f)
        return Product(a, b) if t == "Product" else Join(a, b)
    if t == "Cone":
        return Cone(geometry_from_dict(obj["base"]))
    if t == "Suspension":
        return Suspension(geometry_from_dict(obj["base"]))
    if t == "Euclidean":
        reg = obj.get("region", {"kind": "all"})
        region = Region(
            kind=reg.get("kind", "all"),
            **{key: parse_number(v) for key, v in reg.items() if key != "kind"},
        )
        return Euclidean(int(obj.get("dim", 2)), region)
    if t == "Graph":
        if obj.get("builder") == "barrel":
            params = {key: parse_number(v) for key, v in obj.items() if key not in ("type", "builder")}
            g = barrel_graph(**params)
            g.declared = k if k is not None else 0.0
            g.builder = {"builder": "barrel", **params}
            return g
        payload = obj.get("graph", graph_payload)
        if payload is None:
            raise InvalidSpec("Graph constructor requires a graph payload")
        return Graph(
            [_node_id(n) for n in payload["nodes"]],
            [[_node_id(u), _node_id(v), w] for u, v, w in payload["edges"]],
            payload.get("coords"),
            k if k is not None else 0.0,
        )
    raise InvalidSpec(f"unknown constructor type {t!r}")


def _node_id(n):
    return tuple(n) if isinstance(n, list) else n


def build_space(spec, k: float | None = None, name: str = "") -> Space:
    """Build a space from a Geometry tree or from a space-spec document."""
    if isinstance(spec, dict):
        doc = spec
        raw_k = doc.get("k")
        k = parse_number(raw_k) if raw_k is not None else k
        geometry = geometry_from_dict(doc["constructor"], doc.get("graph"), k)
        name = doc.get("name", name)
    elif isinstance(spec, Geometry):
        geometry = spec
    else:
        raise InvalidSpec(f"cannot build a space from {type(spec).__name__}")
    natural = geometry.natural_k
    if k is None:
        k = natural
    if k > natural + 1e-12:
        raise InvalidSpec(f"declared curvature bound {k} exceeds the constructor's bound {natural}")
    geometry.prepare()
    return Space(geometry, float(k), name)


# ---------------------------------------------------------------------------
# glued flat spaces as graphs
# ---------------------------------------------------------------------------


def barrel_graph(spacing: float = 0.05, height: float = 0.8, disc_spacing: float = 0.1, link: float = 4.0) -> Graph:
    """Half-infinite flat cylinder over the unit circle glued to a flat unit disc along the rim.

    Within each piece edges join nodes closer than ``link`` grid steps and
    carry the exact intrinsic distance of that piece; all pairs of rim nodes
    are joined by their chord through the disc.
    """
    n_r = math.ceil(2 * PI / spacing)
    dth = 2 * PI / n_r
    n_h = max(1, math.ceil(height / spacing - 1e-12))
    dh = height / n_h
    theta = dth * np.arange(n_r)

    nodes, coords = [], []
    for j in range(n_r):
        nodes.append(f"r{j}")
        coords.append((math.cos(theta[j]), math.sin(theta[j]), 0.0))
    cyl_th, cyl_h = [], []
    for i in range(1, n_h + 1):
        for j in range(n_r):
            nodes.append(f"c{i}_{j}")
            coords.append((math.cos(theta[j]), math.sin(theta[j]), i * dh))
            cyl_th.append(theta[j])
            cyl_h.append(i * dh)
    g = np.arange(-1.0, 1.0 + 1e-12, disc_spacing)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    disc = np.column_stack([gx.ravel(), gy.ravel()])
    disc = disc[_norm(disc) < 1.0 - 0.5 * disc_spacing]
    for d, (x, y) in enumerate(disc):
        nodes.append(f"d{d}")
        coords.append((x, y, 0.0))

    edges: dict[tuple[int, int], float] = {}

    def add(i, j, w):
        key = (min(i, j), max(i, j))
        if key not in edges or w < edges[key]:
            edges[key] = w

    # cylinder piece: rim nodes plus wall nodes, unrolled flat metric
    c_idx = np.concatenate([np.arange(n_r), n_r + np.arange(n_r * n_h)])
    c_th = np.concatenate([theta, np.array(cyl_th)])
    c_h = np.concatenate([np.zeros(n_r), np.array(cyl_h)])
    reach = link * max(spacing, dh)
    for a in range(len(c_idx)):
        dth_ = np.abs(c_th[a + 1 :] - c_th[a]) % (2 * PI)
        dth_ = np.minimum(dth_, 2 * PI - dth_)
        w = np.hypot(dth_, c_h[a + 1 :] - c_h[a])
        for b in np.nonzero(w <= reach)[0]:
            add(int(c_idx[a]), int(c_idx[a + 1 + b]), float(w[b]))

    # disc piece: rim nodes plus interior nodes, Euclidean chords
    rim_xy = np.column_stack([np.cos(theta), np.sin(theta)])
    d_xy = np.concatenate([rim_xy, disc])
    d_idx = np.concatenate([np.arange(n_r), n_r + n_r * n_h + np.arange(len(disc))])
    reach_d = link * disc_spacing
    for a in range(len(d_idx)):
        w = _norm(d_xy[a + 1 :] - d_xy[a])
        both_rim = (a < n_r) & (np.arange(a + 1, len(d_idx)) < n_r)
        for b in np.nonzero((w <= reach_d) | both_rim)[0]:
            add(int(d_idx[a]), int(d_idx[a + 1 + b]), float(w[b]))

    edge_list = [[nodes[i], nodes[j], w] for (i, j), w in sorted(edges.items())]
    return Graph(nodes, edge_list, coords, k=0.0)
