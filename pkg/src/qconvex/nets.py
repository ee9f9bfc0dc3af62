"""Deterministic nets of spaces and subsets, plus nearest-point queries.

Every checker works on finite samples.  A ``Net`` covers (a bounded region
of) a space; a ``SubsetNet`` is the finite stand-in for a closed subset F.
Ordering is part of the contract: ties are always resolved by ascending
index, so witnesses are reproducible.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .spaces import (
    PI,
    Cone,
    Euclidean,
    Geometry,
    Graph,
    InvalidSpec,
    Line,
    Product,
    Space,
    Sphere,
    Suspension,
    Circle,
    Join,
    parse_number,
)

DEFAULT_RADIUS = 3.0
DEFAULT_CAP = 5000


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class Net:
    points: np.ndarray
    mesh: float
    seed: int
    resolution: float = 0.0
    gap: float = 0.0
    cover: float = 0.0

    def __len__(self):
        return len(self.points)


@dataclass
class SubsetNet:
    net: Net
    parent: Space
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def points(self) -> np.ndarray:
        return self.net.points

    @property
    def mesh(self) -> float:
        return self.net.mesh

    def __len__(self):
        return len(self.net.points)


def dedupe(geometry: Geometry, X: np.ndarray) -> np.ndarray:
    """Canonicalise and drop repeated points, keeping first occurrences in order."""
    X = geometry.canonical(np.asarray(X, dtype=float))
    if len(X) == 0:
        return X
    key = np.round(X, 10) + 0.0
    _, first = np.unique(key, axis=0, return_index=True)
    return X[np.sort(first)]


def nearest_gaps(space: Space, X: np.ndarray) -> np.ndarray:
    """Distance from each row of X to the nearest other row."""
    n = len(X)
    if n < 2:
        return np.zeros(n)
    out = np.empty(n)
    step = max(1, 4_000_000 // max(1, n * space.width))
    for s in range(0, n, step):
        block = space.pairwise(X[s : s + step], X)
        idx = np.arange(s, min(n, s + step))
        block[idx - s, idx] = np.inf
        out[s : s + step] = block.min(axis=1)
    return out


def covering_radius(space: Space, X: np.ndarray, probes: np.ndarray) -> float:
    if len(probes) == 0:
        return 0.0
    best = np.full(len(probes), np.inf)
    step = max(1, 4_000_000 // max(1, len(probes) * space.width))
    for s in range(0, len(X), step):
        best = np.minimum(best, space.pairwise(probes, X[s : s + step]).min(axis=1))
    return float(best.max())


def build_net(
    space: Space,
    resolution: float,
    seed: int = 0,
    radius: float = DEFAULT_RADIUS,
    cap: int = DEFAULT_CAP,
    probe_factor: float = 2.0,
) -> Net:
    """Stratified deterministic net; mesh = max(nearest-neighbour gap, probe covering radius)."""
    if not resolution > 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    # coarser samples first, so that a hopeless request fails before it allocates
    for factor in (64, 16, 4):
        n = len(space.geometry.sample(resolution * factor, np.random.default_rng(seed), radius))
        if n > cap:
            raise BudgetExceeded(f"net at resolution {resolution} exceeds the cap of {cap} (already {n} points at {factor}x)")
    rng = np.random.default_rng(seed)
    X = dedupe(space.geometry, space.geometry.sample(resolution, rng, radius))
    if len(X) > cap:
        raise BudgetExceeded(f"net of {len(X)} points exceeds the cap of {cap}")
    gap = float(nearest_gaps(space, X).max()) if len(X) > 1 else 0.0
    if isinstance(space.geometry, Graph):
        cover = 0.0
    else:
        n_probe = int(min(8000, max(500, probe_factor * len(X))))
        probes = space.geometry.canonical(space.geometry.random(n_probe, rng, radius))
        cover = covering_radius(space, X, probes)
    mesh = max(gap, cover)
    if mesh <= 0:
        mesh = resolution
    return Net(X, mesh, seed, resolution, gap, cover)


def foot_points(space: Space, F: SubsetNet, q, tol: float = 0.0):
    """Indices (ascending) of the points of F within tol of the minimum distance to q, and |qF|."""
    d = space.pairwise(np.asarray(q, dtype=float)[None, :], F.points)[0]
    m = float(d.min())
    return np.nonzero(d <= m + tol)[0], m


# ---------------------------------------------------------------------------
# named subsets
# ---------------------------------------------------------------------------


def _circle_points(geometry: Geometry, resolution: float) -> np.ndarray:
    """A net of a circle-like base, usable inside suspensions and cones."""
    return geometry.sample(resolution, np.random.default_rng(0), DEFAULT_RADIUS)


def _finite(space: Space, pts, label: str, resolution: float, **meta) -> SubsetNet:
    X = dedupe(space.geometry, np.asarray(pts, dtype=float))
    space.check(X)
    return SubsetNet(Net(X, resolution, 0, resolution, 0.0, 0.0), space, label, dict(meta, exact=True))


def _curve(space: Space, pts, label: str, spacing: float, **meta) -> SubsetNet:
    X = dedupe(space.geometry, np.asarray(pts, dtype=float))
    space.check(X)
    gap = float(nearest_gaps(space, X).max()) if len(X) > 1 else spacing
    return SubsetNet(Net(X, max(gap, spacing), 0, spacing, gap, 0.0), space, label, meta)


def _base_point(base: Geometry, value) -> np.ndarray:
    if isinstance(base, Circle):
        return np.array([float(value)])
    return base.decode(value)


def subset_poles(space: Space, resolution: float, **_):
    g = space.geometry
    if isinstance(g, Sphere):
        n = np.zeros((2, g.width))
        n[0, -1], n[1, -1] = 1.0, -1.0
        return _finite(space, n, "poles", resolution)
    if isinstance(g, Suspension):
        return _finite(space, [g.pole(1), g.pole(2)], "poles", resolution)
    raise InvalidSpec("poles requires a Sphere or a Suspension")


def subset_equator(space: Space, resolution: float, **_):
    g = space.geometry
    if isinstance(g, Sphere) and g.dim == 2:
        n = max(3, math.ceil(2 * PI / resolution - 1e-12))
        a = 2 * PI * np.arange(n) / n
        return _curve(space, np.column_stack([np.cos(a), np.sin(a), np.zeros(n)]), "equator", 2 * PI / n)
    if isinstance(g, Suspension):
        B = _circle_points(g.base, resolution)
        return _curve(space, np.column_stack([np.full(len(B), PI / 2), B]), "equator", resolution)
    raise InvalidSpec("equator requires Sphere(2) or a Suspension")


def subset_arc(space: Space, resolution: float, start: float = 0.0, end: float = PI, **_):
    """Closed arc of the equator of Sphere(2) between two longitudes."""
    g = space.geometry
    if not (isinstance(g, Sphere) and g.dim == 2):
        raise InvalidSpec("arc requires Sphere(2)")
    n = max(1, math.ceil((end - start) / resolution - 1e-12))
    a = start + (end - start) * np.arange(n + 1) / n
    return _curve(space, np.column_stack([np.cos(a), np.sin(a), np.zeros(n + 1)]), "arc", (end - start) / n)


def subset_helix(space: Space, resolution: float, pitch: float = 1.0, radius: float = DEFAULT_RADIUS, **_):
    """Helix s -> (s mod L, pitch * s / L) in Circle(L) x Line, clipped to |height| <= radius."""
    g = space.geometry
    if not (isinstance(g, Product) and isinstance(g.a, Circle) and isinstance(g.b, Line)):
        raise InvalidSpec("helix requires Product(Circle, Line)")
    L = g.a.perimeter
    speed = math.hypot(1.0, pitch / L)
    smax = radius * L / pitch
    n = max(2, math.ceil(2 * smax * speed / resolution))
    s = np.linspace(-smax, smax, n + 1)
    pts = np.column_stack([np.mod(s, L), pitch * s / L])
    return _curve(space, pts, f"helix({pitch:g})", 2 * smax * speed / n, pitch=pitch)


def subset_longitudes(space: Space, resolution: float, angles=(0.0,), **_):
    """Union of full meridians {z1, z2} * {base points} in a suspension."""
    g = space.geometry
    if not isinstance(g, Suspension):
        raise InvalidSpec("longitudes requires a Suspension")
    n = max(2, math.ceil(PI / resolution - 1e-12))
    rows = [g.meridian(np.concatenate([[0.0], _base_point(g.base, a)]), n) for a in angles]
    return _curve(space, np.concatenate(rows), "longitudes", PI / n, angles=list(angles))


def subset_coneover(space: Space, resolution: float, angles=(0.0,), radius: float = DEFAULT_RADIUS, **_):
    """Union of rays from the apex of a Euclidean cone over the listed base points."""
    g = space.geometry
    if not isinstance(g, Cone):
        raise InvalidSpec("coneover requires a Cone")
    n = max(1, math.ceil(radius / resolution - 1e-12))
    t = radius * np.arange(n + 1) / n
    rows = [np.column_stack([t, np.tile(_base_point(g.base, a), (n + 1, 1))]) for a in angles]
    return _curve(space, np.concatenate(rows), "coneover", radius / n, angles=list(angles))


def subset_join(space: Space, resolution: float, first=(0.0,), second=(0.0,), **_):
    """Join F1 * F2 of finite subsets of the two factors: all great arcs from F1 to F2."""
    g = space.geometry
    if not isinstance(g, Join):
        raise InvalidSpec("join requires a Join")
    n = max(1, math.ceil((PI / 2) / resolution - 1e-12))
    t = (PI / 2) * np.arange(n + 1) / n
    rows = []
    for a in first:
        for b in second:
            pa, pb = _base_point(g.a, a), _base_point(g.b, b)
            rows.append(np.column_stack([t, np.tile(pa, (n + 1, 1)), np.tile(pb, (n + 1, 1))]))
    return _curve(space, np.concatenate(rows), "join", (PI / 2) / n, first=list(first), second=list(second))


def subset_factor(space: Space, resolution: float, which: int = 1, **_):
    """The first (t = 0) or second (t = pi/2) factor of a join."""
    g = space.geometry
    if not isinstance(g, Join):
        raise InvalidSpec("factor requires a Join")
    base = g.a if which == 1 else g.b
    B = _circle_points(base, resolution)
    if which == 1:
        pts = np.column_stack([np.zeros(len(B)), B, np.tile(g.b.origin(), (len(B), 1))])
    else:
        pts = np.column_stack([np.full(len(B), PI / 2), np.tile(g.a.origin(), (len(B), 1)), B])
    return _curve(space, pts, f"factor({which})", resolution)


def subset_rim(space: Space, resolution: float, **_):
    """Rim circle of a barrel graph, boundary circle of a disc, or rim edge of a capped cylinder."""
    g = space.geometry
    if isinstance(g, Graph):
        idx = [i for i, n in enumerate(g.nodes) if isinstance(n, str) and n.startswith("r")]
        if not idx:
            raise InvalidSpec("graph has no rim nodes")
        X = np.array(idx, dtype=float)[:, None]
        gap = float(nearest_gaps(space, X).max())
        return SubsetNet(Net(X, gap, 0, gap, gap, 0.0), space, "rim", {})
    if isinstance(g, Euclidean) and g.region.kind in ("disc", "capped_cylinder"):
        rho = g.region.radius
        n = max(3, math.ceil(2 * PI * rho / resolution - 1e-12))
        a = 2 * PI * np.arange(n) / n
        cols = [rho * np.cos(a), rho * np.sin(a)]
        if g.dim == 3:
            cols.append(np.zeros(n))
        return _curve(space, np.column_stack(cols), "rim", 2 * PI * rho / n)
    raise InvalidSpec("rim requires a barrel graph or a disc/capped-cylinder region")


def subset_all(space: Space, resolution: float, seed: int = 0, radius: float = DEFAULT_RADIUS, **_):
    net = build_net(space, resolution, seed, radius)
    return SubsetNet(net, space, "all", {})


def subset_fixed(space: Space, resolution: float, axis=(0.0, 0.0, 1.0), angle: float = PI / 3, **_):
    """Fixed-point set of a rotation of Sphere(2), found from the rotation matrix."""
    g = space.geometry
    if not (isinstance(g, Sphere) and g.dim == 2):
        raise InvalidSpec("fixed requires Sphere(2)")
    R = rotation_matrix(axis, angle)
    w, V = np.linalg.eig(R)
    fixed = np.real(V[:, np.abs(w - 1.0) < 1e-9])
    pts = []
    if fixed.shape[1] == 1:
        v = fixed[:, 0] / np.linalg.norm(fixed[:, 0])
        pts = [v, -v]
    else:
        raise InvalidSpec("rotation must have a one-dimensional fixed axis")
    return _finite(space, pts, "fixed", resolution, angle=angle)


def rotation_matrix(axis, angle: float) -> np.ndarray:
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


NAMED = {
    "poles": subset_poles,
    "equator": subset_equator,
    "arc": subset_arc,
    "helix": subset_helix,
    "longitudes": subset_longitudes,
    "coneover": subset_coneover,
    "join": subset_join,
    "factor": subset_factor,
    "rim": subset_rim,
    "all": subset_all,
    "fixed": subset_fixed,
}

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_named(text: str) -> tuple[str, dict]:
    """Parse ``helix(1)``, ``longitudes(0, pi)`` and similar shorthand."""
    m = _CALL.match(text)
    if not m or m.group(1) not in NAMED:
        raise InvalidSpec(f"unknown subset {text!r}")
    name, args = m.group(1), m.group(2)
    if not args or not args.strip():
        return name, {}
    values = [parse_number(v.strip()) for v in args.split(",")]
    if name == "helix":
        return name, {"pitch": values[0]}
    if name in ("longitudes", "coneover"):
        return name, {"angles": values}
    if name == "factor":
        return name, {"which": int(values[0])}
    if name == "arc":
        return name, {"start": values[0], "end": values[1]}
    raise InvalidSpec(f"subset {name!r} takes no arguments")


def make_subset(space: Space, spec, resolution: float, seed: int = 0) -> SubsetNet:
    """Build a SubsetNet from a subset document, a ``name(args)`` string, or a list of points."""
    if isinstance(spec, str):
        name, params = parse_named(spec)
        return NAMED[name](space, resolution, seed=seed, **params)
    if isinstance(spec, dict):
        kind = spec.get("type", "named")
        if kind == "list":
            pts = [space.decode(p) for p in spec["points"]]
            return _finite(space, pts, spec.get("label", "list"), resolution)
        if kind == "named":
            name = spec["name"]
            params = {k: v for k, v in spec.items() if k not in ("type", "name")}
            if "(" in name:
                name, extra = parse_named(name)
                params = {**extra, **params}
            if name not in NAMED:
                raise InvalidSpec(f"unknown subset {name!r}")
            params = {k: _parse_param(v) for k, v in params.items()}
            return NAMED[name](space, resolution, seed=seed, **params)
    raise InvalidSpec(f"cannot build a subset from {spec!r}")


def _parse_param(v):
    if isinstance(v, list):
        return [_parse_param(x) for x in v]
    if isinstance(v, str):
        return parse_number(v)
    return v
