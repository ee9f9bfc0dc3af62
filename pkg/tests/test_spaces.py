import json
import math

import numpy as np
import pytest

from qconvex.spaceforms import comparison_angles, model_point_distance
from qconvex.spaces import (
    AmbiguousGeodesic,
    Circle,
    Cone,
    Euclidean,
    ForeignPoint,
    Graph,
    HalfLine,
    InvalidSpec,
    Join,
    Line,
    Product,
    Region,
    Sphere,
    Suspension,
    barrel_graph,
    build_space,
    parse_number,
)

PI = math.pi
RNG = np.random.default_rng(11)

ANALYTIC = [
    Sphere(2),
    Sphere(3),
    Circle(1.5 * PI),
    Line(),
    HalfLine(),
    Product(Circle(2 * PI), Line()),
    Product(Sphere(2), Circle(1.0)),
    Cone(Circle(1.5 * PI)),
    Cone(Sphere(2)),
    Suspension(Circle(1.5 * PI)),
    Suspension(Suspension(Circle(PI))),
    Join(Circle(1.5 * PI), Circle(PI)),
    Euclidean(2, Region("disc")),
    Euclidean(3, Region("capped_cylinder")),
]


def _random(space, n, rng=RNG):
    return space.canonical(space.geometry.random(n, rng, 3.0))


def _ids(g):
    return g.to_dict()["type"]


@pytest.mark.parametrize("g", ANALYTIC, ids=_ids)
def test_metric_axioms(g):
    sp = build_space(g)
    P, Q, R = (_random(sp, 500) for _ in range(3))
    d_pq = g.dist(P, Q)
    assert np.array_equal(d_pq, g.dist(Q, P))
    assert np.all(d_pq >= 0)
    assert np.all(g.dist(P, P) <= 1e-7)
    slack = g.dist(P, Q) + g.dist(Q, R) - g.dist(P, R)
    assert slack.min() >= -1e-9


@pytest.mark.parametrize("g", ANALYTIC, ids=_ids)
def test_pairwise_matches_dist(g):
    sp = build_space(g)
    X, Y = _random(sp, 40), _random(sp, 30)
    D = sp.pairwise(X, Y)
    ref = g.dist(X[:, None, :], Y[None, :, :])
    assert np.allclose(D, ref, atol=1e-12)


@pytest.mark.parametrize("g", ANALYTIC, ids=_ids)
def test_geodesic_point_splits_distance(g):
    sp = build_space(g)
    P, Q = _random(sp, 200), _random(sp, 200)
    u = RNG.uniform(0, 1, 200)
    keep = g.dist(P, Q) < PI - 1e-6
    P, Q, u = P[keep], Q[keep], u[keep]
    M = sp.geodesic_points(P, Q, u)
    D = g.dist(P, Q)
    assert np.allclose(g.dist(P, M), u * D, atol=1e-9)
    assert np.allclose(g.dist(M, Q), (1 - u) * D, atol=1e-9)


@pytest.mark.parametrize("g", ANALYTIC, ids=_ids)
def test_toponogov_point_side(g):
    sp = build_space(g)
    P, Q, R = (_random(sp, 1000) for _ in range(3))
    u = RNG.uniform(0, 1, 1000)
    keep = g.dist(Q, R) < PI - 1e-6
    P, Q, R, u = P[keep], Q[keep], R[keep], u[keep]
    M = sp.geodesic_points(Q, R, u)
    model = model_point_distance(sp.k, g.dist(P, Q), g.dist(P, R), g.dist(Q, R), u)
    assert np.min(g.dist(P, M) - model) >= -1e-6


def test_suspension_of_unit_circle_is_round_sphere():
    sp = build_space(Suspension(Circle(2 * PI)))
    X, Y = _random(sp, 2000), _random(sp, 2000)
    t, a, s, b = X[:, 0], X[:, 1], Y[:, 0], Y[:, 1]
    ref = np.arccos(np.clip(np.cos(t) * np.cos(s) + np.sin(t) * np.sin(s) * np.cos(a - b), -1, 1))
    assert np.max(np.abs(sp.geometry.dist(X, Y) - ref)) <= 1e-7
    # embedding comparison avoids the arccos conditioning
    emb = lambda Z: np.column_stack([np.sin(Z[:, 0]) * np.cos(Z[:, 1]), np.sin(Z[:, 0]) * np.sin(Z[:, 1]), np.cos(Z[:, 0])])
    assert np.max(np.abs(sp.geometry.dist(X, Y) - Sphere(2).dist(emb(X), emb(Y)))) <= 1e-12


def test_cone_over_unit_circle_is_plane():
    sp = build_space(Cone(Circle(2 * PI)))
    X, Y = _random(sp, 2000), _random(sp, 2000)
    pl = lambda Z: np.column_stack([Z[:, 0] * np.cos(Z[:, 1]), Z[:, 0] * np.sin(Z[:, 1])])
    assert np.max(np.abs(sp.geometry.dist(X, Y) - np.linalg.norm(pl(X) - pl(Y), axis=1))) <= 1e-12


def test_join_of_unit_circles_is_three_sphere():
    sp = build_space(Join(Circle(2 * PI), Circle(2 * PI)))
    X, Y = _random(sp, 2000), _random(sp, 2000)
    emb = lambda Z: np.column_stack(
        [np.cos(Z[:, 0]) * np.cos(Z[:, 1]), np.cos(Z[:, 0]) * np.sin(Z[:, 1]), np.sin(Z[:, 0]) * np.cos(Z[:, 2]), np.sin(Z[:, 0]) * np.sin(Z[:, 2])]
    )
    assert np.max(np.abs(sp.geometry.dist(X, Y) - Sphere(3).dist(emb(X), emb(Y)))) <= 1e-12


def test_distance_examples():
    s = build_space(Suspension(Circle(PI)))
    assert s.dist([0.0, 0.3], [PI, 1.0]) == pytest.approx(PI, abs=1e-15)
    c = build_space(Cone(Circle(PI)))
    assert c.dist([0.0, 0.0], [2.5, 1.0]) == pytest.approx(2.5, abs=1e-15)
    j = build_space(Join(Circle(PI), Circle(PI)))
    p = [0.4, 1.0, 2.0]
    assert j.dist(p, p) == 0.0


def test_circle_geodesic_and_tie_rule():
    c = build_space(Circle(4.0))
    assert c.geodesic_point([0.0], [1.0], 0.5)[0] == pytest.approx(0.5)
    # exactly half way round: toward increasing parameter
    assert c.geodesic_point([0.0], [2.0], 0.5)[0] == pytest.approx(1.0)


def test_sphere_midpoint_and_antipodes():
    s = build_space(Sphere(2))
    m = s.geodesic_point([1, 0, 0], [0, 1, 0], 0.5)
    assert np.allclose(m, [math.sqrt(0.5), math.sqrt(0.5), 0], atol=1e-15)
    with pytest.raises(AmbiguousGeodesic):
        s.geodesic_point([0, 0, 1], [0, 0, -1], 0.5)


def test_lemma_limit_angle_on_sphere():
    s = build_space(Sphere(2))
    p = np.array([0, 0, 1.0])
    q = np.array([1, 0, 0.0])
    r = np.array([math.cos(0.7), math.sin(0.7), 0.0])
    qp = s.geodesic_point(p, q, 1e-3)
    theta = comparison_angles(1, s.dist(qp, p), s.dist(p, r), s.dist(qp, r))
    assert abs(theta - 0.7) <= 1e-4


def test_canonical_apex_and_poles():
    c = build_space(Cone(Circle(PI)))
    assert np.array_equal(c.canonical([0.0, 2.0]), [0.0, 0.0])
    s = build_space(Suspension(Circle(PI)))
    assert np.array_equal(s.canonical([PI, 2.0]), [PI, 0.0])


def test_foreign_points():
    s = build_space(Sphere(2))
    with pytest.raises(ForeignPoint):
        s.dist([1, 0], [0, 1])
    with pytest.raises(ForeignPoint):
        s.dist([2, 0, 0], [0, 1, 0])
    c = build_space(Cone(Circle(PI)))
    with pytest.raises(ForeignPoint):
        c.dist([-1.0, 0.0], [1.0, 0.0])


@pytest.mark.parametrize(
    "doc",
    [
        {"constructor": {"type": "Circle", "perimeter": -1}},
        {"constructor": {"type": "Cone", "base": {"type": "Circle", "perimeter": 7}}},
        {"constructor": {"type": "Sphere", "dim": 2}, "k": 2},
        {"constructor": {"type": "Klein"}},
        {"constructor": {"type": "Product", "factors": [{"type": "Line"}]}},
        {"constructor": {"type": "Graph"}},
    ],
)
def test_invalid_specs(doc):
    with pytest.raises(InvalidSpec):
        build_space(doc)


def test_declared_curvature_of_constructions():
    assert build_space(Cone(Circle(PI))).k == 0
    assert build_space(Suspension(Circle(PI))).k == 1
    assert build_space(Join(Circle(PI), Sphere(2))).k == 1
    assert build_space(Product(Sphere(2), Circle(1.0))).k == 0
    assert build_space(Sphere(2), k=0.5).k == 0.5


def test_spec_roundtrip_with_pi_expressions():
    doc = {"constructor": {"type": "Suspension", "base": {"type": "Circle", "perimeter": "3*pi/2"}}, "k": 1}
    sp = build_space(doc)
    again = build_space(json.loads(json.dumps(sp.to_dict())))
    X = _random(sp, 50)
    assert np.array_equal(sp.pairwise(X, X), again.pairwise(X, X))
    assert parse_number("3*pi/2") == 1.5 * PI
    with pytest.raises(InvalidSpec):
        parse_number("__import__('os')")


def test_graph_shortest_paths_and_exact_weights():
    doc = {
        "constructor": {"type": "Graph"},
        "k": 0,
        "graph": {"nodes": ["a", "b", "c"], "edges": [["a", "b", "0.1"], ["b", "c", 0.2], ["a", "c", 1.0]]},
    }
    sp = build_space(doc)
    a, c = sp.decode("a"), sp.decode("c")
    assert sp.dist(a, c) == 0.1 + 0.2
    assert sp.encode(sp.geodesic_point(a, c, 0.3)) == "b"
    out = sp.to_dict()["graph"]["edges"]
    assert out[0][2] == 0.1


def test_graph_rejects_bad_edges():
    with pytest.raises(InvalidSpec):
        Graph(["a", "b"], [["a", "b", 0]])
    with pytest.raises(InvalidSpec):
        Graph(["a", "b"], [["a", "b", 1.0], ["b", "a", 2.0]])
    g = Graph(["a", "b", "c"], [["a", "b", 1.0]])
    with pytest.raises(InvalidSpec):
        g.prepare()


def test_barrel_rim_distances_converge():
    """Rim-to-rim distances approach the chord through the disc as the mesh shrinks."""
    errs = []
    for spacing in (0.1, 0.05):
        g = barrel_graph(spacing=spacing, height=0.3, disc_spacing=2 * spacing)
        sp = build_space(g, k=0.0)
        n = sum(1 for x in g.nodes if x.startswith("r"))
        i, j = sp.decode("r0"), sp.decode(f"r{n // 4}")
        errs.append(abs(sp.dist(i, j) - 2 * math.sin(2 * PI * (n // 4) / n / 2)))
    assert errs[1] <= errs[0] + 1e-12


@pytest.mark.parametrize("g", ANALYTIC, ids=_ids)
def test_batched_geodesics_match_scalar(g):
    sp = build_space(g)
    P, Q = _random(sp, 300), _random(sp, 300)
    u = RNG.uniform(0, 1, 300)
    u[:10], u[10:20] = 0.0, 1.0
    Q[20:30] = P[20:30]
    keep = g.dist(P, Q) < PI - 1e-6
    P, Q, u = P[keep], Q[keep], u[keep]
    batch = sp.geodesic_points(P, Q, u)
    rows = np.array([sp.geodesic_point(p, q, w) for p, q, w in zip(P, Q, u)])
    assert np.max(sp.geometry.dist(batch, rows)) <= 1e-9


def test_batched_geodesics_reject_antipodes():
    sp = build_space(Suspension(Circle(2 * PI)))
    with pytest.raises(AmbiguousGeodesic):
        sp.geodesic_points(np.array([[0.0, 0.0]]), np.array([[PI, 0.0]]), np.array([0.5]))
