import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qconvex.nets import Net, build_net, make_subset
from qconvex.qc_check import (
    NO_VIOLATION,
    VACUOUS,
    VIOLATION,
    CheckReport,
    RadiusTooSmall,
    check_extremal,
    check_local_quasi_convex,
    check_locally_convex,
    check_quasi_convex,
    classify,
    foot_pairs,
)
from qconvex.spaces import Circle, Line, Product, Sphere, Suspension, build_space
from qconvex.zoo import CATALOG, get_scenario, scenario_space

PI = math.pi


@pytest.fixture(scope="module")
def sphere():
    return build_space(Sphere(2))


@pytest.fixture(scope="module")
def sphere_net(sphere):
    return build_net(sphere, 0.15, 0)


@pytest.fixture(scope="module")
def cylinder():
    return build_space(Product(Circle(2 * PI), Line()))


def _scenario(name, seed=0):
    spec = get_scenario(name)
    sp = scenario_space(spec)
    return sp, make_subset(sp, spec.subset, spec.subset_resolution, seed), build_net(sp, spec.resolution, seed)


def test_antipodal_pair_is_quasi_convex(sphere):
    F = make_subset(sphere, {"type": "list", "points": [[0, 0, 1], [0, 0, -1]]}, 0.1)
    Q = build_net(sphere, 0.25, 1)
    assert len(Q) >= 200
    r = check_quasi_convex(sphere, F, Q)
    assert r.verdict == NO_VIOLATION
    assert r.worst_margin <= 0
    assert r.witness is None


def test_helix_is_not_quasi_convex(cylinder):
    F = make_subset(cylinder, "helix(1)", 0.05)
    Q = build_net(cylinder, 0.2, 0)
    assert len(Q) >= 300
    r = check_quasi_convex(cylinder, F, Q)
    assert r.verdict == VIOLATION
    assert r.worst_margin >= 0.1
    w = r.witness
    assert set(w) >= {"q", "p", "r", "dqp", "dpr", "dqr", "angle"}
    assert w["angle"] - PI / 2 == pytest.approx(r.worst_margin)
    # the witness distances are reproducible from the points
    assert cylinder.dist(w["q"], w["p"]) == pytest.approx(w["dqp"])
    assert cylinder.dist(w["p"], w["r"]) == pytest.approx(w["dpr"])


def test_helix_is_locally_quasi_convex(cylinder):
    F = make_subset(cylinder, "helix(1)", 0.05)
    Q = build_net(cylinder, 0.2, 0)
    # the sampled helix is truncated at height 3; its endpoints behave like an arc's
    top = F.points[:, 1].max()
    assert check_local_quasi_convex(cylinder, F, 0.5, Q).verdict == VIOLATION
    keep = np.abs(Q.points[:, 1]) < top - 1
    inner = Net(Q.points[keep], Q.mesh, Q.seed, Q.resolution, Q.gap, Q.cover)
    r = check_local_quasi_convex(cylinder, F, 0.5, inner)
    assert r.verdict == NO_VIOLATION


def test_single_point_is_vacuous(sphere, sphere_net):
    F = make_subset(sphere, {"type": "list", "points": [[1, 0, 0]]}, 0.1)
    assert check_quasi_convex(sphere, F, sphere_net).verdict == VACUOUS
    assert check_locally_convex(sphere, F).verdict == VACUOUS


def test_isolated_points_balls_are_vacuous(sphere, sphere_net):
    F = make_subset(sphere, {"type": "list", "points": [[1, 0, 0], [0, 1, 0]]}, 0.1)
    r = check_local_quasi_convex(sphere, F, 0.5, sphere_net)
    assert r.verdict == VACUOUS
    assert r.counts["populated_balls"] == 0
    assert check_quasi_convex(sphere, F, sphere_net).verdict == VIOLATION


def test_radius_too_small(sphere, sphere_net):
    F = make_subset(sphere, "equator", 0.1)
    with pytest.raises(RadiusTooSmall):
        check_local_quasi_convex(sphere, F, 1.5 * F.mesh, sphere_net)


@pytest.mark.parametrize("perimeter,expected", [(PI, NO_VIOLATION), (1.5 * PI, VIOLATION)])
def test_poles_extremal_iff(perimeter, expected):
    sp = build_space(Suspension(Circle(perimeter)))
    F = make_subset(sp, "poles", 0.1)
    Q = build_net(sp, 0.1, 0)
    r = check_extremal(sp, F, Q)
    assert r.verdict == expected
    if expected == VIOLATION:
        assert r.witness["slope"] - r.params["tol_slope"] == pytest.approx(r.worst_margin)


def test_disc_boundary_is_extremal():
    sp, F, Q = _scenario("disc-boundary-extremal")
    assert check_extremal(sp, F, Q).verdict == NO_VIOLATION


def test_equator_locally_convex(sphere):
    F = make_subset(sphere, "equator", 0.05)
    r = check_locally_convex(sphere, F)
    assert r.verdict == NO_VIOLATION
    assert r.counts["pairs"] > 0


def test_antipodal_longitudes_not_locally_convex():
    sp, F, _ = _scenario("antipodal-longitudes")
    r = check_locally_convex(sp, F)
    assert r.verdict == VIOLATION
    # the escaping midpoint sits next to a pole
    poles = np.stack([sp.geometry.pole(1), sp.geometry.pole(2)])
    assert sp.pairwise(r.witness["q"][None], poles).min() < 0.5


def test_classify_equator(sphere, sphere_net):
    F = make_subset(sphere, "equator", 0.05)
    cls = classify(sphere, F, sphere_net)
    v = cls.verdicts()
    assert v["quasi_convex"] == v["locally_quasi_convex"] == v["locally_convex"] == NO_VIOLATION
    # a closed curve in a surface without boundary is not extremal: pushing the
    # foot point away from q increases the distance to first order
    assert v["extremal"] == VIOLATION
    assert cls.broken_implications == []


def test_classify_helix(cylinder):
    F = make_subset(cylinder, "helix(1)", 0.05)
    Q = build_net(cylinder, 0.2, 0)
    v = classify(cylinder, F, Q).verdicts()
    assert v["quasi_convex"] == VIOLATION
    assert v["locally_convex"] == NO_VIOLATION


def test_report_invariants(cylinder, sphere, sphere_net):
    F = make_subset(cylinder, "helix(1)", 0.05)
    Q = build_net(cylinder, 0.2, 0)
    reports = [
        check_quasi_convex(cylinder, F, Q),
        check_quasi_convex(sphere, make_subset(sphere, "equator", 0.05), sphere_net),
    ]
    for r in reports:
        assert isinstance(r, CheckReport)
        assert (r.verdict == VIOLATION) == (r.worst_margin > r.params["tol"])
        assert (r.witness is not None) == (r.verdict == VIOLATION)
        assert {"tol", "resolution", "seed"} <= set(r.params)
    again = check_quasi_convex(cylinder, F, Q)
    assert again.to_dict() == reports[0].to_dict()


def test_explicit_tol_moves_threshold(cylinder):
    F = make_subset(cylinder, "helix(1)", 0.05)
    Q = build_net(cylinder, 0.3, 0)
    r = check_quasi_convex(cylinder, F, Q)
    assert check_quasi_convex(cylinder, F, Q, tol=r.worst_margin + 1e-9).verdict == NO_VIOLATION


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=6), st.integers(1, 5))
def test_foot_pairs_are_minima(row, n):
    D = np.array([row] * n)
    dmin, qi, pi = foot_pairs(D)
    assert len(qi) >= n
    assert np.all(D[qi, pi] <= D[qi].min(axis=1) + 1e-9)


# --- comparison angle versus true angle on the round sphere ---------------


def _true_angles(p, q, R):
    """Angle at p between the great-circle directions to q and to each row of R."""
    def tangent(x):
        t = x - (x @ p)[..., None] * p
        n = np.linalg.norm(t, axis=-1, keepdims=True)
        return t / np.where(n > 0, n, 1.0), n[..., 0]

    tq, _ = tangent(q)
    tr, nr = tangent(R)
    ang = np.arccos(np.clip(tr @ tq, -1, 1))
    # r antipodal to p: some shortest path leaves in the direction of q
    return np.where(nr < 1e-12, 0.0, ang)


def _true_angle_margin(space, F, Q, eps):
    DQF = space.pairwise(Q.points, F.points)
    dmin, qi, pi = foot_pairs(DQF)
    best = -math.inf
    for q, p in zip(qi, pi):
        if DQF[q, p] <= eps:
            continue
        R = np.delete(F.points, p, axis=0)
        best = max(best, float(_true_angles(F.points[p], Q.points[q], R).max()))
    return best - PI / 2


SPHERE_SCENARIOS = sorted(n for n, s in CATALOG.items() if s.space["constructor"]["type"] == "Sphere")


@pytest.mark.parametrize("name", SPHERE_SCENARIOS)
def test_comparison_and_true_angle_verdicts_agree(name):
    sp, F, Q = _scenario(name)
    r = check_quasi_convex(sp, F, Q)
    true_margin = _true_angle_margin(sp, F, Q, r.params["proximity"])
    assert (true_margin > r.params["tol"]) == (r.verdict == VIOLATION)


@pytest.mark.parametrize(
    "name",
    [n for n in sorted(CATALOG) if CATALOG[n].expected.get("quasi_convex") == NO_VIOLATION],
)
def test_local_foot_points_add_no_violation(name):
    sp, F, Q = _scenario(name)
    g = check_quasi_convex(sp, F, Q)
    assert g.verdict != VIOLATION
    loc = check_quasi_convex(sp, F, Q, feet="local")
    assert loc.verdict != VIOLATION, loc.witness
