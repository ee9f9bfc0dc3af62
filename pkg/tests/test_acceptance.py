"""Acceptance criteria, one test per criterion.

Each test reports through the ``record`` fixture, which prints a pass/fail
line per criterion in the terminal summary.
"""

import filecmp
import math
import time

import numpy as np

from qconvex.cli import main
from qconvex.nets import build_net, make_subset
from qconvex.qc_check import NO_VIOLATION, VIOLATION
from qconvex.qgeo import (
    check_angle_comparison,
    check_second_difference,
    check_stationarity,
    make_chain,
    minimize_chain,
    sm_convergence,
)
from qconvex.spaceforms import comparison_angle, comparison_angles, model_point_distance, sides_from_angles
from qconvex.spaces import Circle, Cone, Euclidean, Region, Sphere, Suspension, build_space
from qconvex.theorems import Lemma44Instance, check_c3, check_lemma43, check_lemma44
from qconvex.zoo import CATALOG, get_scenario, scenario_space, with_landmarks

PI = math.pi


def test_criterion_1_model_trigonometry(record):
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    n = 100_000
    worst_roundtrip = 0.0
    for k in (-1.0, 0.0, 1.0):
        s1, s2 = rng.uniform(1e-3, 1.5, (2, n))
        theta = rng.uniform(1e-3, PI - 1e-3, n)
        opp = sides_from_angles(k, s1, s2, theta)
        worst_roundtrip = max(worst_roundtrip, float(np.abs(comparison_angles(k, s1, s2, opp) - theta).max()))
    octant = comparison_angle(1, PI / 2, PI / 2, PI / 2)
    # fixed |pq| = s1 <= 1 and fixed flat angle; |pr| = s2 small
    s1 = rng.uniform(0.05, 1.0, 2000)
    theta = rng.uniform(0.05, PI - 0.05, 2000)
    s2 = np.full_like(s1, 1e-4)
    opp = sides_from_angles(0.0, s1, s2, theta)
    angles = np.stack([comparison_angles(k, s1, s2, opp) for k in (-1.0, 0.0, 1.0)])
    cross_k = float((angles.max(axis=0) - angles.min(axis=0)).max())
    elapsed = time.perf_counter() - start
    ok = worst_roundtrip <= 1e-9 and octant == PI / 2 and cross_k <= 1e-6 and elapsed < 1.0
    record(
        1,
        ok,
        f"roundtrip {worst_roundtrip:.2e} <= 1e-9, octant exact {octant == PI / 2}, "
        f"cross-k at s2=1e-4 {cross_k:.2e} <= 1e-6, {elapsed:.2f}s < 1s",
    )


def _sphere_embed(Z):
    return np.column_stack([np.sin(Z[:, 0]) * np.cos(Z[:, 1]), np.sin(Z[:, 0]) * np.sin(Z[:, 1]), np.cos(Z[:, 0])])


def test_criterion_2_space_oracles(record):
    from tests.test_spaces import ANALYTIC

    start = time.perf_counter()
    rng = np.random.default_rng(1)
    n = 10_000

    susp = build_space(Suspension(Circle(2 * PI)))
    X, Y = (susp.canonical(susp.geometry.random(n, rng, 3.0)) for _ in range(2))
    err_susp = float(np.abs(susp.geometry.dist(X, Y) - Sphere(2).dist(_sphere_embed(X), _sphere_embed(Y))).max())

    cone = build_space(Cone(Circle(2 * PI)))
    X, Y = (cone.canonical(cone.geometry.random(n, rng, 3.0)) for _ in range(2))
    plane = lambda Z: np.column_stack([Z[:, 0] * np.cos(Z[:, 1]), Z[:, 0] * np.sin(Z[:, 1])])
    err_cone = float(np.abs(cone.geometry.dist(X, Y) - np.linalg.norm(plane(X) - plane(Y), axis=1)).max())

    worst_slack, tested = math.inf, 0
    for g in ANALYTIC:
        sp = build_space(g)
        P, Q, R = (sp.canonical(g.random(n, rng, 3.0)) for _ in range(3))
        u = rng.uniform(0, 1, n)
        keep = g.dist(Q, R) < PI - 1e-6
        P, Q, R, u = P[keep], Q[keep], R[keep], u[keep]
        M = sp.geodesic_points(Q, R, u)
        model = model_point_distance(sp.k, g.dist(P, Q), g.dist(P, R), g.dist(Q, R), u)
        worst_slack = min(worst_slack, float(np.min(g.dist(P, M) - model)))
        tested += len(P)
    elapsed = time.perf_counter() - start
    ok = err_susp <= 1e-12 and err_cone <= 1e-12 and worst_slack >= -1e-6 and elapsed < 5.0
    record(
        2,
        ok,
        f"suspension {err_susp:.1e}, cone {err_cone:.1e} <= 1e-12; point-side slack {worst_slack:.1e} >= -1e-6 "
        f"over {tested} triangles in {len(ANALYTIC)} spaces; {elapsed:.2f}s < 5s",
    )


def test_criterion_3_zoo_regression(record, zoo_default):
    results, elapsed = zoo_default

    def cls(name, flag):
        return results[name]["classification"][flag]

    mismatched = sorted(n for n, d in results.items() if d["status"] != "match")
    pair = cls("antipodal-pair-on-sphere", "quasi_convex")
    pair_margin = pair["worst_margin"]
    pair_ok = pair["verdict"] == NO_VIOLATION and (pair_margin == "-inf" or pair_margin <= 0)
    helix = cls("helix-in-cylinder", "quasi_convex")
    helix_ok = helix["verdict"] == VIOLATION and helix["worst_margin"] >= 0.1
    barrel_ok = cls("barrel-rim", "locally_quasi_convex")["verdict"] == VIOLATION
    capped_ok = (
        cls("capped-cylinder-rim", "quasi_convex")["verdict"] == NO_VIOLATION
        and cls("capped-cylinder-rim", "locally_convex")["verdict"] == VIOLATION
        and cls("capped-cylinder-rim", "extremal")["verdict"] == VIOLATION
    )
    flip_ok = (
        cls("poles-extremal-iff-narrow", "extremal")["verdict"] == NO_VIOLATION
        and cls("poles-extremal-iff-wide", "extremal")["verdict"] == VIOLATION
    )
    named = dict(antipodal=pair_ok, helix=helix_ok, barrel=barrel_ok, capped=capped_ok, flip=flip_ok)
    ok = len(results) >= 12 and not mismatched and all(named.values()) and elapsed < 60
    record(
        3,
        ok,
        f"{len(results) - len(mismatched)}/{len(results)} scenarios match"
        + (f" (mismatch: {', '.join(mismatched)})" if mismatched else "")
        + f"; named checks {named}; {elapsed:.1f}s < 60s",
    )


def _k1_passing(results):
    names = []
    for name, doc in results.items():
        spec = get_scenario(name)
        if spec.space.get("k", 1) == 1 and doc["theorems"] and doc["classification"]["quasi_convex"]["verdict"] != VIOLATION:
            names.append(name)
    return names


def _nets(name, subset_resolution=None):
    spec = get_scenario(name)
    sp = scenario_space(spec)
    F = make_subset(sp, spec.subset, subset_resolution or spec.subset_resolution, 0)
    Q = with_landmarks(sp, build_net(sp, spec.resolution, 0))
    return sp, F, Q


def test_criterion_4_c3(record, zoo_default):
    names = _k1_passing(zoo_default[0])
    bad, halving = [], []
    for name in names:
        sp, F, Q = _nets(name)
        if sp.k != 1:
            continue
        r = check_c3(sp, F, Q, tol=2 * F.mesh)
        if r.worst_margin > 2 * F.mesh or r.details["rigidity_margin"] > 2 * F.mesh:
            bad.append(f"{name}: margin {r.worst_margin:.3g}, rigidity {r.details['rigidity_margin']:.3g}")
        if isinstance(get_scenario(name).subset, dict):
            continue
        _, F2, _ = _nets(name, get_scenario(name).subset_resolution / 2)
        fine = check_c3(sp, F2, Q).worst_margin
        # margins within rounding of zero are not positive
        if r.worst_margin > 1e-12 and fine > r.worst_margin / 2:
            halving.append(f"{name}: {r.worst_margin:.3g} -> {fine:.3g}")
    ok = bool(names) and not bad and not halving
    record(
        4,
        ok,
        f"{len(names)} curvature-1 scenarios; bound/rigidity failures {bad or 'none'}; "
        f"halving failures {halving or 'none'}",
    )


def test_criterion_5_lemma43(record, zoo_default):
    results = zoo_default[0]
    names = _k1_passing(results)
    bad = []
    for name in names:
        sp, F, Q = _nets(name)
        r = check_lemma43(sp, F, Q, tol=2 * F.mesh)
        if r.verdict == VIOLATION:
            bad.append(name)
    antipodal = results["antipodal-pair-on-sphere"]["theorems"]["lemma43"]["details"]["branch_antipodal"]
    right = results["equator-great-circle"]["theorems"]["lemma43"]["details"]["branch_right_angle"]
    ok = bool(names) and not bad and antipodal > 0 and right > 0
    record(
        5,
        ok,
        f"{len(names) - len(bad)}/{len(names)} no-violation at 2*mesh; "
        f"antipodal branch hits {antipodal}, right-angle branch hits {right}",
    )


def test_criterion_6_lemma44(record):
    sp = build_space(Sphere(2))
    F = make_subset(sp, "equator", 0.05)
    north = np.array([0.0, 0.0, 1.0])
    inst = Lemma44Instance(sp, F, north, north, 1.0, 1.0)
    H = np.random.default_rng(6).normal(size=(200, 3))
    H /= np.linalg.norm(H, axis=1, keepdims=True)
    r = check_lemma44(inst, H)
    d = r.details
    outside = d["evaluated"] - d["zero_band"]
    share = d["sign_agree"] / outside if outside else 0.0
    ok = d["equality_margin"] == 0.0 and d["sign_disagree"] == 0 and share >= 0.95
    record(
        6,
        ok,
        f"equality margin {d['equality_margin']!r}; sign agreement {d['sign_agree']}/{outside} outside the zero band "
        f"({d['zero_band']} in band, {d['sign_disagree']} disagree, {d['skipped']} skipped)",
    )


def test_criterion_7_quasi_geodesics(record):
    disc = build_space(Euclidean(2, Region("disc", radius=1.0)))
    rim = make_subset(disc, "rim", 2 * PI / 1024)
    oracle = 4 * 64 * math.sin(PI / 32) ** 2
    chain = minimize_chain(disc, rim, [1, 0], [0, 1], 8)
    energy_err = abs(chain.energy - oracle)
    rows = sm_convergence(disc, rim, [1, 0], [0, 1], [4, 8, 16, 32])
    gaps = [r.gap for r in rows]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    stationarity = [
        check_stationarity(disc, rim, minimize_chain(disc, rim, [1, 0], [0, 1], m)).worst_margin for m in (4, 8, 16, 32)
    ]
    sphere = build_space(Sphere(2))
    eq = make_subset(sphere, "equator", PI / 512)
    sc = minimize_chain(sphere, eq, [1, 0, 0], [0, 1, 0], 8)
    stationarity.append(check_stationarity(sphere, eq, sc).worst_margin)
    ok = energy_err <= 1e-6 and decreasing and all(s == 0.0 for s in stationarity)
    record(
        7,
        ok,
        f"rim-arc energy {chain.energy:.9f} vs {oracle:.9f} (err {energy_err:.1e}); "
        f"gaps {', '.join(f'{g:.2e}' for g in gaps)} strictly decreasing {decreasing}; "
        f"stationarity margins {stationarity}",
    )


def test_criterion_8_certification(record):
    start = time.perf_counter()
    plane = build_space(Euclidean(2))
    rng = np.random.default_rng(8)
    worst_eq = 0.0
    for _ in range(50):
        x, y, step, theta = rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.05, 1), rng.uniform(0, 2 * PI)
        m = int(rng.integers(2, 16))
        s = step * np.arange(m + 1)
        c = make_chain(plane, np.column_stack([x + s * math.cos(theta), y + s * math.sin(theta)]))
        P = rng.uniform(-5, 5, (100, 2))
        worst_eq = max(worst_eq, abs(check_second_difference(plane, c, P, tol=1e-9).worst_margin))

    disc = build_space(Euclidean(2, Region("disc", radius=1.0)))
    F = make_subset(disc, "rim", 0.05)
    chain = minimize_chain(disc, F, F.points[0], F.points[len(F) // 4], 8)
    r = np.sqrt(rng.uniform(0, 1, 200))
    a = rng.uniform(0, 2 * PI, 200)
    P = np.column_stack([r * np.cos(a), r * np.sin(a)])
    sd = check_second_difference(disc, chain, P, tol=3 * F.mesh)
    ang = check_angle_comparison(disc, chain, P, tol=3 * F.mesh)

    arc = np.linspace(0, PI / 2, 9)
    arc_chain = make_chain(plane, np.column_stack([np.cos(arc), np.sin(arc)]))
    far = 3 * np.array([[math.cos(PI / 4), math.sin(PI / 4)]])
    arc_rep = check_angle_comparison(plane, arc_chain, far, tol=1e-9)
    elapsed = time.perf_counter() - start
    ok = (
        worst_eq <= 1e-9
        and sd.verdict == NO_VIOLATION
        and ang.verdict == NO_VIOLATION
        and arc_rep.verdict == VIOLATION
        and arc_rep.witness is not None
        and elapsed < 30
    )
    record(
        8,
        ok,
        f"straight-chain equality {worst_eq:.1e} <= 1e-9; disc rim second difference {sd.verdict} "
        f"(margin {sd.worst_margin:.3g}), angle form {ang.verdict} (margin {ang.worst_margin:.3g}) at 3*mesh; "
        f"circular arc {arc_rep.verdict} (margin {arc_rep.worst_margin:.3g}); {elapsed:.1f}s < 30s",
    )


def test_criterion_9_determinism(record, tmp_path):
    out1, out4 = tmp_path / "w1", tmp_path / "w4"
    code1 = main(["zoo", "run", "all", "--workers", "1", "--out", str(out1)])
    code4 = main(["zoo", "run", "all", "--workers", "4", "--out", str(out4)])
    files = sorted(p.name for p in out1.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(out1, out4, files, shallow=False)
    same_listing = files == sorted(p.name for p in out4.iterdir())
    ok = same_listing and not mismatch and not errors and code1 == code4 and len(files) == len(CATALOG) + 1
    record(
        9,
        ok,
        f"{len(match)}/{len(files)} report files byte-identical between 1 and 4 workers; exit codes {code1}, {code4}",
    )
