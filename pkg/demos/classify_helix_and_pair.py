"""Classify two subsets and print the witness behind each verdict.

A helix in the cylinder fails the comparison-angle test; a pair of antipodal
points on the round sphere passes it.

    python3 demos/classify_helix_and_pair.py
"""

import math

from qconvex import build_net, build_space, classify, make_subset
from qconvex.spaces import Circle, Line, Product, Sphere


def show(title, space, F, Q):
    cls = classify(space, F, Q)
    print(f"{title}  (|F| = {len(F)}, |Q| = {len(Q)}, mesh_Q = {Q.mesh:.3f})")
    for flag, rep in cls.reports().items():
        print(f"  {flag:22s} {rep.verdict:13s} margin {rep.worst_margin:+.4f}")
    w = cls.quasi_convex.witness
    if w is not None:
        print(f"  witness angle {math.degrees(w['angle']):.1f} deg at p = {w['p']}, q = {w['q']}")
    print()


cylinder = build_space(Product(Circle(2 * math.pi), Line()))
show("helix(1) in the cylinder", cylinder, make_subset(cylinder, "helix(1)", 0.05), build_net(cylinder, 0.2, 0))

sphere = build_space(Sphere(2))
pair = make_subset(sphere, {"type": "list", "points": [[0, 0, 1], [0, 0, -1]]}, 0.1)
show("antipodal pair on S^2", sphere, pair, build_net(sphere, 0.15, 0))
