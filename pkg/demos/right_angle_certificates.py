"""Certify the right-angle bounds for quasi-convex subsets of curvature >= 1.

Two antipodal longitudes in the suspension over a circle of length pi are
quasi-convex.  Every point is within pi/2 of them, sums |qp| + |qp'| stay
below pi, and the subset is closed under meridians through a pole.

    python3 demos/right_angle_certificates.py
"""

import numpy as np

from qconvex import build_net, build_space, make_subset
from qconvex.spaces import Circle, Sphere, Suspension
from qconvex.theorems import Lemma44Instance, check_c3, check_lemma43, check_lemma44, check_prop22
from qconvex.zoo import with_landmarks

space = build_space(Suspension(Circle(np.pi)))
F = make_subset(space, "longitudes(0, pi/2)", 0.05)
Q = with_landmarks(space, build_net(space, 0.1, 0))
for check in (check_c3, check_lemma43):
    rep = check(space, F, Q)
    print(f"{rep.check:8s} {rep.verdict:13s} margin {rep.worst_margin:+.4f}  {rep.details}")
rep = check_prop22(space, F)
print(f"{rep.check:8s} {rep.verdict:13s} margin {rep.worst_margin:+.4f}")

sphere = build_space(Sphere(2))
north = np.array([0.0, 0.0, 1.0])
inst = Lemma44Instance(sphere, make_subset(sphere, "equator", 0.05), north, north, 1.0, 1.0)
eta = np.random.default_rng(0).normal(size=(200, 3))
rep = check_lemma44(inst, eta / np.linalg.norm(eta, axis=1, keepdims=True))
print(f"{rep.check:8s} {rep.verdict:13s} equality margin {rep.details['equality_margin']!r}, "
      f"signs agree {rep.details['sign_agree']}/{rep.details['evaluated']}")
