"""Minimise chain energy along the boundary of the unit disc and certify it.

The rim of a flat disc is extremal, so shortest paths inside it should pass
the curvature-0 comparison tests.  A circular arc in the open plane, which is
not a geodesic there, fails them.

    python3 demos/chain_on_disc_boundary.py
"""

import math

import numpy as np

from qconvex import build_space, make_subset
from qconvex.qgeo import certify, check_angle_comparison, make_chain, minimize_chain, sm_convergence
from qconvex.spaces import Euclidean, Region

disc = build_space(Euclidean(2, Region("disc", radius=1.0)))
rim = make_subset(disc, "rim", 2 * math.pi / 1024)

print("m    S_m          closed form   |S_m - L^2|")
for row in sm_convergence(disc, rim, [1, 0], [0, 1], [4, 8, 16, 32]):
    exact = 4 * row.m**2 * math.sin(math.pi / (4 * row.m)) ** 2
    print(f"{row.m:<4d} {row.S:.9f}  {exact:.9f}   {row.gap:.2e}")

chain = minimize_chain(disc, rim, [1, 0], [0, 1], 8)
rng = np.random.default_rng(0)
r, a = np.sqrt(rng.uniform(0, 1, 200)), rng.uniform(0, 2 * math.pi, 200)
P = np.column_stack([r * np.cos(a), r * np.sin(a)])
print("\ncertificates for the minimised rim chain:")
for rep in certify(disc, rim, chain, P):
    print(f"  {rep.check:18s} {rep.verdict:13s} margin {rep.worst_margin:+.4f} (tol {rep.params['tol']:.3g})")

plane = build_space(Euclidean(2))
t = np.linspace(0, math.pi / 2, 9)
arc = make_chain(plane, np.column_stack([np.cos(t), np.sin(t)]))
rep = check_angle_comparison(plane, arc, 3 * np.array([[math.cos(math.pi / 4), math.sin(math.pi / 4)]]), tol=1e-9)
print(f"\ncircular arc in the plane: {rep.verdict}, angle sum exceeds pi by {rep.worst_margin:.3f}")
