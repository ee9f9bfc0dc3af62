"""Classifiers for subsets: quasi-convex, locally quasi-convex, extremal, locally convex.

Everything reduces to distances.  Quasi-convexity is tested through the
comparison-angle criterion: whenever p is a foot point of q on F, the model
angle at p of the triangle (q, p, r) must not exceed pi/2 for any other r in
F.  Extremality uses the first-order finite difference of dist_q at a foot
point.  Local convexity is probed by short midpoints.

A "no-violation" verdict is evidence at the stated resolution, never a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nets import Net, SubsetNet
from .spaceforms import comparison_angles
from .spaces import AmbiguousGeodesic, Space

NO_VIOLATION = "no-violation"
VIOLATION = "violation"
VACUOUS = "vacuous"

FOOT_TIE = 1e-9
PROXIMITY_FACTOR = 3.0
EXTREMAL_SCALE = 3.0
EXTREMAL_SLACK = 1.5
CONVEX_SCALE = 4.0
CHUNK = 2_000_000


class RadiusTooSmall(ValueError):
    pass


@dataclass
class CheckReport:
    check: str
    verdict: str
    worst_margin: float
    witness: dict | None = None
    counts: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def violated(self) -> bool:
        return self.verdict == VIOLATION

    def to_dict(self, space: Space | None = None) -> dict:
        out = {
            "check": self.check,
            "verdict": self.verdict,
            "worst_margin": _clean(self.worst_margin),
            "counts": dict(self.counts),
            "params": {k: _clean(v) for k, v in self.params.items()},
            "witness": None,
        }
        if self.witness is not None:
            w = {}
            for key, val in self.witness.items():
                if isinstance(val, np.ndarray) and space is not None:
                    w[key] = space.encode(val)
                else:
                    w[key] = _clean(val)
            out["witness"] = w
        if self.details:
            out["details"] = {k: _clean(v) for k, v in self.details.items()}
        return out


def _clean(v):
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return None
        return v
    if isinstance(v, np.integer):
        return int(v)
    return v


def _verdict(margin: float, tol: float) -> str:
    return VIOLATION if margin > tol else NO_VIOLATION


def default_tol(mesh: float, min_side: float) -> float:
    """Angular tolerance coupled to the net resolution."""
    if not np.isfinite(min_side) or min_side <= 0:
        return 1e-6
    return max(1e-6, 2.0 * mesh / min_side)


def foot_pairs(DQF: np.ndarray, tie: float = FOOT_TIE):
    """Row-major (q, p) index pairs where p attains min_F dist(q, .) within ``tie``."""
    dmin = DQF.min(axis=1)
    qi, pi = np.nonzero(DQF <= dmin[:, None] + tie)
    return dmin, qi, pi


def local_foot_pairs(DQF: np.ndarray, DFF: np.ndarray, radius: float):
    """(q, p) pairs where p is a net-local minimum of dist_q on F."""
    near = (DFF <= radius) & (DFF > 0)
    qs, ps = [], []
    for q in range(len(DQF)):
        row = DQF[q]
        worse = np.where(near, row[None, :] < row[:, None] - FOOT_TIE, False)
        loc = np.nonzero(~worse.any(axis=1))[0]
        qs.append(np.full(len(loc), q))
        ps.append(loc)
    return DQF.min(axis=1), np.concatenate(qs), np.concatenate(ps)


def _angle_scan(k, qi, pi, DQF, DFF, allowed=None):
    """Largest comparison angle at p over the (q, p) pairs and all r in F (optionally masked).

    Returns (best angle, pair index, r index, triples evaluated).  Ties keep
    the first occurrence in (pair, r) order.
    """
    nF = DFF.shape[1]
    best, best_pair, best_r, count = -np.inf, -1, -1, 0
    step = max(1, CHUNK // max(1, nF))
    for s in range(0, len(qi), step):
        q = qi[s : s + step]
        p = pi[s : s + step]
        a = DQF[q, p][:, None]
        b = DFF[p]
        c = DQF[q]
        theta = comparison_angles(k, a, b, c)
        bad = (b <= 0) | np.isnan(theta)
        if allowed is not None:
            bad |= ~allowed[s : s + step]
        theta = np.where(bad, -np.inf, theta)
        count += int((~bad).sum())
        flat = int(np.argmax(theta))
        i, r = divmod(flat, nF)
        if theta[i, r] > best:
            best, best_pair, best_r = float(theta[i, r]), s + i, r
    return best, best_pair, best_r, count


def _triangle_witness(Q, F, q, p, r, DQF, DFF, angle):
    return {
        "q": Q[q],
        "p": F[p],
        "r": F[r],
        "dqp": float(DQF[q, p]),
        "dpr": float(DFF[p, r]),
        "dqr": float(DQF[q, r]),
        "angle": float(angle),
    }


def _params(F: SubsetNet, Q: Net | None, tol, **extra):
    out = {"tol": tol, "mesh_F": F.mesh, "size_F": len(F)}
    if Q is not None:
        out.update({"mesh_Q": Q.mesh, "size_Q": len(Q), "resolution": Q.resolution, "seed": Q.seed})
    out.update(extra)
    return out


def check_quasi_convex(
    space: Space,
    F: SubsetNet,
    Q: Net,
    tol: float | None = None,
    proximity: float | None = None,
    feet: str = "global",
) -> CheckReport:
    """Comparison-angle test at foot points.  worst_margin = max(angle - pi/2)."""
    if len(F) <= 1:
        return CheckReport("quasi_convex", VACUOUS, -math.inf, None, {"q": len(Q)}, _params(F, Q, tol))
    eps = PROXIMITY_FACTOR * F.mesh if proximity is None else proximity
    DQF = space.pairwise(Q.points, F.points)
    DFF = space.pairwise(F.points, F.points)
    if feet == "local":
        dmin, qi, pi = local_foot_pairs(DQF, DFF, PROXIMITY_FACTOR * F.mesh)
    else:
        dmin, qi, pi = foot_pairs(DQF)
    keep = DQF[qi, pi] > eps
    qi, pi = qi[keep], pi[keep]
    counts = {"q": len(Q), "q_tested": int(len(np.unique(qi))), "foot_pairs": int(len(qi))}
    if len(qi) == 0:
        t = 1e-6 if tol is None else tol
        return CheckReport("quasi_convex", NO_VIOLATION, -math.inf, None, counts, _params(F, Q, t, proximity=eps, feet=feet))
    if tol is None:
        tol = default_tol(F.mesh, float(DQF[qi, pi].min()))
    best, j, r, n = _angle_scan(space.k, qi, pi, DQF, DFF)
    counts["triples"] = n
    margin = best - math.pi / 2
    verdict = _verdict(margin, tol)
    witness = None
    if verdict == VIOLATION:
        witness = _triangle_witness(Q.points, F.points, qi[j], pi[j], r, DQF, DFF, best)
    return CheckReport("quasi_convex", verdict, margin, witness, counts, _params(F, Q, tol, proximity=eps, feet=feet))


def check_local_quasi_convex(
    space: Space,
    F: SubsetNet,
    radius: float,
    Q: Net,
    tol: float | None = None,
    proximity: float | None = None,
) -> CheckReport:
    """The comparison-angle test restricted to balls of the given radius centred on F."""
    if radius <= 2 * F.mesh:
        raise RadiusTooSmall(f"radius {radius} must exceed twice the subset mesh {F.mesh}")
    eps = PROXIMITY_FACTOR * F.mesh if proximity is None else proximity
    DFF = space.pairwise(F.points, F.points)
    inside = DFF < radius
    populated = inside.sum(axis=1) >= 2
    base_counts = {"q": len(Q), "centers": len(F), "populated_balls": int(populated.sum())}
    if not populated.any():
        return CheckReport(
            "locally_quasi_convex", VACUOUS, -math.inf, None, base_counts, _params(F, Q, tol, radius=radius, proximity=eps)
        )
    DQF = space.pairwise(Q.points, F.points)
    dmin, qi, pi = foot_pairs(DQF)
    keep = DQF[qi, pi] > eps
    qi, pi = qi[keep], pi[keep]
    centers = np.nonzero(populated)[0]
    # a (q, p) pair is admissible for centre x when both lie in the ball around x
    admissible = (DQF[qi][:, centers] < radius) & inside[pi][:, centers]
    allowed = (admissible.astype(float) @ inside[centers].astype(float)) > 0
    has_center = admissible.any(axis=1)
    qi, pi, allowed = qi[has_center], pi[has_center], allowed[has_center]
    counts = dict(base_counts, q_tested=int(len(np.unique(qi))), foot_pairs=int(len(qi)))
    if len(qi) == 0:
        t = 1e-6 if tol is None else tol
        return CheckReport(
            "locally_quasi_convex", NO_VIOLATION, -math.inf, None, counts, _params(F, Q, t, radius=radius, proximity=eps)
        )
    if tol is None:
        tol = default_tol(F.mesh, float(DQF[qi, pi].min()))
    best, j, r, n = _angle_scan(space.k, qi, pi, DQF, DFF, allowed)
    counts["triples"] = n
    margin = best - math.pi / 2
    verdict = _verdict(margin, tol)
    witness = None
    if verdict == VIOLATION:
        witness = _triangle_witness(Q.points, F.points, qi[j], pi[j], r, DQF, DFF, best)
    return CheckReport(
        "locally_quasi_convex", verdict, margin, witness, counts, _params(F, Q, tol, radius=radius, proximity=eps)
    )


def check_extremal(
    space: Space,
    F: SubsetNet,
    Q: Net,
    tol: float = 0.0,
    scale: float = EXTREMAL_SCALE,
    slack: float = EXTREMAL_SLACK,
) -> CheckReport:
    """First-order finite difference of dist_q at foot points.

    With h = scale * mesh(Q), every ambient net point x with 0 < |px| <= h is
    probed; the slope (|xq| - |pq|) / |px| must stay below slack * mesh / h.
    Only q with |qF| >= 2h are used so that second-order terms stay small.
    """
    h = scale * Q.mesh
    tol_slope = slack * Q.mesh / h
    if len(F) == 0:
        return CheckReport("extremal", VACUOUS, -math.inf, None, {}, _params(F, Q, tol, h=h, tol_slope=tol_slope))
    DQF = space.pairwise(Q.points, F.points)
    dmin, qi, pi = foot_pairs(DQF)
    keep = DQF[qi, pi] >= 2 * h
    qi, pi = qi[keep], pi[keep]
    counts = {"q": len(Q), "q_tested": int(len(np.unique(qi))), "foot_pairs": int(len(qi))}
    params = _params(F, Q, tol, h=h, tol_slope=tol_slope)
    if len(qi) == 0:
        return CheckReport("extremal", NO_VIOLATION, -math.inf, None, counts, params)
    feet = np.unique(pi)
    DPX = space.pairwise(F.points[feet], Q.points)
    slot = {int(p): i for i, p in enumerate(feet)}
    DQQ_rows = {}
    best, best_j, best_x, probes = -math.inf, -1, -1, 0
    for j in range(len(qi)):
        q, p = int(qi[j]), int(pi[j])
        dpx = DPX[slot[p]]
        near = np.nonzero((dpx > 0) & (dpx <= h))[0]
        if len(near) == 0:
            continue
        if q not in DQQ_rows:
            DQQ_rows[q] = space.pairwise(Q.points[q : q + 1], Q.points)[0]
        slopes = (DQQ_rows[q][near] - DQF[q, p]) / dpx[near]
        probes += len(near)
        i = int(np.argmax(slopes))
        if slopes[i] > best:
            best, best_j, best_x = float(slopes[i]), j, int(near[i])
    counts["probes"] = probes
    if best_j < 0:
        return CheckReport("extremal", NO_VIOLATION, -math.inf, None, counts, params)
    margin = best - tol_slope
    verdict = _verdict(margin, tol)
    witness = None
    if verdict == VIOLATION:
        q, p, x = int(qi[best_j]), int(pi[best_j]), best_x
        witness = {
            "q": Q.points[q],
            "p": F.points[p],
            "r": Q.points[x],
            "dqp": float(DQF[q, p]),
            "dpr": float(DPX[slot[p], x]),
            "dqr": float(DQQ_rows[q][x]),
            "slope": best,
        }
    return CheckReport("extremal", verdict, margin, witness, counts, params)


def check_locally_convex(
    space: Space,
    F: SubsetNet,
    tol: float | None = None,
    scale: float | None = None,
) -> CheckReport:
    """Midpoints of pairs of F closer than ``scale`` must stay within tol of F."""
    if scale is None:
        scale = CONVEX_SCALE * F.mesh
    if tol is None:
        tol = F.mesh
    params = {"tol": tol, "scale": scale, "mesh_F": F.mesh, "size_F": len(F)}
    if len(F) <= 1:
        return CheckReport("locally_convex", VACUOUS, -math.inf, None, {"pairs": 0}, params)
    X = F.points
    DFF = space.pairwise(X, X)
    ii, jj = np.nonzero(np.triu((DFF > 0) & (DFF <= scale), 1))
    if len(ii) == 0:
        return CheckReport("locally_convex", VACUOUS, -math.inf, None, {"pairs": 0}, params)
    try:
        mids = space.geodesic_points(X[ii], X[jj], np.full(len(ii), 0.5))
    except AmbiguousGeodesic:
        # locate the offending pair for the message
        for i, j in zip(ii, jj):
            try:
                space.geodesic_point(X[i], X[j], 0.5)
            except AmbiguousGeodesic as exc:
                raise AmbiguousGeodesic(f"{exc} (pair {int(i)}, {int(j)})") from exc
        raise
    dmid = np.empty(len(ii))
    step = max(1, CHUNK // len(X))
    for s in range(0, len(ii), step):
        dmid[s : s + step] = space.pairwise(mids[s : s + step], X).min(axis=1)
    n = int(np.argmax(dmid))
    margin = float(dmid[n]) - tol
    verdict = _verdict(margin, 0.0)
    witness = None
    if verdict == VIOLATION:
        witness = {
            "p": X[ii[n]],
            "r": X[jj[n]],
            "q": mids[n],
            "dpr": float(DFF[ii[n], jj[n]]),
            "dist_to_F": float(dmid[n]),
        }
    return CheckReport("locally_convex", verdict, margin, witness, {"pairs": int(len(ii))}, params)


@dataclass
class Classification:
    locally_convex: CheckReport
    extremal: CheckReport
    quasi_convex: CheckReport
    locally_quasi_convex: CheckReport
    broken_implications: list = field(default_factory=list)

    FLAGS = ("locally_convex", "extremal", "quasi_convex", "locally_quasi_convex")

    def reports(self) -> dict:
        return {f: getattr(self, f) for f in self.FLAGS}

    def verdicts(self) -> dict:
        return {f: getattr(self, f).verdict for f in self.FLAGS}


def _passes(report: CheckReport) -> bool:
    return report.verdict != VIOLATION


def classify(
    space: Space,
    F: SubsetNet,
    Q: Net,
    lqc_radius: float | None = None,
    tol: float | None = None,
    convex_scale: float | None = None,
    convex_tol: float | None = None,
) -> Classification:
    """Run the four checks on shared nets and record any broken implication."""
    qc = check_quasi_convex(space, F, Q, tol=tol)
    shared_tol = qc.params["tol"] if tol is None else tol
    radius = lqc_radius if lqc_radius is not None else max(0.5, 3 * F.mesh)
    lqc = check_local_quasi_convex(space, F, radius, Q, tol=shared_tol)
    ext = check_extremal(space, F, Q)
    lc = check_locally_convex(space, F, tol=convex_tol, scale=convex_scale)
    broken = []
    if _passes(ext) and not _passes(qc):
        broken.append("extremal => quasi_convex")
    if _passes(qc) and not _passes(lqc):
        broken.append("quasi_convex => locally_quasi_convex")
    return Classification(lc, ext, qc, lqc, broken)
