"""Discrete quasi-geodesics: chain energy minimisation inside a subset, and
comparison inequalities that a limit of such chains must satisfy.

A chain a_0, ..., a_m in F has energy S = m * sum |a_i a_{i+1}|^2.  By the
power-mean inequality S >= (chain length)^2, with equality for equal steps.
Minimising S over chains in F with fixed endpoints discretises a shortest
path inside F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .nets import Net, SubsetNet
from .qc_check import NO_VIOLATION, VACUOUS, VIOLATION, CheckReport
from .spaceforms import comparison_angles
from .spaces import AmbiguousGeodesic, Space


class NotInSubset(ValueError):
    pass


class WrongCurvature(ValueError):
    pass


@dataclass
class Chain:
    points: np.ndarray
    params: np.ndarray
    energy: float
    sweeps: int = 0
    indices: np.ndarray | None = None
    mesh: float = 0.0
    history: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.points) - 1

    @property
    def length(self) -> float:
        return float(self.params[-1])


def _steps(space: Space, points: np.ndarray) -> np.ndarray:
    return space.geometry.dist(points[:-1], points[1:])


def make_chain(space: Space, points, mesh: float = 0.0, indices=None, sweeps: int = 0) -> Chain:
    points = space.canonical(np.asarray(points, dtype=float))
    if len(points) < 2:
        raise ValueError("a chain needs at least two points")
    steps = _steps(space, points)
    params = np.concatenate([[0.0], np.cumsum(steps)])
    m = len(points) - 1
    energy = float(m * np.sum(steps**2))
    return Chain(points, params, energy, sweeps, None if indices is None else np.asarray(indices), mesh)


def chain_energy(space: Space, chain: Chain | np.ndarray) -> float:
    """m times the sum of squared consecutive distances."""
    points = chain.points if isinstance(chain, Chain) else np.asarray(chain, dtype=float)
    steps = _steps(space, space.canonical(points))
    return float((len(points) - 1) * np.sum(steps**2))


def _member(space: Space, F: SubsetNet, a) -> int:
    d = space.pairwise(np.asarray(a, dtype=float)[None, :], F.points)[0]
    i = int(np.argmin(d))
    if d[i] > 1e-9:
        raise NotInSubset(f"point {a!r} is not a member of the subset net (distance {d[i]:.3g})")
    return i


def _initial_indices(space: Space, F: SubsetNet, DFF: np.ndarray, i0: int, im: int, m: int) -> np.ndarray:
    """Project the uniform subdivision of an ambient geodesic; fall back to a path inside F."""
    p, q = F.points[i0], F.points[im]
    try:
        guide = np.array([space.geodesic_point(p, q, j / m) for j in range(m + 1)])
        idx = np.argmin(space.pairwise(guide, F.points), axis=1)
        idx[0], idx[-1] = i0, im
        if np.all(idx[1:] != idx[:-1]):
            return idx
    except AmbiguousGeodesic:
        pass
    return _path_indices(DFF, F.mesh, i0, im, m)


def _path_indices(DFF: np.ndarray, mesh: float, i0: int, im: int, m: int) -> np.ndarray:
    """m + 1 points spread by length along a shortest path of the neighbourhood graph of F."""
    reach = 2.5 * mesh
    while True:
        W = np.where((DFF > 0) & (DFF <= reach), DFF, 0.0)
        dist, pred = shortest_path(csr_matrix(W), method="D", directed=False, indices=i0, return_predecessors=True)
        if np.isfinite(dist[im]):
            break
        reach *= 2
    path = [im]
    while path[-1] != i0:
        path.append(int(pred[path[-1]]))
    path = np.array(path[::-1])
    cum = dist[path]
    targets = cum[-1] * np.arange(m + 1) / m
    return path[np.clip(np.searchsorted(cum, targets), 0, len(path) - 1)]


def _descend(sq, idx, m, max_iters, eps, history, energy) -> int:
    sweeps = 0
    for sweeps in range(1, max_iters + 1):
        moved = False
        for i in range(1, m):
            cost = sq[idx[i - 1]] + sq[:, idx[i + 1]]
            j = int(np.argmin(cost))
            if cost[j] < cost[idx[i]]:
                idx[i] = j
                moved = True
        history.append(energy(idx))
        if not moved or history[-2] - history[-1] <= eps:
            break
    return sweeps


def _dp_indices(sq: np.ndarray, i0: int, im: int, m: int) -> np.ndarray:
    """Exact minimiser of the chain energy over the net, by dynamic programming on the steps."""
    cost = sq[i0].copy()
    back = np.empty((m - 2, len(cost)), dtype=np.int64)
    for step in range(m - 2):
        total = cost[:, None] + sq
        back[step] = np.argmin(total, axis=0)
        cost = total[back[step], np.arange(len(cost))]
    idx = np.empty(m + 1, dtype=np.int64)
    idx[0], idx[m] = i0, im
    idx[m - 1] = int(np.argmin(cost + sq[:, im]))
    for i in range(m - 1, 1, -1):
        idx[i - 1] = back[i - 2, idx[i]]
    return idx


def minimize_chain(
    space: Space,
    F: SubsetNet,
    a0,
    am,
    m: int,
    max_iters: int = 10_000,
    eps: float = 0.0,
) -> Chain:
    """Coordinate descent on the chain energy over the points of F.

    Each interior point is replaced by the first net point minimising
    |a_{i-1} y|^2 + |y a_{i+1}|^2, but only when that strictly lowers the
    value.  Sweeps stop when nothing moves, when the energy drop falls to
    ``eps`` or below, or after ``max_iters`` sweeps.  Single-point moves can
    stall in discrete local minima, so the result is then compared with the
    exact net minimiser from dynamic programming and descent is resumed from
    the better of the two.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    i0, im = _member(space, F, a0), _member(space, F, am)
    DFF = space.pairwise(F.points, F.points)
    sq = DFF**2
    idx = _initial_indices(space, F, DFF, i0, im, m)

    def energy(ix):
        return float(m * np.sum(sq[ix[:-1], ix[1:]]))

    history = [energy(idx)]
    sweeps = _descend(sq, idx, m, max_iters, eps, history, energy)
    best = _dp_indices(sq, i0, im, m)
    if energy(best) < history[-1]:
        idx = best
        history.append(energy(idx))
        sweeps += _descend(sq, idx, m, max_iters, eps, history, energy)
    chain = make_chain(space, F.points[idx], F.mesh, idx, sweeps)
    chain.history = history
    return chain


def check_stationarity(space: Space, F: SubsetNet, chain: Chain, tol: float = 0.0) -> CheckReport:
    """How much any interior chain point could improve by moving within F."""
    params = {"tol": tol, "m": chain.m, "mesh_F": F.mesh}
    if chain.m < 2:
        return CheckReport("stationarity", VACUOUS, -math.inf, None, {"interior": 0}, params)
    D = space.pairwise(chain.points, F.points) ** 2
    if chain.indices is not None:
        own = chain.indices
    else:
        own = np.argmin(space.pairwise(chain.points, F.points), axis=1)
    worst, worst_i = -math.inf, -1
    for i in range(1, chain.m):
        cost = D[i - 1] + D[i + 1]
        gain = float(cost[own[i]] - cost.min())
        if gain > worst:
            worst, worst_i = gain, i
    verdict = VIOLATION if worst > tol else NO_VIOLATION
    witness = None
    if verdict == VIOLATION:
        witness = {"p": chain.points[worst_i], "index": worst_i, "gain": worst}
    return CheckReport("stationarity", verdict, worst, witness, {"interior": chain.m - 1}, params)


def _default_tol(chain: Chain, scale: float) -> float:
    return max(1e-9, scale * chain.mesh)


def check_second_difference(space: Space, chain: Chain, P: Net | np.ndarray, tol: float | None = None) -> CheckReport:
    """Discrete second difference of |p a_i|^2 against |a_{i-1} a_i|^2 + |a_i a_{i+1}|^2 (curvature 0)."""
    if space.k != 0:
        raise WrongCurvature(f"the second-difference test needs declared curvature 0, got {space.k}")
    pts = P.points if isinstance(P, Net) else np.asarray(P, dtype=float)
    if tol is None:
        tol = _default_tol(chain, 3.0 * chain.length)
    params = {"tol": tol, "m": chain.m, "size_P": len(pts)}
    if chain.m < 2:
        return CheckReport("second_difference", VACUOUS, -math.inf, None, {}, params)
    g = space.pairwise(pts, chain.points) ** 2
    steps = np.diff(chain.params) ** 2
    lhs = (g[:, 2:] - g[:, 1:-1]) - (g[:, 1:-1] - g[:, :-2])
    rhs = steps[:-1] + steps[1:]
    margin = lhs - rhs[None, :]
    flat = int(np.argmax(margin))
    p, i = divmod(flat, margin.shape[1])
    worst = float(margin[p, i])
    verdict = VIOLATION if worst > tol else NO_VIOLATION
    witness = None
    if verdict == VIOLATION:
        witness = {"p": pts[p], "q": chain.points[i + 1], "index": i + 1, "lhs": float(lhs[p, i]), "rhs": float(rhs[i])}
    return CheckReport("second_difference", verdict, worst, witness, {"evaluations": int(margin.size)}, params)


def check_angle_comparison(space: Space, chain: Chain, P: Net | np.ndarray, tol: float | None = None) -> CheckReport:
    """Vertex form of the curvature-k comparison along a chain.

    At each interior vertex a_i the model angles of the triangles
    (|p a_i|, t_i - t_0, |p a_0|) and (|p a_i|, t_m - t_i, |p a_m|) must sum
    to at most pi.
    """
    pts = P.points if isinstance(P, Net) else np.asarray(P, dtype=float)
    if tol is None:
        tol = _default_tol(chain, 3.0)
    params = {"tol": tol, "m": chain.m, "size_P": len(pts), "k": space.k}
    if chain.m < 2:
        return CheckReport("angle_comparison", VACUOUS, -math.inf, None, {}, params)
    d = space.pairwise(pts, chain.points)
    t = chain.params
    inner = d[:, 1:-1]
    back = comparison_angles(space.k, inner, (t[1:-1] - t[0])[None, :], d[:, :1])
    fwd = comparison_angles(space.k, inner, (t[-1] - t[1:-1])[None, :], d[:, -1:])
    total = back + fwd - math.pi
    total = np.where(np.isnan(total), -np.inf, total)
    flat = int(np.argmax(total))
    p, i = divmod(flat, total.shape[1])
    worst = float(total[p, i])
    verdict = VIOLATION if worst > tol else NO_VIOLATION
    witness = None
    if verdict == VIOLATION:
        witness = {
            "p": pts[p],
            "q": chain.points[i + 1],
            "index": i + 1,
            "angle_back": float(back[p, i]),
            "angle_forward": float(fwd[p, i]),
        }
    return CheckReport("angle_comparison", verdict, worst, witness, {"evaluations": int(total.size)}, params)


def check_concavity(space: Space, chain: Chain, P: Net | np.ndarray, tol: float | None = None) -> CheckReport:
    """Concavity comparison for g(t) = |p gamma(t)|^2 at curvature 0.

    For chain parameters a < t < b the test is
    (b - t) g(a) + (t - a) g(b) - (b - a) g(t) <= (b - a)(t - a)(b - t),
    evaluated on every consecutive triple and on the full span.
    """
    if space.k != 0:
        raise WrongCurvature(f"the concavity test needs declared curvature 0, got {space.k}")
    pts = P.points if isinstance(P, Net) else np.asarray(P, dtype=float)
    if tol is None:
        tol = _default_tol(chain, 3.0 * chain.length)
    params = {"tol": tol, "m": chain.m, "size_P": len(pts)}
    if chain.m < 2:
        return CheckReport("concavity", VACUOUS, -math.inf, None, {}, params)
    g = space.pairwise(pts, chain.points) ** 2
    t = chain.params
    m = chain.m
    ia = np.concatenate([np.arange(m - 1), np.zeros(m - 1, dtype=int)])
    it = np.concatenate([np.arange(1, m), np.arange(1, m)])
    ib = np.concatenate([np.arange(2, m + 1), np.full(m - 1, m)])
    a, tt, b = t[ia], t[it], t[ib]
    lhs = (b - tt) * g[:, ia] + (tt - a) * g[:, ib] - (b - a) * g[:, it]
    rhs = (b - a) * (tt - a) * (b - tt)
    margin = lhs - rhs[None, :]
    flat = int(np.argmax(margin))
    p, j = divmod(flat, margin.shape[1])
    worst = float(margin[p, j])
    verdict = VIOLATION if worst > tol else NO_VIOLATION
    witness = None
    if verdict == VIOLATION:
        witness = {"p": pts[p], "triple": [int(ia[j]), int(it[j]), int(ib[j])]}
    return CheckReport("concavity", verdict, worst, witness, {"evaluations": int(margin.size)}, params)


@dataclass
class SmRow:
    m: int
    S: float
    L2: float
    gap: float


def sm_convergence(space: Space, F: SubsetNet, a0, am, m_list) -> list[SmRow]:
    """S_m for each m, against the squared length of the largest-m minimiser."""
    m_list = list(m_list)
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ValueError("m_list must be increasing")
    chains = [minimize_chain(space, F, a0, am, m) for m in m_list]
    L2 = chains[-1].length ** 2
    return [SmRow(m, c.energy, L2, abs(c.energy - L2)) for m, c in zip(m_list, chains)]


def certify(space: Space, F: SubsetNet, chain: Chain, P: Net | np.ndarray) -> list[CheckReport]:
    """Every certificate applicable to the chain in this space."""
    out = [check_stationarity(space, F, chain)]
    out.append(check_angle_comparison(space, chain, P))
    if space.k == 0:
        out.append(check_second_difference(space, chain, P))
        out.append(check_concavity(space, chain, P))
    return out
