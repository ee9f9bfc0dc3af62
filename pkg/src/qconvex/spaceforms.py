"""Trigonometry of the two-dimensional model surfaces of constant curvature k.

Both directions are evaluated with half-angle (haversine-type) formulas
rather than a bare law of cosines, so that thin and nearly collinear
triangles keep full relative precision.  Any curvature is handled by
rescaling lengths to k in {-1, 0, 1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LENGTH_TOL = 1e-9


class GeometryError(ValueError):
    """Base class for invalid geometric input."""


class DegenerateTriangle(GeometryError):
    pass


class InvalidSides(GeometryError):
    pass


class InvalidAngle(GeometryError):
    pass


def _scale(k: float) -> float:
    return math.sqrt(abs(k)) if k != 0 else 1.0


def _sgn(k: float) -> int:
    return 0 if k == 0 else (1 if k > 0 else -1)


@dataclass(frozen=True)
class TriangleSides:
    """Side lengths of a model triangle: two sides at a vertex and the opposite one."""

    k: float
    s1: float
    s2: float
    opp: float

    def validate(self, tol: float = LENGTH_TOL) -> None:
        s1, s2, opp = self.s1, self.s2, self.opp
        if min(s1, s2, opp) < -tol:
            raise InvalidSides(f"negative side in {self}")
        if opp > s1 + s2 + tol or s1 > s2 + opp + tol or s2 > s1 + opp + tol:
            raise InvalidSides(f"triangle inequality fails for {self}")
        if self.k > 0:
            half = math.pi / math.sqrt(self.k)
            if max(s1, s2, opp) > half + tol:
                raise InvalidSides(f"side longer than pi/sqrt(k) in {self}")
            if s1 + s2 + opp > 2 * half + tol:
                raise InvalidSides(f"perimeter exceeds 2*pi/sqrt(k) in {self}")

    def angle(self) -> float:
        return comparison_angle(self.k, self.s1, self.s2, self.opp)


def comparison_angle(k: float, s1: float, s2: float, opp: float) -> float:
    """Angle at the vertex between sides ``s1`` and ``s2`` of the model triangle.

    Raises DegenerateTriangle when an adjacent side vanishes and InvalidSides
    when the lengths do not form a triangle in the model surface.  For k > 0,
    a side of length pi/sqrt(k) forces the three vertices onto one geodesic;
    the collinear limit is returned.
    """
    TriangleSides(k, s1, s2, opp).validate()
    if s1 <= 0 or s2 <= 0:
        raise DegenerateTriangle(f"adjacent side vanishes: s1={s1}, s2={s2}")
    if k > 0:
        half = math.pi / math.sqrt(k)
        if s1 >= half - LENGTH_TOL or s2 >= half - LENGTH_TOL:
            if abs(opp - abs(s1 - s2)) <= LENGTH_TOL:
                return 0.0
            if abs(opp - (s1 + s2)) <= LENGTH_TOL:
                return math.pi
            raise InvalidSides(
                f"side equals pi/sqrt(k) but the triangle is not collinear: "
                f"s1={s1}, s2={s2}, opp={opp}"
            )
    return float(comparison_angles(k, s1, s2, opp))


def comparison_angles(k: float, s1, s2, opp) -> np.ndarray:
    """Vectorised comparison angle; never raises.

    Lengths violating the triangle inequality by rounding are clamped to the
    collinear configuration.  A zero adjacent side yields NaN.  For k > 0 a
    side at pi/sqrt(k) yields 0 or pi by the collinear rule (0 when the
    opposite side is the difference of the other two).
    """
    c = _scale(k)
    a = np.asarray(s1, dtype=float) * c
    b = np.asarray(s2, dtype=float) * c
    d = np.asarray(opp, dtype=float) * c
    a, b, d = np.broadcast_arrays(a, b, d)
    half = 0.5 * (a + b + d)
    sg = _sgn(k)
    with np.errstate(invalid="ignore", divide="ignore"):
        if sg == 0:
            num = (half - a) * (half - b)
            den = half * (half - d)
        elif sg > 0:
            num = np.sin(half - a) * np.sin(half - b)
            den = np.sin(half) * np.sin(half - d)
        else:
            num = np.sinh(half - a) * np.sinh(half - b)
            den = np.sinh(half) * np.sinh(half - d)
        num = np.maximum(num, 0.0)
        den = np.maximum(den, 0.0)
        theta = 2.0 * np.arctan2(np.sqrt(num), np.sqrt(den))
        if sg > 0:
            at_pi = (a >= math.pi - LENGTH_TOL * c) | (b >= math.pi - LENGTH_TOL * c)
            if np.any(at_pi):
                collinear = np.abs(d - np.abs(a - b)) <= np.abs(d - (a + b))
                theta = np.where(at_pi, np.where(collinear, 0.0, math.pi), theta)
        theta = np.where((a <= 0) | (b <= 0), np.nan, theta)
    return theta if theta.ndim else theta[()]


def side_from_angle(k: float, s1: float, s2: float, theta: float) -> float:
    """Opposite side of the model triangle with sides ``s1``, ``s2`` meeting at ``theta``."""
    if not (0.0 <= theta <= math.pi):
        raise InvalidAngle(f"angle {theta} outside [0, pi]")
    if s1 < 0 or s2 < 0:
        raise InvalidSides(f"negative side: s1={s1}, s2={s2}")
    if k > 0:
        half = math.pi / math.sqrt(k)
        if max(s1, s2) > half + LENGTH_TOL:
            raise InvalidSides(f"side longer than pi/sqrt(k): s1={s1}, s2={s2}")
    return float(sides_from_angles(k, s1, s2, theta))


def sides_from_angles(k: float, s1, s2, theta) -> np.ndarray:
    """Vectorised forward law of cosines."""
    c = _scale(k)
    a = np.asarray(s1, dtype=float) * c
    b = np.asarray(s2, dtype=float) * c
    t = np.asarray(theta, dtype=float)
    sg = _sgn(k)
    if sg == 0:
        out = np.sqrt((a - b) ** 2 + 4.0 * a * b * np.sin(0.5 * t) ** 2)
    elif sg > 0:
        sin_ab = np.sin(a) * np.sin(b)
        hav = np.sin(0.5 * (a - b)) ** 2 + sin_ab * np.sin(0.5 * t) ** 2
        cohav = np.cos(0.5 * (a + b)) ** 2 + sin_ab * np.cos(0.5 * t) ** 2
        out = 2.0 * np.arctan2(np.sqrt(np.maximum(hav, 0.0)), np.sqrt(np.maximum(cohav, 0.0)))
    else:
        h = np.sinh(0.5 * (a - b)) ** 2 + np.sinh(a) * np.sinh(b) * np.sin(0.5 * t) ** 2
        out = 2.0 * np.arcsinh(np.sqrt(h))
    out = out / c
    return out if np.ndim(out) else out[()]


def model_point_distance(k: float, a, b, c, u):
    """Distance in the model surface from p~ to the point at fraction u of [q~ r~].

    The model triangle has |pq| = a, |pr| = b, |qr| = c.  Used for the
    point-side form of triangle comparison.
    """
    a, b, c, u = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, u)))
    theta = comparison_angles(k, c, a, b)
    out = sides_from_angles(k, u * c, a, np.nan_to_num(theta))
    out = np.where(c == 0, a, out)
    return out if np.ndim(out) else out[()]
