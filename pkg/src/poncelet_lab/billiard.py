"""The billiard map inside an ellipse.

Phase points carry the boundary parameter ``t`` rather than coordinates;
the foot point is always recomputed as ``(a1 cos t, a2 sin t)`` so long
orbits cannot drift off the table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conics import Ellipse, Line, confocal_ellipse, line_tangency_param, point_on, tangent_directions
from .errors import DomainError, TangencyError

TWO_PI = 2.0 * math.pi
GRAZING = 1e-12
CLOSURE_TOL = 1e-11


@dataclass(frozen=True)
class PhasePoint:
    t: float
    u: tuple

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t) % TWO_PI)
        ux, uy = float(self.u[0]), float(self.u[1])
        if abs(math.hypot(ux, uy) - 1.0) > 1e-12:
            raise DomainError(f"direction {self.u} is not a unit vector")
        object.__setattr__(self, "u", (ux, uy))


@dataclass(frozen=True, eq=False)
class Orbit:
    """A billiard polygon; side ``i`` runs from ``points[i]`` to ``points[i+1]``
    with unit direction ``dirs[i]``."""

    e: Ellipse
    vertices: np.ndarray
    points: np.ndarray
    dirs: np.ndarray
    mu: float
    n: int
    k: int
    closure_defect: float
    side_mu: np.ndarray = field(repr=False)
    j_values: np.ndarray = field(repr=False)

    @property
    def J(self) -> float:
        return float(np.mean(self.j_values))

    @property
    def mu_max_dev(self) -> float:
        return float(np.max(np.abs(self.side_mu - self.mu)))

    @property
    def j_max_dev(self) -> float:
        return float(np.max(self.j_values) - np.min(self.j_values))

    def is_closed(self, tol: float = CLOSURE_TOL) -> bool:
        return self.closure_defect < tol

    @classmethod
    def from_polygon(cls, e: Ellipse, points) -> "Orbit":
        """Wrap a closed polygon whose vertices lie on ``e``.

        The closure defect is the mismatch of the accumulated parameter
        advance against the nearest whole number of turns.
        """
        pts = np.asarray(points, dtype=float)
        n = len(pts)
        ts = np.array([e.param_of(p) for p in pts])
        nxt = np.roll(pts, -1, axis=0)
        dirs = nxt - pts
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        adv = np.mod(np.roll(ts, -1) - ts, TWO_PI)
        total = float(np.sum(adv))
        k = int(round(total / TWO_PI))
        side_mu = np.array([line_tangency_param(e, Line.from_point_direction(p, u)) for p, u in zip(pts, dirs)])
        a = np.array([1 / e.a1**2, 1 / e.a2**2])
        jv = -np.sum(dirs * pts * a, axis=1)
        return cls(e, ts, pts, dirs, float(np.mean(side_mu)), n, k, abs(total - TWO_PI * k), side_mu, jv)


def _step(a1, a2, t, ux, uy):
    """One billiard step on raw floats: returns ``(t', vx, vy, dt)``."""
    ia, ib = 1.0 / (a1 * a1), 1.0 / (a2 * a2)
    x, y = a1 * math.cos(t), a2 * math.sin(t)
    s = -2.0 * (x * ux * ia + y * uy * ib) / (ux * ux * ia + uy * uy * ib)
    if abs(s) < GRAZING * a1:
        raise TangencyError(f"direction ({ux}, {uy}) is tangent at t={t}")
    yx, yy = x + s * ux, y + s * uy
    t2 = math.atan2(yy / a2, yx / a1)
    yx, yy = a1 * math.cos(t2), a2 * math.sin(t2)
    nx, ny = yx * ia, yy * ib
    nn = math.hypot(nx, ny)
    nx, ny = nx / nn, ny / nn
    dot = ux * nx + uy * ny
    vx, vy = ux - 2.0 * dot * nx, uy - 2.0 * dot * ny
    vn = math.hypot(vx, vy)
    return t2, vx / vn, vy / vn, (t2 - t) % TWO_PI


def chord_next(e: Ellipse, x, u) -> np.ndarray:
    """Far endpoint of the chord from ``x`` in direction ``u``."""
    a = e.form
    x, u = np.asarray(x, dtype=float), np.asarray(u, dtype=float)
    s = -2.0 * float(x @ a @ u) / float(u @ a @ u)
    if abs(s) < GRAZING * e.a1:
        raise TangencyError("direction is tangent to the table")
    return x + s * u


def reflect(e: Ellipse, y, u) -> np.ndarray:
    """Reflect the arriving direction ``u`` at the boundary point ``y``."""
    y, u = np.asarray(y, dtype=float), np.asarray(u, dtype=float)
    nrm = e.form @ y
    nrm /= np.linalg.norm(nrm)
    v = u - 2.0 * float(u @ nrm) * nrm
    return v / np.linalg.norm(v)


def billiard_step(e: Ellipse, pp: PhasePoint) -> PhasePoint:
    t2, vx, vy, _ = _step(e.a1, e.a2, pp.t, pp.u[0], pp.u[1])
    return PhasePoint(t2, (vx, vy))


def joachimsthal(e: Ellipse, pp: PhasePoint) -> float:
    """Joachimsthal integral ``J = -<u, A x>``; positive for inward ``u``."""
    return -(math.cos(pp.t) * pp.u[0] / e.a1 + math.sin(pp.t) * pp.u[1] / e.a2)


def caustic_of_ray(e: Ellipse, pp: PhasePoint) -> float:
    return line_tangency_param(e, Line.from_point_direction(point_on(e, pp.t), pp.u))


def launch(e: Ellipse, caustic, t0: float) -> PhasePoint:
    """Phase point at ``t0`` tangent to a confocal caustic.

    ``caustic`` is either the parameter ``mu`` or the caustic ellipse itself
    (see ``confocal_from_minor`` for thin caustics). Of the two tangent lines
    the one advancing counterclockwise is taken: the forward direction has
    positive cross product with the outward normal.
    """
    if isinstance(caustic, Ellipse):
        c = caustic
        mu = (c.a2 - e.a2) * (c.a2 + e.a2)
    else:
        mu = float(caustic)
        c = confocal_ellipse(e, mu)
    x = point_on(e, t0)
    ct, st = math.cos(t0), math.sin(t0)
    # <x, C x> - 1 for x on the table, free of cancellation
    excess = -mu * (ct * ct / c.a1**2 + st * st / c.a2**2)
    normal = e.form @ x
    for u in tangent_directions(c.form, x, excess):
        if u @ normal > 0:
            u = -u
        if normal[0] * u[1] - normal[1] * u[0] > 0:
            return PhasePoint(t0, (float(u[0]), float(u[1])))
    raise TangencyError(f"no counterclockwise tangent at t0={t0}")


def orbit(e: Ellipse, pp0: PhasePoint, n: int) -> Orbit:
    """Iterate the billiard map ``n`` times from ``pp0`` and record the polygon.

    Non-closure is not an error here; it is reported in ``closure_defect``.
    """
    if n < 2:
        raise DomainError("orbit needs n >= 2")
    a1, a2 = e.a1, e.a2
    t, ux, uy = pp0.t, pp0.u[0], pp0.u[1]
    ts, dirs = [], []
    total = 0.0
    for _ in range(n):
        ts.append(t)
        dirs.append((ux, uy))
        t, ux, uy, dt = _step(a1, a2, t, ux, uy)
        total += dt
    k = int(round(total / TWO_PI))
    ts = np.array(ts)
    pts = np.column_stack([a1 * np.cos(ts), a2 * np.sin(ts)])
    dirs = np.array(dirs)
    side_mu = np.array([line_tangency_param(e, Line.from_point_direction(p, u)) for p, u in zip(pts, dirs)])
    jv = -(np.cos(ts) * dirs[:, 0] / a1 + np.sin(ts) * dirs[:, 1] / a2)
    return Orbit(e, ts, pts, dirs, float(np.mean(side_mu)), n, k, abs(total - TWO_PI * k), side_mu, jv)


def caustic_orbit(e: Ellipse, caustic, t0: float, n: int) -> Orbit:
    """The orbit of ``launch(e, caustic, t0)``, each side rebuilt from the caustic.

    Every side is drawn as the counterclockwise tangent from the current
    vertex to the known caustic instead of being reflected from the previous
    side. The vertices agree with ``orbit`` in exact arithmetic; numerically
    the caustic never drifts, which matters for caustics close to the focal
    segment where one rounding in the stored direction is a large relative
    change of the caustic.
    """
    if n < 2:
        raise DomainError("orbit needs n >= 2")
    a1, a2 = e.a1, e.a2
    ia, ib = 1.0 / (a1 * a1), 1.0 / (a2 * a2)
    t = t0 % TWO_PI
    ts, dirs = [], []
    total = 0.0
    for _ in range(n):
        ux, uy = launch(e, caustic, t).u
        ts.append(t)
        dirs.append((ux, uy))
        x, y = a1 * math.cos(t), a2 * math.sin(t)
        s = -2.0 * (x * ux * ia + y * uy * ib) / (ux * ux * ia + uy * uy * ib)
        t2 = math.atan2((y + s * uy) / a2, (x + s * ux) / a1)
        total += (t2 - t) % TWO_PI
        t = t2
    k = int(round(total / TWO_PI))
    ts = np.array(ts)
    pts = np.column_stack([a1 * np.cos(ts), a2 * np.sin(ts)])
    dirs = np.array(dirs)
    side_mu = np.array([line_tangency_param(e, Line.from_point_direction(p, u)) for p, u in zip(pts, dirs)])
    jv = -(np.cos(ts) * dirs[:, 0] / a1 + np.sin(ts) * dirs[:, 1] / a2)
    return Orbit(e, ts, pts, dirs, float(np.mean(side_mu)), n, k, abs(total - TWO_PI * k), side_mu, jv)
