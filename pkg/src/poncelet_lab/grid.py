"""Poncelet grid layers, grid-polygon angles, and the area-ratio machinery."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .billiard import TWO_PI, Orbit, caustic_orbit
from .conics import (ConcentricConic, Ellipse, Line, confocal_ellipse, confocal_param_of_point,
                     confocalize)
from .errors import DegeneracyError, DomainError, PonceletError
from .invariants import area_ratio_of, polygon_area, tangent_polygon, vertex_angles
from .poncelet import spread, tangent_map_orbit


class MismatchError(PonceletError):
    """No cyclic relabelling matches two vertex sets."""


@dataclass(eq=False)
class GridLayer:
    """Intersections ``X[j] = l[j] & l[j+k]`` of the orbit's side lines.

    ``chains`` hold the index cycles ``j -> j+k`` and ``polygons`` the
    matching point lists.
    """

    k: int
    points: np.ndarray
    mu_values: np.ndarray
    mu_mean: float
    mu_max_dev: float
    polygons: list
    chains: list = field(default_factory=list)
    e: Ellipse | None = None

    @property
    def ellipse(self) -> Ellipse:
        """The confocal ellipse the layer lies on."""
        return confocal_ellipse(self.e, self.mu_mean)


def side_lines(o: Orbit) -> list:
    if o.n < 3:
        raise DomainError("side lines need n >= 3 (a 2-gon has one repeated line)")
    p = o.points
    return [Line.through(p[i], p[(i + 1) % o.n]) for i in range(o.n)]


def _chains(n: int, k: int) -> list:
    seen, out = set(), []
    for start in range(n):
        if start in seen:
            continue
        cyc, j = [], start
        while j not in seen:
            seen.add(j)
            cyc.append(j)
            j = (j + k) % n
        out.append(cyc)
    return out


def grid_layer(o: Orbit, k: int) -> GridLayer:
    n = o.n
    if not 2 <= k <= n - 2:
        raise DomainError(f"grid step k={k} outside 2..{n - 2}")
    lines = side_lines(o)
    pts = []
    for j in range(n):
        try:
            pts.append(lines[j].intersect(lines[(j + k) % n]))
        except DegeneracyError:
            raise DegeneracyError(f"side lines {j} and {(j + k) % n} are parallel (index {j})") from None
    pts = np.array(pts)
    mus = np.array([confocal_param_of_point(o.e, x)[0] for x in pts])
    mean = float(np.mean(mus))
    chains = _chains(n, k)
    return GridLayer(k, pts, mus, mean, float(np.max(np.abs(mus - mean))),
                     [pts[c] for c in chains], chains, o.e)


def _reduce_angle(theta):
    """Map an angle into ``[0, pi]`` by reduction mod 2 pi and reflection."""
    t = np.mod(theta, TWO_PI)
    return np.where(t > math.pi, TWO_PI - t, t)


def grid_angles(o: Orbit, layer: GridLayer) -> tuple:
    """(measured, formula) angles at every grid point ``X[j]``.

    At ``X[j]`` the grid polygon turns from line ``j`` to line ``j+k``; its
    neighbours are ``X[j-k]`` and ``X[j+k]``. The formula value is
    ``alpha[j+1] + .. + alpha[j+k] - (k-1) pi``, reduced into ``(0, pi)``.
    """
    n, k, x = o.n, layer.k, layer.points
    prev, nxt = np.roll(x, k, axis=0) - x, np.roll(x, -k, axis=0) - x
    cross = prev[:, 0] * nxt[:, 1] - prev[:, 1] * nxt[:, 0]
    measured = np.arctan2(np.abs(cross), np.sum(prev * nxt, axis=1))
    a = vertex_angles(o)
    window = sum(np.roll(a, -m) for m in range(1, k + 1))
    formula = _reduce_angle(window - (k - 1) * math.pi)
    return measured, formula


def grid_polygon_angles_check(o: Orbit, layer: GridLayer) -> float:
    measured, formula = grid_angles(o, layer)
    return float(np.max(np.abs(measured - formula)))


def grid_polygon_orbits(o: Orbit, layer: GridLayer) -> list:
    """Each grid polygon wrapped as a polygon on its own confocal ellipse."""
    e2 = layer.ellipse
    return [Orbit.from_polygon(e2, poly) for poly in layer.polygons]


def area_ratio(o: Orbit) -> float:
    """Signed area of the orbit over signed area of its tangent polygon (odd n)."""
    if o.n % 2 == 0:
        raise DomainError("area ratio is an invariant for odd n only")
    return area_ratio_of(o)


def tangent_polygon_conic(e: Ellipse, caustic: Ellipse) -> ConcentricConic:
    """Polar dual of the caustic w.r.t. the table: semi-axes ``a**2 / c``.

    The tangent-polygon vertices of every orbit with this caustic lie on it.
    Its longer axis may be either one, hence a general concentric conic.
    """
    b1, b2 = e.a1**2 / caustic.a1, e.a2**2 / caustic.a2
    return ConcentricConic(1.0 / b1**2, 0.0, 1.0 / b2**2)


@dataclass(eq=False)
class AreaRatioSweep:
    starts: np.ndarray
    direct: np.ndarray
    confocal: np.ndarray
    outer_confocal: Ellipse
    inner_confocal: Ellipse

    @property
    def direct_spread(self) -> float:
        return spread(self.direct)

    @property
    def confocal_spread(self) -> float:
        return spread(self.confocal)

    @property
    def agreement(self) -> float:
        """Relative gap between the two constants."""
        a, b = float(np.mean(self.direct)), float(np.mean(self.confocal))
        return abs(a - b) / abs(a)


def _outer_tangent_polygon(outer: ConcentricConic, pts) -> np.ndarray:
    m = outer.matrix
    lines = [Line(tuple(m @ p), 1.0) for p in pts]
    n = len(lines)
    return np.array([lines[i].intersect(lines[(i + 1) % n]) for i in range(n)])


def area_ratio_general(outer: ConcentricConic, inner: ConcentricConic, n: int, k: int = 1,
                       starts=16) -> AreaRatioSweep:
    """Area ratio over a Poncelet family of a closing concentric pair, two ways.

    Direct: tangent-line polygons of the pair and the outer tangents at their
    vertices. Confocal: the pair is mapped by ``confocalize``, the images of
    the start points launch billiard orbits on the resulting confocal pair,
    and the ratio is taken from those orbits.
    """
    if n % 2 == 0:
        raise DomainError("area ratio is an invariant for odd n only")
    if np.ndim(starts) == 0:
        starts = TWO_PI * (np.arange(int(starts)) + 0.5) / int(starts)
    starts = np.asarray(starts, dtype=float)
    tmap, e_out, e_in = confocalize(outer, inner)
    mu = (e_in.a2 - e_out.a2) * (e_in.a2 + e_out.a2)
    direct, conf = [], []
    for t0 in starts:
        ts = tangent_map_orbit(outer, inner, float(t0), n)[:n]
        pts = np.array([outer.point(t) for t in ts])
        direct.append(polygon_area(pts) / polygon_area(_outer_tangent_polygon(outer, pts)))
        img = tmap.apply(pts[:1])[0]
        o = caustic_orbit(e_out, mu, e_out.param_of(img), n)
        if o.k != k:
            raise DegeneracyError(f"confocalized orbit winds {o.k} times, expected {k}")
        conf.append(area_ratio_of(o))
    return AreaRatioSweep(starts, np.array(direct), np.array(conf), e_out, e_in)


def _match_cyclic(src: np.ndarray, dst: np.ndarray) -> tuple:
    """Best cyclic shift ``s`` (minimal total distance, ties to the smaller
    shift) matching ``src[i]`` to ``dst[i+s]``; returns ``(shift, max dist)``."""
    n = len(src)
    best = None
    for s in range(n):
        d = np.linalg.norm(src - np.roll(dst, -s, axis=0), axis=1)
        if best is None or d.sum() < best[0] - 1e-15:
            best = (d.sum(), s, float(d.max()))
    return best[1], best[2]


def caustic_tangency_points(o: Orbit, caustic: Ellipse) -> np.ndarray:
    """Where each side touches the caustic: ``(c1**2 n1, c2**2 n2) / d``."""
    out = []
    for line in side_lines(o):
        (n1, n2), d = line.n, line.d
        if d == 0:
            raise DegeneracyError("side through the centre has no tangency point")
        out.append((caustic.a1**2 * n1 / d, caustic.a2**2 * n2 / d))
    return np.array(out)


def grid_affine_map_check(o: Orbit, tol: float = 1e-6) -> float:
    """Check the axis scaling with reflection taking the caustic to the table.

    ``Lambda = diag(-a1/c1, -a2/c2)`` sends the caustic tangency points to
    the orbit vertices and the orbit vertices to the tangent-polygon
    vertices, each up to a cyclic relabelling. Returns the larger of the two
    maximal vertex mismatches.
    """
    if o.n % 2 == 0:
        raise DomainError("affine grid map is checked for odd n only")
    c = confocal_ellipse(o.e, o.mu)
    lam = np.array([-o.e.a1 / c.a1, -o.e.a2 / c.a2])
    tang = caustic_tangency_points(o, c) * lam
    verts = o.points
    q = tangent_polygon(o)
    _, d1 = _match_cyclic(tang, verts)
    _, d2 = _match_cyclic(verts * lam, q)
    worst = max(d1, d2)
    if worst > tol:
        raise MismatchError(f"no cyclic shift matches the mapped vertices (mismatch {worst:.3g})")
    return worst
