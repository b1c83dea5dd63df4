"""Per-orbit evaluation of the family invariants and the auxiliary polygons.

Index conventions (also used by the serialized reports):

- side ``i`` runs from ``p[i]`` to ``p[i+1]`` with unit direction ``u[i]``;
- ``alpha[i]`` is the angle at ``p[i]``, between sides ``i-1`` and ``i``;
- ``beta[i] = (alpha[i] + alpha[i+1]) / 2`` is the angle of the tangent
  polygon at ``Q[i]``, the meeting point of the table tangents at ``p[i]``
  and ``p[i+1]``;
- ``C_k`` windows start at ``alpha[i]``: ``sum_i cos(alpha[i] + .. + alpha[i+k-1])``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .billiard import Orbit
from .conics import ConcentricConic, Ellipse, Line, conic_from_tangent_lines
from .errors import DegeneracyError, DomainError, FitError

SIGN_DEADBAND = 1e-9


def _angle(a, b) -> np.ndarray:
    """Unsigned angle between row vectors, via atan2 (accurate near 0 and pi)."""
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = np.sum(a * b, axis=1)
    return np.arctan2(np.abs(cross), dot)


def vertex_angles(o: Orbit) -> np.ndarray:
    """``alpha[i] = pi - angle(u[i-1], u[i])``, in ``(0, pi)``."""
    u = o.dirs
    return math.pi - _angle(np.roll(u, 1, axis=0), u)


def perimeter(o: Orbit) -> float:
    p = o.points
    return float(np.sum(np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)))


def sum_cos_and_identity(o: Orbit) -> tuple:
    """``(sum cos alpha, J*L - n)``; equal for every closed orbit."""
    s = float(np.sum(np.cos(vertex_angles(o))))
    return s, o.J * perimeter(o) - o.n


def _tangent_line(e: Ellipse, p) -> Line:
    return Line((p[0] / e.a1**2, p[1] / e.a2**2), 1.0)


def tangent_polygon(o: Orbit) -> np.ndarray:
    """Vertices ``Q[i]``: table tangents at ``p[i]`` and ``p[i+1]`` intersected."""
    lines = [_tangent_line(o.e, p) for p in o.points]
    out = []
    for i in range(o.n):
        try:
            out.append(lines[i].intersect(lines[(i + 1) % o.n]))
        except DegeneracyError:
            raise DegeneracyError(f"tangents at vertices {i} and {(i + 1) % o.n} are parallel") from None
    return np.array(out)


def beta_angles(o: Orbit) -> np.ndarray:
    a = vertex_angles(o)
    return 0.5 * (a + np.roll(a, -1))


def beta_geometric(o: Orbit) -> np.ndarray:
    """Angle of the tangent polygon at ``Q[i]`` between the rays to ``p[i]``
    and ``p[i+1]``. Equals ``beta_angles`` for convex orbits."""
    q = tangent_polygon(o)
    p = o.points
    return _angle(p - q, np.roll(p, -1, axis=0) - q)


def prod_cos_beta(o: Orbit) -> float:
    return float(np.prod(np.cos(beta_angles(o))))


def c_k(o: Orbit, k: int) -> float:
    """Cyclic windowed cosine sum ``sum_i cos(alpha_i + .. + alpha_{i+k-1})``."""
    if not 1 <= k <= o.n:
        raise DomainError(f"window k={k} outside 1..{o.n}")
    a = vertex_angles(o)
    win = sum(np.roll(a, -j) for j in range(k))
    return float(np.sum(np.cos(win)))


@dataclass(eq=False)
class UPolygon:
    """Side directions ``u[i]`` of an orbit as points of the unit circle, with
    the centred conic ``xi`` inscribed in the polygon ``u[0] u[1] ..``."""

    points: np.ndarray
    xi_fit: ConcentricConic
    fit_residual: float
    # True when xi comes from the closed form instead of the fit
    closed_form: bool = False

    @property
    def n(self) -> int:
        return len(self.points)


def xi_closed_form(o: Orbit) -> ConcentricConic:
    """Inscribed conic of the u-polygon in closed form.

    The chord ``u[i-1] u[i]`` is normal to the table tangent at ``p[i]`` at
    distance ``sqrt(1 - J**2 / |A p|**2)`` from the origin; the conic touching
    all such lines is ``diag(1 - J**2 a2**2, 1 - J**2 a1**2)`` in dual form,
    i.e. semi-axes ``(c1/a1, c2/a2)`` for the caustic ``(c1, c2)``.
    """
    j2 = o.J**2
    w1, w2 = 1.0 - j2 * o.e.a2**2, 1.0 - j2 * o.e.a1**2
    if not (w1 > 0 and w2 > 0):
        raise DegeneracyError("Joachimsthal value too large for an elliptic caustic")
    return ConcentricConic(1.0 / w1, 0.0, 1.0 / w2)


def _tangency_residual(conic: ConcentricConic, lines) -> float:
    w = np.linalg.inv(conic.matrix)
    return max(abs(np.array(l.n) @ w @ np.array(l.n) - l.d**2) for l in lines)


def u_polygon(o: Orbit) -> UPolygon:
    """The u-polygon with its inscribed conic fitted from its side lines.

    Centrally symmetric 4-gons give only two independent tangency
    conditions for three unknowns; there the closed form is used and its
    tangency residual is recorded instead.
    """
    u = np.array(o.dirs)
    if o.n < 3:
        raise DomainError("u-polygon needs at least 3 distinct directions")
    lines = [Line.through(u[i], u[(i + 1) % o.n]) for i in range(o.n)]
    fit = conic_from_tangent_lines(lines)
    if fit.rank < 3:
        xi = xi_closed_form(o)
        return UPolygon(u, xi, _tangency_residual(xi, lines), True)
    if not fit.definite:
        raise FitError(f"fitted inscribed conic is not an ellipse (residual {fit.residual:.3g})")
    return UPolygon(u, fit.conic, fit.residual)


def central_angles(up: UPolygon, k: int = 1) -> np.ndarray:
    """``angle(u[i], u[i+k])`` via a clamped arccos, as an independent route."""
    u = up.points
    dots = np.clip(np.sum(u * np.roll(u, -k, axis=0), axis=1), -1.0, 1.0)
    return np.arccos(dots)


def sum_cos_central(up: UPolygon, k: int) -> float:
    if not 1 <= k <= up.n - 1:
        raise DomainError(f"k={k} outside 1..{up.n - 1}")
    u = up.points
    return float(np.sum(u * np.roll(u, -k, axis=0)))


def sum_sq_diagonals(up: UPolygon, k: int) -> float:
    if not 1 <= k <= up.n - 1:
        raise DomainError(f"k={k} outside 1..{up.n - 1}")
    u = up.points
    return float(np.sum((np.roll(u, -k, axis=0) - u) ** 2))


def prod_sin_half(o: Orbit) -> float:
    if o.n % 2 == 0:
        raise DomainError("product of half-angle sines is an invariant for odd n only")
    return float(np.prod(np.sin(vertex_angles(o) / 2)))


def half_sine_check(o: Orbit) -> tuple:
    """``(prod cos beta', prod sin(alpha/2))`` for odd ``n``.

    ``beta'[i]`` is half the sum of all angles but ``alpha[i]``, the angle of
    the tangent polygon of the grid layer with step ``(n-1)/2``. The two
    products agree up to a global sign.
    """
    a = vertex_angles(o)
    if o.n % 2 == 0:
        raise DomainError("half-sine identity needs odd n")
    beta_p = 0.5 * (np.sum(a) - a)
    return float(np.prod(np.cos(beta_p))), float(np.prod(np.sin(a / 2)))


def beta_sign_profile(o: Orbit, deadband: float = SIGN_DEADBAND) -> list:
    d = beta_angles(o) - math.pi / 2
    return [0 if abs(x) < deadband else int(np.sign(x)) for x in d]


def dual_polygon(up: UPolygon) -> tuple:
    """Pole polygon ``v[i]`` of the chords ``u[i] u[i+1]`` w.r.t. the unit circle.

    Returns ``(V, sum cos(interior angles of V), prod cos angle(v[i], v[i+1]))``.
    """
    u = up.points
    nxt = np.roll(u, -1, axis=0)
    den = 1.0 + np.sum(u * nxt, axis=1)
    if np.min(np.abs(den)) < 1e-12:
        i = int(np.argmin(np.abs(den)))
        raise DegeneracyError(f"directions {i} and {(i + 1) % len(u)} are antipodal: pole at infinity")
    v = (u + nxt) / den[:, None]
    prv, fwd = np.roll(v, 1, axis=0) - v, np.roll(v, -1, axis=0) - v
    cos_int = np.sum(prv * fwd, axis=1) / (np.linalg.norm(prv, axis=1) * np.linalg.norm(fwd, axis=1))
    vn = v / np.linalg.norm(v, axis=1)[:, None]
    cos_c = np.sum(vn * np.roll(vn, -1, axis=0), axis=1)
    return v, float(np.sum(cos_int)), float(np.prod(cos_c))


def polygon_area(points) -> float:
    """Signed shoelace area."""
    p = np.asarray(points, dtype=float)
    if len(p) < 3:
        raise DomainError("area needs at least 3 points")
    q = np.roll(p, -1, axis=0)
    return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]))


def area_ratio_of(o: Orbit) -> float:
    """Signed area of the orbit over signed area of its tangent polygon."""
    return polygon_area(o.points) / polygon_area(tangent_polygon(o))


@dataclass(eq=False)
class InvariantReport:
    n: int
    k: int
    L: float
    J: float
    sum_cos_alpha: float
    JL_minus_n: float
    prod_cos_beta: float
    c_k: list
    sum_cos_central_k: list
    sum_sq_diag_k: list
    beta_signs: list
    dual_sum_cos: float
    dual_prod_cos: float
    prod_sin_half: float | None = None
    area_ratio: float | None = None
    alphas: np.ndarray = field(default=None, repr=False)

    def scalars(self) -> dict:
        """Flat name -> value map of every invariant that should be constant
        across a family (sign profile excluded)."""
        out = {
            "L": self.L,
            "J": self.J,
            "sum_cos_alpha": self.sum_cos_alpha,
            "JL_minus_n": self.JL_minus_n,
            "prod_cos_beta": self.prod_cos_beta,
        }
        for j, v in enumerate(self.c_k, 1):
            out[f"c_{j}"] = v
        for j, v in enumerate(self.sum_cos_central_k, 1):
            out[f"sum_cos_central_{j}"] = v
        for j, v in enumerate(self.sum_sq_diag_k, 1):
            out[f"sum_sq_diag_{j}"] = v
        if self.prod_sin_half is not None:
            out["prod_sin_half"] = self.prod_sin_half
        if self.area_ratio is not None:
            out["area_ratio"] = self.area_ratio
        out["dual_sum_cos"] = self.dual_sum_cos
        out["dual_prod_cos"] = self.dual_prod_cos
        return out


def invariant_report(o: Orbit) -> InvariantReport:
    if o.n < 3:
        raise DomainError("invariant report needs n >= 3")
    n = o.n
    s, jl = sum_cos_and_identity(o)
    up = u_polygon(o)
    _, dsum, dprod = dual_polygon(up)
    odd = n % 2 == 1
    return InvariantReport(
        n=n,
        k=o.k,
        L=perimeter(o),
        J=o.J,
        sum_cos_alpha=s,
        JL_minus_n=jl,
        prod_cos_beta=prod_cos_beta(o),
        c_k=[c_k(o, j) for j in range(1, n)],
        sum_cos_central_k=[sum_cos_central(up, j) for j in range(1, n)],
        sum_sq_diag_k=[sum_sq_diagonals(up, j) for j in range(1, n)],
        beta_signs=beta_sign_profile(o),
        dual_sum_cos=dsum,
        dual_prod_cos=dprod,
        prod_sin_half=prod_sin_half(o) if odd else None,
        area_ratio=area_ratio_of(o) if odd else None,
        alphas=vertex_angles(o),
    )
