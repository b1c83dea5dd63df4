"""Concentric conic geometry.

Ellipses are centred at the origin. An axis-aligned ellipse with semi-axes
``a1 >= a2`` has form matrix ``A = diag(1/a1**2, 1/a2**2)`` and the confocal
family ``x**2/(a1**2 + mu) + y**2/(a2**2 + mu) = 1``, with ``mu = 0`` the
ellipse itself. General concentric conics are ``<x, M x> = 1`` for a
symmetric positive-definite ``M``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegeneracyError, DomainError, FitError

FORM_TOL = 1e-10


@dataclass(frozen=True)
class Ellipse:
    a1: float
    a2: float

    def __post_init__(self):
        if not (self.a2 > 0 and self.a1 >= self.a2):
            raise DomainError(f"need a1 >= a2 > 0, got a1={self.a1}, a2={self.a2}")
        if not (math.isfinite(self.a1) and math.isfinite(self.a2)):
            raise DomainError("semi-axes must be finite")

    @property
    def form(self) -> np.ndarray:
        return np.diag([1.0 / self.a1**2, 1.0 / self.a2**2])

    @property
    def is_circle(self) -> bool:
        return self.a1 == self.a2

    @property
    def focal_sq(self) -> float:
        """Squared half focal distance ``a1**2 - a2**2``."""
        return self.a1**2 - self.a2**2

    def value(self, x) -> float:
        """Form value ``<x, A x>``; equals 1 on the ellipse."""
        return (x[0] / self.a1) ** 2 + (x[1] / self.a2) ** 2

    def param_of(self, x) -> float:
        """Boundary parameter of a point on (or near) the ellipse."""
        return math.atan2(x[1] / self.a2, x[0] / self.a1)


@dataclass(frozen=True)
class Line:
    """The line ``{x : <n, x> = d}`` with unit normal ``n``.

    Stored in canonical orientation: ``d >= 0``, and when ``d == 0`` the
    first nonzero normal component is positive.
    """

    n: tuple
    d: float

    def __post_init__(self):
        n1, n2 = float(self.n[0]), float(self.n[1])
        norm = math.hypot(n1, n2)
        if norm == 0 or not math.isfinite(norm):
            raise DomainError("line normal must be nonzero")
        n1, n2, d = n1 / norm, n2 / norm, float(self.d) / norm
        if d < 0 or (d == 0 and (n1 < 0 or (n1 == 0 and n2 < 0))):
            n1, n2, d = -n1, -n2, -d
        object.__setattr__(self, "n", (n1, n2))
        object.__setattr__(self, "d", d)

    @classmethod
    def through(cls, p, q) -> "Line":
        """Line through two distinct points."""
        tx, ty = q[0] - p[0], q[1] - p[1]
        length = math.hypot(tx, ty)
        if length == 0:
            raise DegeneracyError("line through coincident points")
        n1, n2 = -ty / length, tx / length
        return cls((n1, n2), n1 * p[0] + n2 * p[1])

    @classmethod
    def from_point_direction(cls, p, u) -> "Line":
        norm = math.hypot(u[0], u[1])
        n1, n2 = -u[1] / norm, u[0] / norm
        return cls((n1, n2), n1 * p[0] + n2 * p[1])

    def intersect(self, other: "Line") -> np.ndarray:
        (a, b), (c, d) = self.n, other.n
        det = a * d - b * c
        if abs(det) < 1e-14:
            raise DegeneracyError("parallel lines do not intersect")
        return np.array([(self.d * d - b * other.d) / det, (a * other.d - self.d * c) / det])


@dataclass(frozen=True)
class ConcentricConic:
    """Centred conic ``<x, M x> = 1`` with ``M = [[m11, m12], [m12, m22]]``."""

    m11: float
    m12: float
    m22: float

    def __post_init__(self):
        if not (self.m11 > 0 and self.m11 * self.m22 - self.m12**2 > 0):
            raise DomainError("conic form must be positive definite")

    @classmethod
    def from_matrix(cls, m) -> "ConcentricConic":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))

    @classmethod
    def from_ellipse(cls, e: Ellipse) -> "ConcentricConic":
        return cls(1.0 / e.a1**2, 0.0, 1.0 / e.a2**2)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m12, self.m22]])

    def value(self, x) -> float:
        return self.m11 * x[0] ** 2 + 2 * self.m12 * x[0] * x[1] + self.m22 * x[1] ** 2

    def scaled(self, s: float) -> "ConcentricConic":
        """The conic blown up by the linear factor ``s``."""
        return ConcentricConic(self.m11 / s**2, self.m12 / s**2, self.m22 / s**2)

    @property
    def sqrt_inv(self) -> np.ndarray:
        """Symmetric ``M**(-1/2)``: maps the unit circle onto the conic."""
        w, v = np.linalg.eigh(self.matrix)
        return (v / np.sqrt(w)) @ v.T

    def point(self, t: float) -> np.ndarray:
        return self.sqrt_inv @ np.array([math.cos(t), math.sin(t)])

    def semi_axes(self) -> tuple:
        w = np.linalg.eigvalsh(self.matrix)
        return float(1 / math.sqrt(w[0])), float(1 / math.sqrt(w[1]))


@dataclass(frozen=True)
class AffineMap:
    """Linear map of the plane (the origin stays fixed)."""

    l11: float
    l12: float
    l21: float
    l22: float

    def __post_init__(self):
        if self.det == 0:
            raise DomainError("affine map must be invertible")

    @classmethod
    def from_matrix(cls, m) -> "AffineMap":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.l11, self.l12], [self.l21, self.l22]])

    @property
    def det(self) -> float:
        return self.l11 * self.l22 - self.l12 * self.l21

    def apply(self, pts) -> np.ndarray:
        """Map a point or an ``(m, 2)`` array of points."""
        return np.asarray(pts, dtype=float) @ self.matrix.T

    def image_form(self, conic: ConcentricConic) -> np.ndarray:
        """Form matrix of the image conic, ``T^-T M T^-1``."""
        tinv = np.linalg.inv(self.matrix)
        return tinv.T @ conic.matrix @ tinv


def point_on(e: Ellipse, t: float) -> np.ndarray:
    return np.array([e.a1 * math.cos(t), e.a2 * math.sin(t)])


def polar_dual_point(e: Ellipse, x, tol: float = FORM_TOL) -> np.ndarray:
    """Covector ``x* = A x`` of a point on the ellipse; ``<x, x*> = 1``."""
    if abs(e.value(x) - 1.0) > tol:
        raise DomainError(f"point {tuple(x)} is not on the ellipse (form value {e.value(x)!r})")
    return np.array([x[0] / e.a1**2, x[1] / e.a2**2])


def confocal_ellipse(e: Ellipse, mu: float) -> Ellipse:
    if mu <= -e.a2**2:
        raise DomainError(f"mu={mu!r} is on the hyperbola branch (mu <= -a2**2)")
    return Ellipse(math.sqrt(e.a1**2 + mu), math.sqrt(e.a2**2 + mu))


def confocal_from_minor(e: Ellipse, nu: float) -> Ellipse:
    """Confocal ellipse whose squared minor semi-axis is ``nu = a2**2 + mu``.

    Keeps full relative precision for caustics close to the focal segment,
    where ``mu`` itself is within rounding of ``-a2**2``.
    """
    if not nu > 0:
        raise DomainError(f"squared minor semi-axis must be positive, got {nu!r}")
    return Ellipse(math.sqrt(e.focal_sq + nu), math.sqrt(nu))


def confocal_param_of_point(e: Ellipse, x) -> tuple:
    """Confocal parameters ``(mu_e, mu_h)`` of the conics through ``x``.

    ``mu_e`` labels the confocal ellipse, ``mu_h`` the confocal hyperbola.
    For a circle table the family is concentric circles and ``mu_h`` is the
    degenerate root ``-a**2``.
    """
    px, py = float(x[0]), float(x[1])
    if px == 0 and py == 0:
        raise DegeneracyError("the origin has no confocal parameter")
    s1, s2 = e.a1**2, e.a2**2
    b = s1 + s2 - px * px - py * py
    c = s1 * s2 - px * px * s2 - py * py * s1
    # b**2 - 4c rewritten as a sum of squares; no cancellation
    disc = (s1 - s2 - px * px + py * py) ** 2 + 4 * px * px * py * py
    if not disc >= 0:
        raise DegeneracyError(f"complex confocal parameters at {tuple(x)}")
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0:
        raise DegeneracyError(f"degenerate confocal parameters at {tuple(x)}")
    r1, r2 = q, c / q
    return max(r1, r2), min(r1, r2)


def line_tangency_param(e: Ellipse, line: Line) -> float:
    """Confocal parameter of the family member the line is tangent to."""
    n1, n2 = line.n
    return line.d**2 - (e.a1**2 * n1**2 + e.a2**2 * n2**2)


def _sqrt_form(form):
    """Symmetric square root of a 2x2 SPD matrix and its inverse, in closed form."""
    c11, c12, c22 = float(form[0][0]), float(form[0][1]), float(form[1][1])
    det = c11 * c22 - c12 * c12
    if not (c11 > 0 and det > 0):
        raise DomainError("conic form must be positive definite")
    sd = math.sqrt(det)
    tau = math.sqrt(c11 + c22 + 2.0 * sd)
    s = ((c11 + sd) / tau, c12 / tau, (c22 + sd) / tau)
    r = math.sqrt(sd)  # det of the square root
    sinv = (s[2] / r, -s[1] / r, s[0] / r)
    return s, sinv


def tangent_directions(form, x, excess: float | None = None) -> tuple:
    """Unit directions of the two tangent lines from ``x`` to a centred conic.

    ``form`` is the conic's 2x2 form matrix and ``x`` must lie strictly
    outside. ``excess`` is ``<x, C x> - 1``; pass it when the caller can
    evaluate it without cancellation. The conic is mapped to the unit circle,
    the tangency points are found there algebraically, and each direction is
    the conic's own tangent vector at its tangency point, which keeps the
    result accurate for very thin conics.
    """
    (s11, s12, s22), (i11, i12, i22) = _sqrt_form(form)
    x0, x1 = float(x[0]), float(x[1])
    xi0, xi1 = s11 * x0 + s12 * x1, s12 * x0 + s22 * x1
    r2 = xi0 * xi0 + xi1 * xi1
    if excess is None:
        excess = r2 - 1.0
    if not excess > 0:
        raise DegeneracyError("point is not outside the conic")
    w = math.sqrt(excess)
    dirs = []
    for sgn in (1.0, -1.0):
        tau0 = (xi0 - sgn * w * xi1) / r2
        tau1 = (xi1 + sgn * w * xi0) / r2
        # circle tangent (-tau1, tau0) at the tangency point, mapped back
        u0, u1 = -i11 * tau1 + i12 * tau0, -i12 * tau1 + i22 * tau0
        norm = math.hypot(u0, u1)
        dirs.append(np.array([u0 / norm, u1 / norm]))
    return dirs[0], dirs[1]


class TangentConicFit(NamedTuple):
    conic: ConcentricConic | None
    residual: float
    definite: bool
    w: np.ndarray
    # 3 for a unique fit; 2 when the lines only fix a one-parameter family
    # (e.g. a centrally symmetric 4-gon) and the minimum-norm member is returned
    rank: int = 3


def conic_from_tangent_lines(lines: Sequence[Line]) -> TangentConicFit:
    """Least-squares centred conic tangent to the given lines.

    Tangency of ``<n, x> = d`` to ``<x, M x> = 1`` reads ``<n, W n> = d**2``
    with ``W = M^-1``, which is linear in the entries of ``W``. If the fitted
    ``W`` is indefinite the result has ``conic=None`` and ``definite=False``.
    With only two independent constraints the minimum-norm solution is
    returned and ``rank`` says so; fewer than two is a fit error.
    """
    if len(lines) < 3:
        raise FitError("need at least 3 lines")
    rows = np.array([[l.n[0] ** 2, 2 * l.n[0] * l.n[1], l.n[1] ** 2] for l in lines])
    rhs = np.array([l.d**2 for l in lines])
    sol, _, rank, sv = np.linalg.lstsq(rows, rhs, rcond=1e-10)
    if rank < 2:
        raise FitError("tangent-line constraints are rank deficient")
    w = np.array([[sol[0], sol[1]], [sol[1], sol[2]]])
    residual = float(np.max(np.abs(rows @ sol - rhs)))
    definite = bool(w[0, 0] > 0 and np.linalg.det(w) > 0)
    conic = ConcentricConic.from_matrix(np.linalg.inv(w)) if definite else None
    return TangentConicFit(conic, residual, definite, w, int(rank))


def confocalize(outer: ConcentricConic, inner: ConcentricConic):
    """Linear map taking a nested concentric pair to a confocal axis-aligned pair.

    Inner goes to the unit circle, a rotation diagonalizes the image of
    outer, then an axis stretch with unit first factor makes the pair
    confocal. The result is finally rescaled to unit determinant, so an
    already confocal axis-aligned pair comes back unchanged.

    Returns ``(T, E_out, E_in)``.
    """
    m_in, m_out = inner.matrix, outer.matrix
    w, v = np.linalg.eigh(m_in)
    to_circle = (v * np.sqrt(w)) @ v.T
    from_circle = (v / np.sqrt(w)) @ v.T
    img_out = from_circle @ m_out @ from_circle
    g, r = np.linalg.eigh(img_out)
    if g[1] >= 1.0:
        raise DomainError("inner conic is not strictly inside outer conic")
    # first axis: the one that ends up major (larger eigenvalue = shorter axis)
    r = r[:, ::-1]
    g = g[::-1]
    for j in range(2):
        col = r[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            r[:, j] = -col
    if np.linalg.det(r) < 0:
        r[:, 1] = -r[:, 1]
    big_sq = 1.0 / g  # squared semi-axes of the rotated outer image
    if abs(big_sq[1] - 1.0) < 1e-14:
        raise DegeneracyError("outer image has a unit axis; no confocal stretch")
    s2 = math.sqrt((big_sq[0] - 1.0) / (big_sq[1] - 1.0))
    stretch = np.diag([1.0, s2])
    t = stretch @ r.T @ to_circle
    t /= math.sqrt(abs(np.linalg.det(t)))
    tmap = AffineMap.from_matrix(t)
    scale = math.sqrt(abs(np.linalg.det(stretch @ r.T @ to_circle)))
    out_axes = np.sqrt(big_sq) * np.array([1.0, s2]) / scale
    in_axes = np.array([1.0, s2]) / scale
    return tmap, Ellipse(float(out_axes[0]), float(out_axes[1])), Ellipse(float(in_axes[0]), float(in_axes[1]))
