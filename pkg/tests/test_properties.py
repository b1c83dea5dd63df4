"""Property-based checks of the structural invariants."""
import math

import numpy as np
from hypothesis import assume, given, settings, strategies as st

import oracles
from poncelet_lab import report
from poncelet_lab.billiard import PhasePoint, billiard_step, caustic_orbit, chord_next, joachimsthal, reflect
from poncelet_lab.conics import Ellipse, Line, confocal_param_of_point, line_tangency_param, point_on
from poncelet_lab.invariants import (polygon_area, sum_cos_and_identity, sum_cos_central, sum_sq_diagonals,
                                     u_polygon, vertex_angles)
from poncelet_lab.poncelet import find_periodic_caustic, spread_ok

TWO_PI = 2 * math.pi
angles = st.floats(0, TWO_PI, allow_nan=False)
tables = st.tuples(st.floats(0.5, 3.0), st.floats(0.5, 1.0)).map(lambda p: Ellipse(p[0], p[0] * p[1]))
# (n, k) pairs with a primitive rotation number, n <= 9
NK = [(n, k) for n in range(3, 10) for k in range(1, (n + 1) // 2) if math.gcd(n, k) == 1]


def inward_phase(e, t, offset):
    x = point_on(e, t)
    nrm = e.form @ x
    ang = math.atan2(-nrm[1], -nrm[0]) + offset
    return PhasePoint(t, (math.cos(ang), math.sin(ang)))


@settings(max_examples=60, deadline=None)
@given(tables, angles, st.floats(-1.5, 1.5))
def test_joachimsthal_conserved(e, t, offset):
    pp = inward_phase(e, t, offset)
    j0 = joachimsthal(e, pp)
    for _ in range(50):
        pp = billiard_step(e, pp)
    assert abs(joachimsthal(e, pp) - j0) < 1e-11 * max(1.0, abs(j0))


@settings(max_examples=100, deadline=None)
@given(tables, angles, st.floats(-1.5, 1.5))
def test_chord_lands_on_table_and_reflection_is_unit(e, t, offset):
    pp = inward_phase(e, t, offset)
    y = chord_next(e, point_on(e, pp.t), pp.u)
    assert abs(e.value(y) - 1) < 1e-12
    v = reflect(e, y, pp.u)
    assert abs(np.linalg.norm(v) - 1) < 1e-14
    assert np.allclose(reflect(e, y, -v), -np.asarray(pp.u), atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(tables, st.floats(-0.999, -0.001), angles)
def test_tangent_line_matches_discriminant(e, frac, phi):
    mu = frac * e.a2**2
    n = (math.cos(phi), math.sin(phi))
    d = math.sqrt(e.a1**2 * n[0] ** 2 + e.a2**2 * n[1] ** 2 + mu)
    line = Line(n, d)
    assert abs(line_tangency_param(e, line) - mu) < 1e-12 * max(1.0, e.a1**2)
    delta, scale = oracles.tangency_discriminant(e.a1, e.a2, mu, n, d)
    assert abs(delta) < 1e-10 * scale


@settings(max_examples=100, deadline=None)
@given(tables, st.floats(-4, 4), st.floats(-4, 4))
def test_confocal_roots(e, x, y):
    assume(x * x + y * y > 1e-12)
    hi, lo = confocal_param_of_point(e, (x, y))
    rhi, rlo = oracles.confocal_roots(e.a1, e.a2, x, y)
    sc = e.a1**2 + x * x + y * y
    assert abs(hi - rhi) < 1e-9 * sc and abs(lo - rlo) < 1e-9 * sc


@settings(max_examples=25, deadline=None)
@given(tables, st.sampled_from(NK), st.lists(angles, min_size=4, max_size=4))
def test_family_porism_and_identity(e, nk, starts):
    n, k = nk
    pc = find_periodic_caustic(e, n, k)
    ls = []
    for t0 in starts:
        o = caustic_orbit(e, pc.caustic, t0, n)
        assert o.closure_defect < 1e-9 and o.k == k
        s, jl = sum_cos_and_identity(o)
        assert abs(s - jl) < 1e-10
        # the angles add up to the total turning (n - 2k) pi
        assert abs(np.sum(vertex_angles(o)) - (n - 2 * k) * math.pi) < 1e-9
        ls.append(float(np.sum(np.linalg.norm(np.roll(o.points, -1, 0) - o.points, axis=1))))
        up = u_polygon(o)
        for j in range(1, n):
            assert abs(sum_sq_diagonals(up, j) - (2 * n - 2 * sum_cos_central(up, j))) < 1e-12
    assert spread_ok(ls, 1e-8)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=3, max_size=12))
def test_area_reversal(pts):
    a = polygon_area(pts)
    size = sum(abs(x) + abs(y) for x, y in pts) ** 2
    assert abs(polygon_area(pts[::-1]) + a) <= 1e-13 * size
    assert abs(a - oracles.shoelace(pts)) <= 1e-13 * size


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trip(x):
    assert float(report._fmt(x)) == x
