import json
import math

import numpy as np
import pytest

from poncelet_lab import report
from poncelet_lab.billiard import PhasePoint, caustic_orbit, orbit
from poncelet_lab.conics import Ellipse
from poncelet_lab.grid import grid_layer
from poncelet_lab.poncelet import FamilySweep, family_sweep, find_periodic_caustic

E21 = Ellipse(2.0, 1.0)
CIRCLE = Ellipse(1.0, 1.0)
TOLS = {"tol_closure": 1e-11, "tol_spread": 1e-8}


@pytest.fixture(scope="module")
def sweep5():
    return family_sweep(find_periodic_caustic(E21, 5, 1), 64)


def test_csv_empty_sweep(tmp_path):
    pc = find_periodic_caustic(CIRCLE, 3, 1)
    path = tmp_path / "empty.csv"
    report.write_csv(FamilySweep(pc, [], [], {}), path, TOLS)
    meta, rows = report.read_csv(path)
    assert rows == []
    assert meta["samples"] == 0 and meta["schema"] == report.SCHEMA
    assert meta["tol_spread"] == 1e-8
    text = path.read_text()
    assert text.splitlines()[-1] == "t0,invariant,value"


def test_csv_circle(tmp_path):
    sw = family_sweep(find_periodic_caustic(CIRCLE, 3, 1), 2)
    path = tmp_path / "c.csv"
    report.write_csv(sw, path)
    meta, rows = report.read_csv(path)
    assert len(rows) == 2 * len(sw.reports[0].scalars())
    ls = [v for _, name, v in rows if name == "L"]
    assert ls == pytest.approx([3 * math.sqrt(3)] * 2, abs=1e-12)
    assert meta["mu_star"] == sw.caustic.mu_star


def test_csv_round_trip_bit_exact(tmp_path, sweep5):
    path = tmp_path / "s.csv"
    report.write_csv(sweep5, path, TOLS)
    meta, rows = report.read_csv(path)
    assert rows == report.sweep_rows(sweep5)
    assert report.spreads_from_rows(rows) == sweep5.spreads
    assert meta["nu_star"] == sweep5.caustic.nu_star
    assert meta["samples"] == 64


def test_json_orbit_round_trip(tmp_path):
    two = orbit(E21, PhasePoint(math.pi / 2, (0.0, -1.0)), 2)
    path = tmp_path / "o.json"
    report.write_json(two, path)
    back = report.read_json(path)
    for attr in ("vertices", "points", "dirs", "side_mu", "j_values"):
        assert np.array_equal(getattr(back, attr), getattr(two, attr))
    assert (back.mu, back.J, back.n, back.k, back.closure_defect) == (two.mu, two.J, two.n, two.k, two.closure_defect)
    doc = json.loads(path.read_text())
    assert doc["schema"] == "poncelet-lab/1"
    for key in ("vertices", "dirs", "mu", "J", "closure_defect"):
        assert key in doc


def test_json_sweep_round_trip(tmp_path, sweep5):
    path = tmp_path / "s.json"
    report.write_json(sweep5, path, TOLS)
    back = report.read_json(path)
    assert back.spreads == sweep5.spreads
    recomputed = {name: report.spread(back.values(name)) for name in sweep5.spreads}
    assert recomputed == sweep5.spreads
    assert back.t0_grid == sweep5.t0_grid
    assert back.caustic.mu_star == sweep5.caustic.mu_star
    assert [r.beta_signs for r in back.reports] == [r.beta_signs for r in sweep5.reports]


def test_json_layer_round_trip(tmp_path):
    pc = find_periodic_caustic(E21, 6, 1)
    layer = grid_layer(caustic_orbit(E21, pc.caustic, 0.2, 6), 2)
    path = tmp_path / "l.json"
    report.write_json(layer, path)
    back = report.read_json(path)
    assert len(back.polygons) == len(layer.polygons) == 2
    assert np.array_equal(back.points, layer.points)
    assert back.mu_mean == layer.mu_mean


def test_json_rejects_unknown(tmp_path):
    with pytest.raises(TypeError):
        report.to_dict(object())
    with pytest.raises(ValueError):
        report.from_dict({"schema": "other"})
    path = tmp_path / "bad.json"
    path.write_text("not json")
    with pytest.raises(ValueError):
        report.read_json(path)


def test_io_error_has_path(tmp_path):
    missing = tmp_path / "no" / "such" / "dir" / "x.csv"
    with pytest.raises(OSError, match="x.csv"):
        report.read_csv(missing)
    with pytest.raises(OSError, match="x.csv"):
        report.write_json(orbit(E21, PhasePoint(math.pi / 2, (0.0, -1.0)), 2), missing)


def test_svg_circle_elements():
    pc = find_periodic_caustic(CIRCLE, 3, 1)
    o = caustic_orbit(CIRCLE, pc.caustic, 0.0, 3)
    svg = report.svg_string(report.orbit_scene(o, pc.caustic))
    assert svg.count("<ellipse") == 2
    assert svg.count("<polyline") == 1
    assert 'width="800" height="600"' in svg


def test_svg_tangent_polygon_elements():
    pc = find_periodic_caustic(E21, 5, 1)
    o = caustic_orbit(E21, pc.caustic, 0.0, 5)
    svg = report.svg_string(report.orbit_scene(o, pc.caustic, tangent=True, angle_labels=True))
    assert svg.count("<ellipse") == 3
    assert svg.count("<polyline") == 2
    assert svg.count("<text") == 5


def test_svg_grid_layer_13(tmp_path):
    pc = find_periodic_caustic(E21, 13, 1)
    o = caustic_orbit(E21, pc.caustic, 0.0, 13)
    layer = grid_layer(o, 5)
    svg = report.svg_string(report.layer_scene(o, layer, pc.caustic))
    polylines = [line for line in svg.splitlines() if line.startswith("<polyline")]
    assert len(polylines) == 2
    # closed 13-vertex polylines repeat the first point
    assert all(line.split('"')[1].count(",") == 14 for line in polylines)
    assert svg.count("<circle") == 13


def test_svg_deterministic(tmp_path):
    pc = find_periodic_caustic(E21, 7, 2)
    scene = lambda: report.orbit_scene(caustic_orbit(E21, pc.caustic, 0.4, 7), pc.caustic, tangent=True)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    report.render_svg(scene(), a)
    report.render_svg(scene(), b)
    assert a.read_bytes() == b.read_bytes()
