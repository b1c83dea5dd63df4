"""CSV/JSON serialization and deterministic SVG figures.

Floats are always written with ``repr`` (shortest round-trip decimal), so
every value read back is bit-identical to the one written. JSON documents
carry ``"schema": "poncelet-lab/1"`` and a ``"type"`` of ``orbit``,
``sweep`` or ``layer``; the layouts are documented in the README.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .billiard import Orbit
from .conics import ConcentricConic, Ellipse
from .grid import GridLayer
from .poncelet import FamilySweep, PeriodicCaustic, spread

SCHEMA = "poncelet-lab/1"
CSV_HEADER = ("t0", "invariant", "value")


def _write_text(path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as ex:
        raise OSError(f"cannot write {path}: {ex.strerror or ex}") from ex


def _read_text(path) -> str:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except OSError as ex:
        raise OSError(f"cannot read {path}: {ex.strerror or ex}") from ex


def _fmt(x) -> str:
    return repr(float(x))


# -- CSV ---------------------------------------------------------------------

def sweep_metadata(sweep: FamilySweep, tolerances: dict | None = None) -> dict:
    pc = sweep.caustic
    meta = {
        "schema": SCHEMA,
        "a1": pc.e.a1,
        "a2": pc.e.a2,
        "n": pc.n,
        "k": pc.k,
        "mu_star": pc.mu_star,
        "nu_star": pc.nu_star,
        "samples": len(sweep.reports),
    }
    for key, val in (tolerances or {}).items():
        meta[key] = val
    return meta


def sweep_rows(sweep: FamilySweep) -> list:
    """One ``(t0, name, value)`` row per sampled invariant."""
    rows = []
    for t0, rep in zip(sweep.t0_grid, sweep.reports):
        for name, val in rep.scalars().items():
            rows.append((t0, name, val))
    return rows


def write_csv(sweep: FamilySweep, path, tolerances: dict | None = None):
    buf = io.StringIO()
    for key, val in sweep_metadata(sweep, tolerances).items():
        buf.write(f"# {key}={_fmt(val) if isinstance(val, float) else val}\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_HEADER)
    for t0, name, val in sweep_rows(sweep):
        w.writerow((_fmt(t0), name, _fmt(val)))
    _write_text(path, buf.getvalue())


def _meta_value(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_csv(path) -> tuple:
    """Returns ``(metadata dict, [(t0, name, value), ...])``."""
    meta, body = {}, []
    for line in _read_text(path).splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = _meta_value(val)
        else:
            body.append(line)
    reader = csv.reader(body)
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {header}")
    rows = [(float(t0), name, float(val)) for t0, name, val in reader]
    return meta, rows


def spreads_from_rows(rows) -> dict:
    by_name = {}
    for _, name, val in rows:
        by_name.setdefault(name, []).append(val)
    return {name: spread(vals) for name, vals in by_name.items()}


# -- JSON --------------------------------------------------------------------

def orbit_to_dict(o: Orbit) -> dict:
    return {
        "schema": SCHEMA,
        "type": "orbit",
        "a1": o.e.a1,
        "a2": o.e.a2,
        "n": o.n,
        "k": o.k,
        "t": o.vertices.tolist(),
        "vertices": o.points.tolist(),
        "dirs": o.dirs.tolist(),
        "mu": o.mu,
        "J": o.J,
        "closure_defect": o.closure_defect,
        "side_mu": o.side_mu.tolist(),
        "j_values": o.j_values.tolist(),
    }


def orbit_from_dict(d: dict) -> Orbit:
    return Orbit(
        Ellipse(d["a1"], d["a2"]),
        np.array(d["t"], dtype=float),
        np.array(d["vertices"], dtype=float).reshape(-1, 2),
        np.array(d["dirs"], dtype=float).reshape(-1, 2),
        d["mu"], d["n"], d["k"], d["closure_defect"],
        np.array(d["side_mu"], dtype=float),
        np.array(d["j_values"], dtype=float),
    )


@dataclass
class ScalarRecord:
    """A deserialized invariant report: the scalar map plus the sign profile."""

    values: dict
    beta_signs: list = field(default_factory=list)

    def scalars(self) -> dict:
        return dict(self.values)


def sweep_to_dict(sweep: FamilySweep, tolerances: dict | None = None) -> dict:
    meta = sweep_metadata(sweep, tolerances)
    meta.pop("schema")
    return {
        "schema": SCHEMA,
        "type": "sweep",
        "meta": meta,
        "caustic": {"residual": sweep.caustic.residual, "porism_defect": sweep.caustic.porism_defect},
        "t0": list(sweep.t0_grid),
        "reports": [{"scalars": r.scalars(), "beta_signs": list(r.beta_signs)} for r in sweep.reports],
        "spreads": dict(sweep.spreads),
    }


def sweep_from_dict(d: dict) -> FamilySweep:
    m = d["meta"]
    pc = PeriodicCaustic(Ellipse(m["a1"], m["a2"]), m["n"], m["k"], m["mu_star"],
                         d["caustic"]["residual"], d["caustic"]["porism_defect"], m["nu_star"])
    reports = [ScalarRecord(r["scalars"], r["beta_signs"]) for r in d["reports"]]
    return FamilySweep(pc, list(d["t0"]), reports, dict(d["spreads"]))


def layer_to_dict(layer: GridLayer) -> dict:
    return {
        "schema": SCHEMA,
        "type": "layer",
        "a1": layer.e.a1 if layer.e else None,
        "a2": layer.e.a2 if layer.e else None,
        "k": layer.k,
        "points": layer.points.tolist(),
        "mu_values": layer.mu_values.tolist(),
        "mu_mean": layer.mu_mean,
        "mu_max_dev": layer.mu_max_dev,
        "chains": [list(map(int, c)) for c in layer.chains],
    }


def layer_from_dict(d: dict) -> GridLayer:
    pts = np.array(d["points"], dtype=float).reshape(-1, 2)
    chains = [list(c) for c in d["chains"]]
    e = Ellipse(d["a1"], d["a2"]) if d.get("a1") is not None else None
    return GridLayer(d["k"], pts, np.array(d["mu_values"], dtype=float), d["mu_mean"], d["mu_max_dev"],
                     [pts[c] for c in chains], chains, e)


def to_dict(obj, tolerances: dict | None = None) -> dict:
    if isinstance(obj, Orbit):
        return orbit_to_dict(obj)
    if isinstance(obj, FamilySweep):
        return sweep_to_dict(obj, tolerances)
    if isinstance(obj, GridLayer):
        return layer_to_dict(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, tolerances: dict | None = None) -> str:
    return json.dumps(to_dict(obj, tolerances), indent=1, allow_nan=False)


def write_json(obj, path, tolerances: dict | None = None):
    _write_text(path, dumps(obj, tolerances) + "\n")


def from_dict(d: dict):
    if d.get("schema") != SCHEMA:
        raise ValueError(f"unsupported schema {d.get('schema')!r}")
    kind = d.get("type")
    if kind == "orbit":
        return orbit_from_dict(d)
    if kind == "sweep":
        return sweep_from_dict(d)
    if kind == "layer":
        return layer_from_dict(d)
    raise ValueError(f"unknown document type {kind!r}")


def read_json(path):
    try:
        return from_dict(json.loads(_read_text(path)))
    except json.JSONDecodeError as ex:
        raise ValueError(f"{path}: not a JSON document ({ex})") from ex


# -- SVG ---------------------------------------------------------------------

WIDTH, HEIGHT = 800, 600
MARGIN = 0.10

STYLE = {
    "table": 'fill="none" stroke="#000000" stroke-width="2"',
    "caustic": 'fill="none" stroke="#1f77b4" stroke-width="1.5" stroke-dasharray="6 4"',
    "conic": 'fill="none" stroke="#7f7f7f" stroke-width="1"',
    "polygon": 'fill="none" stroke="#d62728" stroke-width="1.5"',
    "tangent": 'fill="none" stroke="#2ca02c" stroke-width="1.5"',
    "grid": 'fill="none" stroke="#9467bd" stroke-width="1"',
    "marker": 'fill="#9467bd" stroke="none"',
}


def _num(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


@dataclass
class Scene:
    """What to draw. ``conics`` entries are ``(conic, role)`` and
    ``polylines`` entries ``(points, role)``; polylines are drawn closed."""

    conics: list = field(default_factory=list)
    polylines: list = field(default_factory=list)
    markers: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    title: str = ""


def _as_conic(c) -> ConcentricConic:
    return ConcentricConic.from_ellipse(c) if isinstance(c, Ellipse) else c


def _conic_geometry(c: ConcentricConic) -> tuple:
    """``(rx, ry, angle in degrees)`` of a centred conic."""
    w, v = np.linalg.eigh(c.matrix)
    # first eigenvector belongs to the smaller eigenvalue: the longer axis
    ang = math.degrees(math.atan2(v[1, 0], v[0, 0]))
    ang = (ang + 90.0) % 180.0 - 90.0
    return 1 / math.sqrt(w[0]), 1 / math.sqrt(w[1]), ang


def _bbox(scene: Scene) -> tuple:
    xs, ys = [], []
    for c, _ in scene.conics:
        m = np.linalg.inv(_as_conic(c).matrix)
        hx, hy = math.sqrt(m[0, 0]), math.sqrt(m[1, 1])
        xs += [-hx, hx]
        ys += [-hy, hy]
    for pts, _ in scene.polylines:
        p = np.asarray(pts)
        xs += list(p[:, 0])
        ys += list(p[:, 1])
    for p in scene.markers:
        xs.append(p[0])
        ys.append(p[1])
    if not xs:
        return -1.0, -1.0, 1.0, 1.0
    return min(xs), min(ys), max(xs), max(ys)


def svg_string(scene: Scene) -> str:
    x0, y0, x1, y1 = _bbox(scene)
    w, h = x1 - x0, y1 - y0
    mx, my = MARGIN * w, MARGIN * h
    vb = (x0 - mx, -(y1 + my), w + 2 * mx, h + 2 * my)
    scale = max(vb[2], vb[3])
    r = 0.006 * scale
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="{" ".join(_num(v) for v in vb)}">',
    ]
    if scene.title:
        out.append(f"<title>{scene.title}</title>")
    # y axis points up in the scene
    out.append('<g transform="scale(1,-1)">')
    for c, role in scene.conics:
        rx, ry, ang = _conic_geometry(_as_conic(c))
        rot = f' transform="rotate({_num(ang)})"' if _num(ang) != "0" else ""
        out.append(f'<ellipse cx="0" cy="0" rx="{_num(rx)}" ry="{_num(ry)}"{rot} '
                   f'{STYLE.get(role, STYLE["conic"])} vector-effect="non-scaling-stroke"/>')
    for pts, role in scene.polylines:
        p = np.asarray(pts)
        p = np.vstack([p, p[:1]])
        coords = " ".join(f"{_num(x)},{_num(y)}" for x, y in p)
        out.append(f'<polyline points="{coords}" {STYLE.get(role, STYLE["polygon"])} '
                   'vector-effect="non-scaling-stroke"/>')
    for x, y in scene.markers:
        out.append(f'<circle cx="{_num(x)}" cy="{_num(y)}" r="{_num(r)}" {STYLE["marker"]}/>')
    out.append("</g>")
    for (x, y), text in scene.labels:
        out.append(f'<text x="{_num(x)}" y="{_num(-y)}" font-size="{_num(3 * r)}" '
                   f'font-family="sans-serif">{text}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(scene: Scene, path):
    _write_text(path, svg_string(scene))


def orbit_scene(o: Orbit, caustic: Ellipse | None = None, tangent: bool = False,
                angle_labels: bool = False) -> Scene:
    """Table, caustic and orbit; with ``tangent`` also the tangent polygon and
    the conic through its vertices."""
    from .conics import confocal_ellipse
    from .grid import tangent_polygon_conic
    from .invariants import tangent_polygon, vertex_angles

    c = caustic if caustic is not None else confocal_ellipse(o.e, o.mu)
    sc = Scene(conics=[(o.e, "table"), (c, "caustic")], polylines=[(o.points, "polygon")],
               title=f"{o.n}-periodic orbit, k={o.k}")
    if tangent:
        sc.polylines.append((tangent_polygon(o), "tangent"))
        sc.conics.append((tangent_polygon_conic(o.e, c), "conic"))
    if angle_labels:
        for p, a in zip(o.points, vertex_angles(o)):
            sc.labels.append(((p[0], p[1]), f"{a:.4f}"))
    return sc


def layer_scene(o: Orbit, layer: GridLayer, caustic: Ellipse | None = None) -> Scene:
    """Orbit, its grid polygons of one layer, and the grid points."""
    sc = orbit_scene(o, caustic)
    sc.conics.append((layer.ellipse, "conic"))
    for poly in layer.polygons:
        sc.polylines.append((poly, "grid"))
    sc.markers = [tuple(p) for p in layer.points]
    sc.title = f"grid layer k={layer.k} of a {o.n}-periodic orbit"
    return sc
