"""Command line entry point: ``poncelet-lab {orbit,family,grid,areas}``.

Every command prints one JSON document on stdout. Exit codes:
0 success, 2 no orbit, 3 convergence, 4 spread violation, 5 degeneracy,
6 domain error, 1 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import report
from .billiard import caustic_orbit
from .conics import ConcentricConic, Ellipse
from .errors import (ClosureError, ConvergenceError, DegeneracyError, DomainError, FitError,
                     NoOrbitError, TangencyError)
from .grid import area_ratio, area_ratio_general, grid_layer, grid_polygon_angles_check
from .invariants import perimeter
from .poncelet import (CLOSURE_TOL, PORISM_TOL, SPREAD_TOL, family_sweep, find_closing_scale,
                       find_periodic_caustic, spread, spread_ok)

log = logging.getLogger("poncelet_lab")

EXIT_OK, EXIT_IO, EXIT_NO_ORBIT, EXIT_CONVERGENCE, EXIT_SPREAD, EXIT_DEGENERACY, EXIT_DOMAIN = 0, 1, 2, 3, 4, 5, 6

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


@dataclass
class RunConfig:
    a1: float
    a2: float
    n: int
    k: int = 1
    samples: int = 64
    tol_closure: float = CLOSURE_TOL
    tol_spread: float = SPREAD_TOL
    seed: int | None = None
    csv: str | None = None
    json: str | None = None
    svg: str | None = None
    step: int | None = None
    inner_a1: float | None = None
    inner_a2: float | None = None
    t0: float = 0.0

    def validate(self):
        if not (self.a2 > 0 and self.a1 >= self.a2):
            raise DomainError(f"need a1 >= a2 > 0, got a1={self.a1}, a2={self.a2}")
        if self.samples < 2:
            raise DomainError("samples must be >= 2")
        if math.gcd(self.n, self.k) != 1:
            raise NoOrbitError(f"gcd(n, k) = gcd({self.n}, {self.k}) = {math.gcd(self.n, self.k)} != 1")

    @property
    def ellipse(self) -> Ellipse:
        return Ellipse(self.a1, self.a2)

    @property
    def tolerances(self) -> dict:
        return {"tol_closure": self.tol_closure, "tol_spread": self.tol_spread}

    def start_grid(self) -> tuple:
        """Uniform starts and the optional seeded jitter (within one cell)."""
        m = self.samples
        if self.seed is None:
            return m, None
        rng = np.random.default_rng(self.seed)
        return m, rng.uniform(-0.5, 0.5, m) * (2 * math.pi / m)


def _emit(doc: dict):
    sys.stdout.write(json.dumps(doc, indent=1, allow_nan=False) + "\n")


def _caustic(cfg: RunConfig):
    return find_periodic_caustic(cfg.ellipse, cfg.n, cfg.k, tol=cfg.tol_closure)


def cmd_orbit(cfg: RunConfig) -> int:
    pc = _caustic(cfg)
    o = caustic_orbit(cfg.ellipse, pc.caustic, cfg.t0, cfg.n)
    doc = {
        "command": "orbit", "a1": cfg.a1, "a2": cfg.a2, "n": cfg.n, "k": cfg.k,
        "mu_star": pc.mu_star, "nu_star": pc.nu_star, "J": o.J, "L": perimeter(o),
        "closure_defect": o.closure_defect, "residual": pc.residual, "porism_defect": pc.porism_defect,
    }
    if cfg.json:
        report.write_json(o, cfg.json)
    if cfg.svg:
        report.render_svg(report.orbit_scene(o, pc.caustic, tangent=o.n % 2 == 1), cfg.svg)
    _emit(doc)
    return EXIT_OK


def cmd_family(cfg: RunConfig) -> int:
    pc = _caustic(cfg)
    m, jitter = cfg.start_grid()
    sweep = family_sweep(pc, m, jitter=jitter)
    bad = sweep.violations(cfg.tol_spread)
    signs = {tuple(sorted(r.beta_signs)) for r in sweep.reports}
    if cfg.csv:
        report.write_csv(sweep, cfg.csv, cfg.tolerances)
    if cfg.json:
        report.write_json(sweep, cfg.json, cfg.tolerances)
    if cfg.svg:
        report.render_svg(report.orbit_scene(sweep.orbits[0], pc.caustic), cfg.svg)
    _emit({
        "command": "family", "a1": cfg.a1, "a2": cfg.a2, "n": cfg.n, "k": cfg.k,
        "mu_star": pc.mu_star, "samples": m, "tol_spread": cfg.tol_spread,
        "spreads": sweep.spreads, "violations": bad, "sign_profiles_constant": len(signs) == 1,
    })
    return EXIT_SPREAD if bad or len(signs) != 1 else EXIT_OK


def cmd_grid(cfg: RunConfig) -> int:
    if cfg.step is None:
        raise DomainError("grid needs --step")
    pc = _caustic(cfg)
    o = caustic_orbit(cfg.ellipse, pc.caustic, cfg.t0, cfg.n)
    layer = grid_layer(o, cfg.step)
    dev = grid_polygon_angles_check(o, layer)
    if cfg.json:
        report.write_json(layer, cfg.json)
    if cfg.svg:
        report.render_svg(report.layer_scene(o, layer, pc.caustic), cfg.svg)
    _emit({
        "command": "grid", "a1": cfg.a1, "a2": cfg.a2, "n": cfg.n, "k": cfg.k, "step": cfg.step,
        "mu_star": pc.mu_star, "layer_mu": layer.mu_mean, "mu_max_dev": layer.mu_max_dev,
        "polygons": len(layer.polygons), "angle_deviation": dev,
    })
    return EXIT_OK


def cmd_areas(cfg: RunConfig) -> int:
    if cfg.n % 2 == 0:
        raise DomainError(f"area ratio is an invariant for odd n only, got n={cfg.n}")
    pc = _caustic(cfg)
    m, jitter = cfg.start_grid()
    starts = 2 * math.pi * np.arange(m) / m + (0 if jitter is None else jitter)
    orbits = [caustic_orbit(cfg.ellipse, pc.caustic, float(t), cfg.n) for t in starts]
    ratios = np.array([area_ratio(o) for o in orbits])
    ok = spread_ok(ratios, cfg.tol_spread)
    doc = {
        "command": "areas", "a1": cfg.a1, "a2": cfg.a2, "n": cfg.n, "k": cfg.k, "mu_star": pc.mu_star,
        "ratio": float(np.mean(ratios)), "spread": spread(ratios),
    }
    if (cfg.inner_a1 is None) != (cfg.inner_a2 is None):
        raise DomainError("give both --inner-a1 and --inner-a2")
    if cfg.inner_a1 is not None:
        outer = ConcentricConic.from_ellipse(cfg.ellipse)
        shape = ConcentricConic(1 / cfg.inner_a1**2, 0.0, 1 / cfg.inner_a2**2)
        s = find_closing_scale(outer, shape, cfg.n, cfg.k, tol=cfg.tol_closure)
        gen = area_ratio_general(outer, shape.scaled(s), cfg.n, cfg.k, starts)
        doc["general"] = {
            "scale": s, "ratio": float(np.mean(gen.direct)), "spread": gen.direct_spread,
            "confocal_ratio": float(np.mean(gen.confocal)), "confocal_spread": gen.confocal_spread,
            "agreement": gen.agreement,
        }
        ok = ok and spread_ok(gen.direct, cfg.tol_spread) and spread_ok(gen.confocal, cfg.tol_spread) \
            and gen.agreement < cfg.tol_spread
    if cfg.svg:
        report.render_svg(report.orbit_scene(orbits[0], pc.caustic, tangent=True), cfg.svg)
    _emit(doc)
    return EXIT_OK if ok else EXIT_SPREAD


COMMANDS = {"orbit": cmd_orbit, "family": cmd_family, "grid": cmd_grid, "areas": cmd_areas}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a1", type=float, required=True, help="major semi-axis of the table")
    common.add_argument("--a2", type=float, required=True, help="minor semi-axis of the table")
    common.add_argument("--n", type=int, required=True, help="period")
    common.add_argument("--k", type=int, default=1, help="rotation number numerator (default 1)")
    common.add_argument("--samples", type=int, default=64)
    common.add_argument("--tol-closure", type=float, default=CLOSURE_TOL)
    common.add_argument("--tol-spread", type=float, default=SPREAD_TOL)
    common.add_argument("--seed", type=int, default=None, help="jitter the start grid with this seed")
    common.add_argument("--t0", type=float, default=0.0, help="start parameter for orbit and grid")
    common.add_argument("--csv", metavar="PATH")
    common.add_argument("--json", metavar="PATH")
    common.add_argument("--svg", metavar="PATH")
    common.add_argument("--step", type=int, help="grid layer step")
    common.add_argument("--inner-a1", type=float, help="inner shape semi-axis (areas)")
    common.add_argument("--inner-a2", type=float, help="inner shape semi-axis (areas)")

    p = argparse.ArgumentParser(prog="poncelet-lab", description="Poncelet families in elliptic billiards")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("orbit", parents=[common], help="find the periodic caustic and one orbit")
    sub.add_parser("family", parents=[common], help="sweep a Poncelet family and its invariants")
    sub.add_parser("grid", parents=[common], help="one Poncelet grid layer")
    sub.add_parser("areas", parents=[common], help="area ratio of orbit and tangent polygon")
    return p


def _setup_logging():
    level = LOG_LEVELS.get(os.environ.get("PONCELET_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(args).items() if k != "command"}
    cfg = RunConfig(**opts)
    try:
        cfg.validate()
        return COMMANDS[args.command](cfg)
    except NoOrbitError as ex:
        code, msg = EXIT_NO_ORBIT, f"no orbit: {ex}"
    except (ConvergenceError, ClosureError) as ex:
        code, msg = EXIT_CONVERGENCE, f"convergence failure: {ex}"
    except (DegeneracyError, TangencyError, FitError) as ex:
        code, msg = EXIT_DEGENERACY, f"degenerate configuration: {ex}"
    except DomainError as ex:
        code, msg = EXIT_DOMAIN, f"invalid input: {ex}"
    except OSError as ex:
        code, msg = EXIT_IO, str(ex)
    print(f"poncelet-lab: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
