"""Periodic caustics, Poncelet families, and the general concentric Poncelet map."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .billiard import TWO_PI, _step, caustic_orbit, launch
from .conics import ConcentricConic, Ellipse, confocal_from_minor, tangent_directions
from .errors import ClosureError, ConvergenceError, DegeneracyError, DomainError, NoOrbitError

log = logging.getLogger(__name__)

CLOSURE_TOL = 1e-11
PORISM_TOL = 1e-9
SPREAD_TOL = 1e-8
# |mean| below this counts as a zero-valued invariant; its spread is
# measured against the floor instead of against the mean
SPREAD_FLOOR = 1e-6
ROTATION_STEPS = 1000
MAX_ITER = 200
PORISM_STARTS = 16


@dataclass(frozen=True)
class PeriodicCaustic:
    e: Ellipse
    n: int
    k: int
    mu_star: float
    residual: float
    porism_defect: float = 0.0
    # squared minor semi-axis of the caustic, a2**2 + mu_star, kept at full
    # relative precision for caustics hugging the focal segment
    nu_star: float | None = None

    def __post_init__(self):
        if self.nu_star is None:
            object.__setattr__(self, "nu_star", self.e.a2**2 + self.mu_star)

    @property
    def caustic(self) -> Ellipse:
        return confocal_from_minor(self.e, self.nu_star)


@dataclass(eq=False)
class FamilySweep:
    caustic: PeriodicCaustic
    t0_grid: list
    reports: list
    spreads: dict
    orbits: list = field(default_factory=list, repr=False)

    def values(self, name: str) -> np.ndarray:
        return np.array([r.scalars()[name] for r in self.reports])

    def violations(self, tol: float = SPREAD_TOL) -> list:
        """Names of invariants whose spread fails the gate at ``tol``."""
        if not self.reports:
            return []
        return [name for name in self.reports[0].scalars() if not spread_ok(self.values(name), tol)]


def spread(values) -> float:
    """Relative spread ``|max - min| / (|mean| + 1e-300)``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0
    return float((v.max() - v.min()) / (abs(v.mean()) + 1e-300))


def spread_ok(values, tol: float = SPREAD_TOL) -> bool:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return True
    return bool(v.max() - v.min() <= tol * max(abs(v.mean()), SPREAD_FLOOR))


def _check_nk(n: int, k: int):
    if n == 2 and k == 1:
        raise NoOrbitError("2-periodic orbits are the two axes; they do not form a one-parameter family")
    if n < 3 or k < 1 or 2 * k >= n:
        raise NoOrbitError(f"need 1 <= k and 2k < n, got n={n}, k={k}")
    if math.gcd(n, k) != 1:
        raise NoOrbitError(f"gcd(n, k) = {math.gcd(n, k)} != 1: ({n}, {k}) is not a primitive rotation number")


def rotation_number(e: Ellipse, mu, N: int = ROTATION_STEPS) -> float:
    """Average boundary-parameter advance per bounce, in turns.

    The ray tangent to the caustic ``mu`` (or a confocal caustic ellipse) is
    launched counterclockwise from ``t = 0``; the estimate is within ``1/N``
    of the true value.
    """
    if not isinstance(mu, Ellipse) and not -e.a2**2 < mu < 0:
        raise DomainError(f"caustic parameter {mu!r} not in (-a2**2, 0)")
    if N < 1000:
        raise DomainError("rotation number needs N >= 1000")
    return _billiard_advance(e, mu, N) / (TWO_PI * N)


def _billiard_advance(e: Ellipse, caustic, n: int, t0: float = 0.0) -> float:
    pp = launch(e, caustic, t0)
    a1, a2 = e.a1, e.a2
    t, ux, uy = pp.t, pp.u[0], pp.u[1]
    total = 0.0
    for _ in range(n):
        t, ux, uy, dt = _step(a1, a2, t, ux, uy)
        total += dt
    return total


def _chain_advance(e: Ellipse, caustic: Ellipse, n: int, t0: float = 0.0) -> float:
    """Parameter advance of ``n`` chords each drawn tangent to ``caustic``.

    Same vertices as the billiard orbit, but every side is rebuilt from the
    exact caustic, so reflection round-off never accumulates.
    """
    a1, a2 = e.a1, e.a2
    ia, ib = 1.0 / (a1 * a1), 1.0 / (a2 * a2)
    t, total = t0, 0.0
    for _ in range(n):
        ux, uy = launch(e, caustic, t).u
        x, y = a1 * math.cos(t), a2 * math.sin(t)
        s = -2.0 * (x * ux * ia + y * uy * ib) / (ux * ux * ia + uy * uy * ib)
        t2 = math.atan2((y + s * uy) / a2, (x + s * ux) / a1)
        total += (t2 - t) % TWO_PI
        t = t2
    return total


def _solve_closure(rho: Callable, closure: Callable, lo: float, hi: float, n: int, k: int,
                   tol: float, N: int) -> tuple:
    """Find ``p`` in ``(lo, hi)`` with ``closure(p) = 0``.

    Both ``rho`` (rotation number) and ``closure`` decrease in ``p``. Stage 1
    bisects on ``rho`` while its estimate is decisively away from ``k/n``;
    stage 2 runs a bracketed secant on the smooth closure defect. For a
    circle homeomorphism the sign of the ``n``-step defect equals the sign
    of ``rho - k/n``, so decisive stage-1 verdicts give a valid bracket.
    """
    target, margin = k / n, 1.0 / N
    r_lo, r_hi = rho(lo), rho(hi)
    if not (r_lo - target > margin and target - r_hi > margin):
        raise NoOrbitError(f"rotation numbers [{r_hi:.6g}, {r_lo:.6g}] do not straddle {k}/{n}")
    it = 0
    width0 = hi - lo
    while hi - lo > width0 / 16:
        it += 1
        mid = 0.5 * (lo + hi)
        r = rho(mid)
        if r - target > margin:
            lo = mid
        elif target - r > margin:
            hi = mid
        else:
            break
    log.debug("stage 1 bracket [%r, %r] after %d bisections", lo, hi, it)

    f_lo, f_hi = closure(lo), closure(hi)
    if not (f_lo > 0 > f_hi):
        raise ConvergenceError(f"closure defect does not change sign on [{lo!r}, {hi!r}]")
    x0, f0, x1, f1 = lo, f_lo, hi, f_hi
    best = (abs(f_lo), lo) if abs(f_lo) < abs(f_hi) else (abs(f_hi), hi)
    polish = 0
    while it < MAX_ITER:
        it += 1
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0) if f1 != f0 else 0.5 * (lo + hi)
        if not lo < x2 < hi:
            x2 = 0.5 * (lo + hi)
        f2 = closure(x2)
        if abs(f2) < best[0]:
            best = (abs(f2), x2)
        if f2 > 0:
            lo = x2
        elif f2 < 0:
            hi = x2
        else:
            break
        if best[0] < tol:
            # a few extra steps usually take the defect to rounding level
            polish += 1
            if polish > 2 or x2 == x1:
                break
        x0, f0, x1, f1 = x1, f1, x2, f2
        # bracket stagnation: fall back to a bisection step
        if hi - lo < 1e-300 or hi <= np.nextafter(lo, np.inf):
            break
    if best[0] >= tol:
        raise ConvergenceError(f"closure defect {best[0]:.3g} above tol {tol:.3g} after {it} iterations")
    log.debug("closure solve: %d iterations, residual %.3g", it, best[0])
    return best[1], best[0]


def find_periodic_caustic(e: Ellipse, n: int, k: int = 1, tol: float = CLOSURE_TOL,
                          N: int = ROTATION_STEPS) -> PeriodicCaustic:
    """Caustic parameter of the ``(n, k)`` Poncelet family in ``e``.

    The search runs over ``log(a2**2 + mu)``: as ``k/n`` approaches 1/2 the
    caustic collapses onto the focal segment exponentially fast, and this
    coordinate keeps such caustics resolvable.
    """
    _check_nk(n, k)
    b2 = e.a2**2
    eps = 1e-9
    lo, hi = math.log(eps * b2), math.log1p(-eps) + math.log(b2)

    def caustic(p):
        return confocal_from_minor(e, math.exp(p))

    p, res = _solve_closure(
        lambda p: rotation_number(e, caustic(p), N),
        lambda p: _chain_advance(e, caustic(p), n) - TWO_PI * k,
        lo, hi, n, k, tol, N,
    )
    nu = math.exp(p)
    c = confocal_from_minor(e, nu)
    worst = 0.0
    for j in range(PORISM_STARTS):
        t0 = TWO_PI * (j + 0.5) / PORISM_STARTS
        worst = max(worst, abs(_chain_advance(e, c, n, t0) - TWO_PI * k))
    if worst >= PORISM_TOL:
        raise ConvergenceError(f"porism re-check failed: closure defect {worst:.3g}")
    return PeriodicCaustic(e, n, k, nu - b2, res, worst, nu)


def family_sweep(pc: PeriodicCaustic, m: int, tol_closure: float = PORISM_TOL,
                 jitter=None) -> FamilySweep:
    """Launch ``m`` orbits from ``t0 = 2 pi j / m`` and evaluate every invariant.

    ``jitter`` is an optional array of offsets added to the start grid.
    """
    from .invariants import invariant_report

    if pc.n < 3:
        raise DomainError("no one-parameter family for n < 3 (axis 2-gons are isolated)")
    if m < 2:
        raise DomainError("family sweep needs m >= 2")
    grid = [TWO_PI * j / m for j in range(m)]
    if jitter is not None:
        grid = [t + float(d) for t, d in zip(grid, jitter)]
    orbits, reports = [], []
    for j, t0 in enumerate(grid):
        o = caustic_orbit(pc.e, pc.caustic, t0, pc.n)
        if not o.is_closed(tol_closure) or o.k != pc.k:
            raise ClosureError(f"member {j} (t0={t0!r}) does not close: defect {o.closure_defect:.3g}", index=j)
        orbits.append(o)
        reports.append(invariant_report(o))
    sweep = FamilySweep(pc, grid, reports, {}, orbits)
    sweep.spreads = {name: spread(sweep.values(name)) for name in reports[0].scalars()}
    return sweep


def _circle_frame(outer: ConcentricConic, inner: ConcentricConic):
    """Inner form in the frame where outer is the unit circle."""
    lmat = outer.sqrt_inv
    return lmat @ inner.matrix @ lmat


def _tangent_step(inner_form, t: float) -> float:
    """Counterclockwise tangent-line step on the unit circle; returns the
    unwrapped next parameter."""
    z = np.array([math.cos(t), math.sin(t)])
    for u in tangent_directions(inner_form, z):
        if u @ z > 0:
            u = -u
        if z[0] * u[1] - z[1] * u[0] > 0:
            w = z - 2.0 * float(u @ z) * u
            return t + (math.atan2(w[1], w[0]) - t) % TWO_PI
    raise DegeneracyError(f"no counterclockwise tangent at t={t}")


def poncelet_map_general(outer: ConcentricConic, inner: ConcentricConic, t: float) -> float:
    """Next vertex parameter along the counterclockwise tangent to ``inner``.

    Parameters refer to ``outer.point(t)``. The returned value lies in
    ``(t, t + 2 pi)``.
    """
    return _tangent_step(_circle_frame(outer, inner), t)


def tangent_map_orbit(outer: ConcentricConic, inner: ConcentricConic, t0: float, n: int) -> np.ndarray:
    """Unwrapped parameters ``t_0 .. t_n`` of ``n`` tangent-line steps."""
    form = _circle_frame(outer, inner)
    ts = [t0]
    for _ in range(n):
        ts.append(_tangent_step(form, ts[-1]))
    return np.array(ts)


def find_closing_scale(outer: ConcentricConic, inner_shape: ConcentricConic, n: int, k: int = 1,
                       tol: float = CLOSURE_TOL, N: int = ROTATION_STEPS) -> float:
    """Scale ``s`` for which ``s * inner_shape`` closes an ``(n, k)`` Poncelet polygon."""
    _check_nk(n, k)
    base = _circle_frame(outer, inner_shape)
    s_max = math.sqrt(np.linalg.eigvalsh(base)[0])
    eps = 1e-9

    def rho(s):
        form = base / s**2
        t, total = 0.0, 0.0
        for _ in range(N):
            t2 = _tangent_step(form, t)
            total += t2 - t
            t = t2 % TWO_PI
        return total / (TWO_PI * N)

    def closure(s):
        ts = tangent_map_orbit(outer, inner_shape.scaled(s), 0.0, n)
        return ts[-1] - ts[0] - TWO_PI * k

    s, _ = _solve_closure(rho, closure, eps * s_max, (1 - eps) * s_max, n, k, tol, N)
    inner = inner_shape.scaled(s)
    worst = 0.0
    for j in range(PORISM_STARTS):
        t0 = TWO_PI * (j + 0.5) / PORISM_STARTS
        ts = tangent_map_orbit(outer, inner, t0, n)
        worst = max(worst, abs(ts[-1] - ts[0] - TWO_PI * k))
    if worst >= PORISM_TOL:
        raise ConvergenceError(f"porism re-check failed: closure defect {worst:.3g}")
    return s
