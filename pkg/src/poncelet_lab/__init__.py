"""Numerical experiments on Poncelet families of elliptic billiard orbits."""
from .billiard import (Orbit, PhasePoint, billiard_step, caustic_of_ray, caustic_orbit, chord_next,
                       joachimsthal, launch, orbit, reflect)
from .conics import (AffineMap, ConcentricConic, Ellipse, Line, confocal_ellipse, confocal_from_minor,
                     confocal_param_of_point, confocalize, conic_from_tangent_lines, line_tangency_param,
                     point_on, polar_dual_point)
from .errors import (ClosureError, ConvergenceError, DegeneracyError, DomainError, FitError, NoOrbitError,
                     PonceletError, TangencyError)
from .grid import (GridLayer, area_ratio, area_ratio_general, grid_affine_map_check, grid_layer,
                   grid_polygon_angles_check, side_lines)
from .invariants import InvariantReport, UPolygon, invariant_report, u_polygon
from .poncelet import (FamilySweep, PeriodicCaustic, family_sweep, find_closing_scale, find_periodic_caustic,
                       poncelet_map_general, rotation_number, tangent_map_orbit)

__version__ = "0.1.0"
