"""Invariant cone fields, conal orders and differential positivity on homogeneous spaces."""

__version__ = "0.1.0"

from .cones import (ConeMargin, ConeSpec, ad_invariance_probe, cone_margin, loewner_margin,
                    orthant_margin, planar_margin, quad_margin, rankk_margin)
from .consensus import (OscillatorNetwork, Trajectory, VariationalFlow, contraction_report,
                        coupling_eval, linearization, phase_lock_detect, phi_ratio, rhs,
                        simulate, variational)
from .diffpos import (MapSpec, PositivityReport, counterexample_search, diff_positivity_check,
                      map_apply, map_differential, monotone_scan)
from .errors import BarrierBreach, ConalError, DimensionError, DomainError, SymmetryError
from .order import (OrderVerdict, heisenberg_order, order_axiom_probe, spd_order,
                    spd_order_via_geodesic, vector_order)
from .spd import (GeodesicSegment, ai_distance, congruence, geodesic_point,
                  geodesic_velocity)
from .symmat import EigenPair, frechet_pow, sym_eig, sym_fn
