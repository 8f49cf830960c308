"""Unstable entropies of linear partially hyperbolic toral automorphisms.

Exact orbit arithmetic, greedy minimal covers of unstable leaf segments,
open-cover and Carathéodory-style (critical exponent) entropy estimators, a
conditional-information estimator for Lebesgue measure, and a verification
harness tying them together.
"""

from .covers import GridCover, minimal_bowen_cover, n_orbit_thinner, thinner_than
from .errors import (ConfigError, CountBudgetExceeded, DegeneratePlaque, EmptyTrace,
                     Infeasible, IndeterminateTrend, LeafdimError, NonStabilized,
                     NotUnimodular, SplittingError, UnsupportedDimension)
from .hdim import critical_exponent, h_unstable_H, outer_measure_approx, weight
from .leaf import (AmbientBall, LeafSegment, LeafSubset, PeriodicOrbit, PointSet, WholeTorus,
                   ambient_set_from_spec, iterate_segment, leaf_ball, trace_subset)
from .systems import (Splitting, ToralAutomorphism, TorusPoint, apply, cat2,
                      compute_splitting, make_toral_automorphism, paper3, system_from_spec,
                      unstable_jacobian)
from .umetric import conditional_information, metric_entropy_jacobian, smb_convergence_report
from .utop import (entropy_of_compact, entropy_of_subset_cover_style,
                   unstable_topological_entropy)

__version__ = "0.1.0"
