"""Graphon kernels, subgraph densities, density-expression constraints, and
numeric checks for the Rademacher graphon."""
from .density import (decorated_density, graphon_density, root_measure_sample, rooted_density,
                      rooted_expectation, unlabel)
from .estimate import Estimate
from .expressions import (Const, Constraint, Product, Sum, Term, Unlabel, check_constraint,
                          compile_decorated, compile_rooted_constraint, evaluate_expression)
from .forcing import (gadget_constraints, partition_constraints, pseudorandom_constraints,
                      verify_wr_identities, zero_constraints_wr)
from .graphon import (MeasurePreservingMap, SectionFunction, apply_measure_preserving,
                      constant_graphon, degree, dyadic_index, half_graphon, norine_graphon,
                      rademacher_graphon, section, step_graphon)
from .graphs import (Graph, PartitionSpec, are_isomorphic, automorphism_count,
                     induced_density_finite, rooted_compatible)
from .sampling import convergence_experiment, empirical_density, sample_w_random_graph
from .vertexspace import (check_separation, dw_distance, l1_distance, packing_diagnostic,
                          witness_g, witness_g_i_delta)

__version__ = "0.1.0"
