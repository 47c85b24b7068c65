"""Hessian-manifold tensor inventory, identity verification, soliton
analysis, information geometry and desk-scale metric-flow integration."""

__version__ = "0.1.0"

from .expressions import DomainError, Expression, ParseError, parse_potential, to_source
from .jets import Jet, TaylorPoly, eval_taylor, seed_point
from .potentials import (PotentialField, builtin_family, from_expression,
                         log_cone, multinomial_logpartition, quadratic,
                         sample_points, torus_perturbed)
from .tensors import (DenseTensor, MetricPoint, NotPositiveDefiniteError,
                      contract, invert_spd, lower_index, norm_sq, raise_index,
                      sharp)
from .structure import (BochnerReport, CheckResult, StructurePoint,
                        bochner_residual, properness_indicator, riemann_oracle,
                        structure_at, verify_identities)
from .solitons import (SolitonSpec, dual_soliton, einstein_fit,
                       hessian_of_function, lie_derivative_metric,
                       soliton_residual, steady_killing_check,
                       trace_identity_residual)
from .flow import (FlowBlowupError, FlowRecord, MetricGrid, beta_on_grid,
                   flow_step, metric_grid, metric_patch_from_field, run_flow,
                   self_similarity_diagnostic, torus_grid, torus_integrals)
from .infogeo import (ConnectionCoefficients, SimplexFamily, alpha_connection,
                      duality_pairing_check, fisher_metric,
                      hessian_structure_certificate)

__all__ = [name for name in dir() if not name.startswith("_")]
