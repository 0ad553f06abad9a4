"""Asynchronous block-iterative primal-dual splitting for coupled monotone inclusions.

Two engines over a shared decomposition/coordination skeleton: a relaxed
half-space projection method (Fejer-monotone iterates) and an anchored
best-approximation variant.  Block activation and bounded read lags are
driven by deterministic, certifiable schedules, so every run is replayable.
"""

from .blockspace import (BlockVector, CouplingMap, PrimalDualPoint, SpaceSignature,
                         apply_adjoint, apply_forward, inner, norm, pd_norm)
from .engine import (EngineState, IterationRecord, PerturbationRule, RunResult,
                     SolverConfig, haugazeau_update, run, step_fejer, step_haugazeau)
from .errors import (ConfigError, DimensionError, InconsistencyError,
                     InvariantViolation, NumericalError, PdsplitError, SchemaError)
from .operators import (GraphPoint, InexactnessBudget, MonotoneOp, affine_monotone,
                        box_indicator, check_graph_membership, graph_point_dual,
                        graph_point_primal, l1_norm, normal_cone_box, quadratic,
                        resolvent, validate_inexact_dual, validate_inexact_primal, zero)
from .schedule import (ControlSchedule, LagBuffer, periodic, random_admissible,
                       synchronous, validate)
from .separator import (KTResidual, ProblemSpec, Separator, SubspaceSpec,
                        build_projector, build_separator, detect_exact_solution,
                        kt_residual, project_halfspace)

__version__ = "0.1.0"
