"""Separating half-spaces for the solution set, subspace projections, and problem data.

The solution set of the coupled inclusion system (all primal-dual pairs
jointly satisfying the per-block conditions) is closed and convex.  From one
graph point per operator one can assemble an affine half-space that contains
it; projecting the current iterate onto that half-space is the coordination
step of both engines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .blockspace import (BlockVector, CouplingMap, PrimalDualPoint, SpaceSignature,
                         adjoint_block, forward_block, inner, norm, norm_sq, pd_norm)
from .errors import ConfigError, DimensionError
from .operators import GraphPoint, MonotoneOp, resolvent

SUBSPACE_VARIANTS = ("full", "nullspace", "linear_primal", "zero_sum_dual")

FIXTURE_KT_TOL = 1e-8
FIXTURE_SUBSPACE_TOL = 1e-10
LINEAR_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class SubspaceSpec:
    """Choice of the closed subspace the iterates are confined to.

    full            whole primal-dual space (no confinement)
    nullspace       null space of a dense matrix C over the stacked coordinates
    zero_sum_dual   dual blocks sum to zero (all dual dims equal), primal free
    linear_primal   single primal block x with a linear operator A1 on it:
                    {(x, v*) : A1 x + adjoint-coupling applied to v* = 0}
    """

    variant: str
    C: Optional[np.ndarray] = None
    A1: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.variant not in SUBSPACE_VARIANTS:
            raise ConfigError(f"unknown subspace variant {self.variant!r}")
        if self.variant == "nullspace":
            if self.C is None:
                raise ConfigError("nullspace subspace requires the constraint matrix C")
            object.__setattr__(self, "C", np.atleast_2d(np.asarray(self.C, dtype=float)))
        if self.variant == "linear_primal":
            if self.A1 is None:
                raise ConfigError("linear_primal subspace requires the matrix A1")
            object.__setattr__(self, "A1", np.atleast_2d(np.asarray(self.A1, dtype=float)))


class SubspaceProjector:
    """Orthogonal projection onto the configured subspace.

    Dense factorizations are computed once at problem load and shared
    read-only afterwards; projection itself is pure.
    """

    def __init__(self, signature: SpaceSignature, variant: str,
                 rowspace: Optional[np.ndarray] = None):
        self.signature = signature
        self.variant = variant
        self.rowspace = rowspace  # orthonormal rows spanning the constraint row space

    def project(self, point: PrimalDualPoint) -> PrimalDualPoint:
        if self.variant == "full":
            return point
        if self.variant == "zero_sum_dual":
            blocks = point.v_star.blocks
            mean = blocks[0].copy()
            for b in blocks[1:]:
                mean += b
            mean /= len(blocks)
            centered = BlockVector([b - mean for b in blocks], copy=False)
            return PrimalDualPoint(point.x, centered)
        # nullspace / linear_primal: subtract the row-space component
        flat = np.concatenate([point.x.to_flat(), point.v_star.to_flat()])
        if self.rowspace is not None and self.rowspace.shape[0] > 0:
            flat = flat - self.rowspace.T @ (self.rowspace @ flat)
        n_primal = sum(self.signature.primal_dims)
        x = BlockVector.from_flat(flat[:n_primal], self.signature.primal_dims)
        v = BlockVector.from_flat(flat[n_primal:], self.signature.dual_dims)
        return PrimalDualPoint(x, v)

    def residual(self, point: PrimalDualPoint) -> float:
        """Distance between a point and its projection (0 when on the subspace)."""
        if self.variant == "full":
            return 0.0
        return pd_norm(self.project(point) - point)


def _rowspace_basis(C: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the row space of C; drops dependent rows by rank."""
    if C.size == 0:
        return np.zeros((0, C.shape[1]))
    U, s, Vt = np.linalg.svd(C, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros((0, C.shape[1]))
    rank = int(np.sum(s > s[0] * 1e-12))
    return Vt[:rank]


def build_projector(spec: SubspaceSpec, signature: SpaceSignature,
                    coupling: Optional[CouplingMap] = None) -> SubspaceProjector:
    """Materialize the projection operator for a subspace choice."""
    total = signature.total_dim
    if spec.variant == "full":
        return SubspaceProjector(signature, "full")
    if spec.variant == "zero_sum_dual":
        if len(set(signature.dual_dims)) != 1:
            raise ConfigError("zero_sum_dual requires all dual blocks to share one dimension")
        return SubspaceProjector(signature, "zero_sum_dual")
    if spec.variant == "nullspace":
        C = spec.C
        if C.shape[1] != total:
            raise DimensionError(
                f"nullspace matrix has {C.shape[1]} columns, expected {total}")
        return SubspaceProjector(signature, "nullspace", _rowspace_basis(C))
    # linear_primal: rows [A1 | adjoint blocks of the coupling]
    if signature.m != 1:
        raise ConfigError("linear_primal subspace requires a single primal block")
    if coupling is None:
        raise ConfigError("linear_primal subspace requires the coupling map")
    n1 = signature.primal_dims[0]
    A1 = spec.A1
    if A1.shape != (n1, n1):
        raise DimensionError(f"A1 has shape {A1.shape}, expected ({n1}, {n1})")
    blocks = [A1]
    for k in range(signature.p):
        mat = coupling.entries.get((k, 0))
        if mat is None:
            blocks.append(np.zeros((n1, signature.dual_dims[k])))
        else:
            blocks.append(mat.T)
    C = np.hstack(blocks)
    return SubspaceProjector(signature, "linear_primal", _rowspace_basis(C))


def _linear_matrix(op: MonotoneOp) -> Optional[np.ndarray]:
    """Matrix of an operator that is a linear map, or None."""
    if op.kind == "zero":
        return np.zeros((op.dim, op.dim))
    if op.kind == "quadratic" and not op.params["q"].any():
        return op.params["Q"]
    if op.kind == "affine_monotone" and not op.params["c"].any():
        return op.params["M"]
    return None


@dataclass
class ProblemSpec:
    """A validated coupled-inclusion problem over block spaces.

    known_Z_points are optional test fixtures: solution pairs supplied by the
    user, verified at load time, and never consulted by the solve path.
    """

    signature: SpaceSignature
    A_ops: Sequence[MonotoneOp]
    B_ops: Sequence[MonotoneOp]
    coupling: CouplingMap
    z_star: BlockVector
    r: BlockVector
    subspace: SubspaceSpec = field(default_factory=lambda: SubspaceSpec("full"))
    known_Z_points: Sequence[PrimalDualPoint] = field(default_factory=tuple)
    projector: SubspaceProjector = field(init=False)

    def __post_init__(self) -> None:
        sig = self.signature
        self.A_ops = tuple(self.A_ops)
        self.B_ops = tuple(self.B_ops)
        self.known_Z_points = tuple(self.known_Z_points)
        if len(self.A_ops) != sig.m:
            raise DimensionError(f"{len(self.A_ops)} primal operators for {sig.m} blocks")
        if len(self.B_ops) != sig.p:
            raise DimensionError(f"{len(self.B_ops)} dual operators for {sig.p} blocks")
        for i, op in enumerate(self.A_ops):
            if op.dim != sig.primal_dims[i]:
                raise DimensionError(
                    f"primal operator {i} has dim {op.dim}, block needs {sig.primal_dims[i]}")
        for k, op in enumerate(self.B_ops):
            if op.dim != sig.dual_dims[k]:
                raise DimensionError(
                    f"dual operator {k} has dim {op.dim}, block needs {sig.dual_dims[k]}")
        if self.coupling.signature != sig:
            raise DimensionError("coupling map signature differs from the problem signature")
        if self.z_star.dims != sig.primal_dims:
            raise DimensionError(f"z_star dims {self.z_star.dims} != {sig.primal_dims}")
        if self.r.dims != sig.dual_dims:
            raise DimensionError(f"r dims {self.r.dims} != {sig.dual_dims}")
        if self.subspace.variant == "linear_primal":
            self._validate_linear_primal()
        self.projector = build_projector(self.subspace, sig, self.coupling)
        for j, z in enumerate(self.known_Z_points):
            res = kt_residual(self, z)
            if res.max > FIXTURE_KT_TOL:
                raise ConfigError(
                    f"known_Z_points[{j}] fails the solution conditions: "
                    f"max residual {res.max:.3e} ({res.describe_worst()})")
            sub = self.projector.residual(z)
            if sub > FIXTURE_SUBSPACE_TOL * (1.0 + pd_norm(z)):
                raise ConfigError(
                    f"known_Z_points[{j}] lies off the subspace (residual {sub:.3e})")

    def _validate_linear_primal(self) -> None:
        if self.signature.m != 1:
            raise ConfigError("linear_primal subspace requires m = 1")
        if norm(self.z_star) != 0.0:
            raise ConfigError("linear_primal subspace requires z_star = 0")
        mat = _linear_matrix(self.A_ops[0])
        if mat is None:
            raise ConfigError(
                "linear_primal subspace requires a linear primal operator "
                "(zero, quadratic with q=0, or affine_monotone with c=0)")
        if not np.allclose(mat, self.subspace.A1, rtol=0.0, atol=LINEAR_MATCH_TOL):
            raise ConfigError("subspace matrix A1 does not match the primal operator")

    @property
    def m(self) -> int:
        return self.signature.m

    @property
    def p(self) -> int:
        return self.signature.p


@dataclass(frozen=True)
class Separator:
    """Affine half-space {u : <u, normal> <= level} containing the solution set.

    normal_primal/normal_dual form the (subspace-projected) normal vector;
    norm_sq caches its squared norm, the denominator of the projection step.
    """

    normal_primal: BlockVector
    normal_dual: BlockVector
    level: float       # eta: sum of <a_i, a*_i> + <b_k, b*_k>
    norm_sq: float     # tau: ||normal_primal||^2 + ||normal_dual||^2


def build_separator(a_points: Sequence[GraphPoint], b_points: Sequence[GraphPoint],
                    problem: ProblemSpec) -> tuple[Separator, PrimalDualPoint]:
    """Assemble the separating half-space from one graph point per operator.

    Returns the separator together with the raw (unprojected) normal, which
    the exact-solution test inspects.
    """
    L = problem.coupling
    b_dual = BlockVector([gp.dual for gp in b_points], copy=False)
    a_point = BlockVector([gp.point for gp in a_points], copy=False)
    raw_primal = BlockVector(
        [a_points[i].dual + adjoint_block(L, b_dual, i) for i in range(problem.m)], copy=False)
    raw_dual = BlockVector(
        [b_points[k].point - forward_block(L, a_point, k) for k in range(problem.p)], copy=False)
    raw = PrimalDualPoint(raw_primal, raw_dual)
    level = 0.0
    for gp in a_points:
        level += float(np.dot(gp.point, gp.dual))
    for gp in b_points:
        level += float(np.dot(gp.point, gp.dual))
    projected = problem.projector.project(raw)
    tau = norm_sq(projected.x) + norm_sq(projected.v_star)
    return Separator(projected.x, projected.v_star, level, tau), raw


def detect_exact_solution(s_star_raw: PrimalDualPoint, candidate: PrimalDualPoint,
                          tol: float) -> Optional[PrimalDualPoint]:
    """Return the candidate solution pair when the raw normal vanishes.

    A zero raw normal certifies that (a, b*) solves the coupled system
    exactly; the tolerance is scaled by the candidate magnitude.
    """
    if pd_norm(s_star_raw) <= tol * (1.0 + pd_norm(candidate)):
        return candidate
    return None


def halfspace_violation(current: PrimalDualPoint, sep: Separator) -> float:
    """Nonnegative amount by which the current point violates the half-space."""
    gap = inner(current.x, sep.normal_primal) + inner(sep.normal_dual, current.v_star) - sep.level
    return max(0.0, gap)


def project_halfspace(current: PrimalDualPoint, sep: Separator, lam: float,
                      tau_zero_tol: float = 1e-14) -> tuple[float, PrimalDualPoint]:
    """Relaxed projection of the current point onto the separator's half-space.

    Returns (theta, next_point).  theta is the applied step scale; it is zero
    (and the point is returned unchanged) when the point already satisfies
    the half-space or when the normal is numerically zero.  The branch on a
    nonzero normal uses a threshold scaled by (1 + level^2) because an exact
    zero test is meaningless in floating point.
    """
    if not 0.0 < lam <= 2.0:
        raise ConfigError(f"relaxation must lie in (0, 2], got {lam}")
    if sep.norm_sq <= tau_zero_tol * (1.0 + sep.level ** 2):
        return 0.0, current
    violation = halfspace_violation(current, sep)
    if violation <= 0.0:
        return 0.0, current
    theta = lam * violation / sep.norm_sq
    nxt = PrimalDualPoint(current.x - theta * sep.normal_primal,
                          current.v_star - theta * sep.normal_dual)
    return theta, nxt


@dataclass(frozen=True)
class KTResidual:
    """Per-condition graph-membership residuals of a candidate solution pair."""

    primal: tuple[float, ...]  # one per primal operator
    dual: tuple[float, ...]    # one per dual operator

    @property
    def max(self) -> float:
        return max(self.primal + self.dual)

    def describe_worst(self) -> str:
        worst = self.max
        for i, v in enumerate(self.primal):
            if v == worst:
                return f"primal condition {i}"
        for k, v in enumerate(self.dual):
            if v == worst:
                return f"dual condition {k}"
        return "none"


def kt_residual(problem: ProblemSpec, point: PrimalDualPoint) -> KTResidual:
    """Residuals of the coupled optimality conditions at a primal-dual pair.

    For each primal block i the pair (x_i, z*_i - adjoint coupling of v*)
    must lie in the graph of the i-th operator; for each dual block k the
    pair (coupled primal image - r_k, v*_k) must lie in the graph of the
    k-th operator.  Each membership is measured by the resolvent test.
    """
    L = problem.coupling
    primal = []
    for i in range(problem.m):
        w = problem.z_star.blocks[i] - adjoint_block(L, point.v_star, i)
        x_i = point.x.blocks[i]
        primal.append(float(np.linalg.norm(
            x_i - resolvent(problem.A_ops[i], 1.0, x_i + w))))
    dual = []
    for k in range(problem.p):
        u = forward_block(L, point.x, k) - problem.r.blocks[k]
        v_k = point.v_star.blocks[k]
        dual.append(float(np.linalg.norm(
            u - resolvent(problem.B_ops[k], 1.0, u + v_k))))
    return KTResidual(tuple(primal), tuple(dual))
