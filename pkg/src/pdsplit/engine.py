"""The two iteration engines: relaxed projection and anchored best approximation.

Both engines share a decomposition phase (fresh graph points for activated
blocks, recycled points for the rest) and a coordination phase built on the
separating half-space.  The relaxed-projection engine moves the iterate
toward the half-space with an over-relaxation factor up to 2; the
best-approximation engine caps the factor at 1 and then pulls the update
back toward the starting anchor through a closed-form projection onto the
intersection of two half-spaces.

Graph-point evaluations within one step are pure and independent; they are
merged in fixed block order so results never depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .blockspace import (BlockVector, PrimalDualPoint, adjoint_block, forward_block,
                         inner, pd_inner, pd_norm, pd_norm_sq)
from .errors import ConfigError, InconsistencyError, InvariantViolation
from .operators import (GraphPoint, InexactnessBudget, default_membership_tol,
                        graph_point_dual, graph_point_primal, membership_residual,
                        validate_inexact_dual, validate_inexact_primal)
from .schedule import ControlSchedule, LagBuffer, synchronous, validate
from .separator import (ProblemSpec, build_separator, detect_exact_solution,
                        halfspace_violation, project_halfspace)

Rule = Union[float, Sequence[float], Callable]

MEMBERSHIP_TOL = 1e-9
FEJER_TOL = 1e-10
ANCHOR_TOL = 1e-10
HALFSPACE_TOL = 1e-10
SUBSPACE_ITERATE_TOL = 1e-9
RHO_TOL = 1e-12


@dataclass
class PerturbationRule:
    """Seeded generator of relative resolvent errors for inexact-mode runs.

    Every fresh graph point gets an error proportional to the exact residual
    direction, with a coefficient drawn uniformly from [-scale, scale] and a
    norm cap just under the budget's absolute bound.
    """

    seed: int
    scale: float


@dataclass
class SolverConfig:
    """Engine parameters.

    relaxation, gamma and mu accept a constant, a per-block list, or a
    callable; gamma/mu callables receive (block index, read iteration).
    epsilon bounds the relaxation factor (mode-dependent upper end), while
    eps_prox independently bounds the proximal parameters; both values are
    echoed into the run metadata.
    """

    mode: str = "fejer"  # "fejer" | "haugazeau"
    epsilon: float = 0.05
    relaxation: Optional[Rule] = None  # default: 1.9 (fejer) / 1.0 (haugazeau)
    gamma: Rule = 1.0
    mu: Rule = 1.0
    eps_prox: float = 1e-2
    max_iter: int = 10000
    resid_tol: float = 1e-8
    tau_zero_tol: float = 1e-14
    exact_tol: float = 1e-14
    trace_stride: int = 1
    start: Optional[PrimalDualPoint] = None
    inexact: Optional[InexactnessBudget] = None
    perturbation: Optional[PerturbationRule] = None

    def relaxation_bounds(self) -> tuple[float, float]:
        if self.mode == "fejer":
            return self.epsilon, 2.0 - self.epsilon
        return self.epsilon, 1.0

    def validate(self, problem: ProblemSpec) -> None:
        if self.mode not in ("fejer", "haugazeau"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.eps_prox < 1.0:
            raise ConfigError(f"eps_prox must lie in (0, 1), got {self.eps_prox}")
        if self.max_iter < 0:
            raise ConfigError(f"max_iter must be >= 0, got {self.max_iter}")
        if self.trace_stride < 1:
            raise ConfigError(f"trace_stride must be >= 1, got {self.trace_stride}")
        lo, hi = self.relaxation_bounds()
        lam = self.relaxation
        if isinstance(lam, (int, float)):
            _check_in(lam, lo, hi, "relaxation")
        elif isinstance(lam, (list, tuple)):
            for v in lam:
                _check_in(v, lo, hi, "relaxation")
        for rule, count, name in ((self.gamma, problem.m, "gamma"),
                                  (self.mu, problem.p, "mu")):
            if isinstance(rule, (int, float)):
                _check_in(rule, self.eps_prox, 1.0 / self.eps_prox, name)
            elif isinstance(rule, (list, tuple)):
                if len(rule) != count:
                    raise ConfigError(f"{name} list has {len(rule)} entries for {count} blocks")
                for v in rule:
                    _check_in(v, self.eps_prox, 1.0 / self.eps_prox, name)
        if self.perturbation is not None and self.inexact is None:
            raise ConfigError("perturbation injection requires an inexactness budget")
        if self.start is not None:
            if self.start.x.dims != problem.signature.primal_dims \
                    or self.start.v_star.dims != problem.signature.dual_dims:
                raise ConfigError("start point dims do not match the problem signature")


def _check_in(value: float, lo: float, hi: float, name: str) -> None:
    if not lo <= value <= hi:
        raise ConfigError(f"{name}={value} outside [{lo}, {hi}]")


def _relaxation_at(config: SolverConfig, n: int) -> float:
    lam = config.relaxation
    if lam is None:
        return 1.9 if config.mode == "fejer" else 1.0
    if isinstance(lam, (int, float)):
        return float(lam)
    if callable(lam):
        value = float(lam(n))
        lo, hi = config.relaxation_bounds()
        _check_in(value, lo, hi, "relaxation")
        return value
    return float(lam[min(n, len(lam) - 1)])


def _stepsize_at(rule: Rule, idx: int, n: int) -> float:
    if isinstance(rule, (int, float)):
        return float(rule)
    if callable(rule):
        return float(rule(idx, n))
    return float(rule[idx])


@dataclass(frozen=True)
class IterationRecord:
    """Per-iteration diagnostics: step data and convergence residuals.

    Residuals are computed from the iterate the step started at and the same
    (possibly recycled) graph points the separator used, so the trace
    reflects actual algorithmic state.
    """

    n: int
    theta: float
    tau: float
    violation: float
    res_primal: float    # distance between primal iterate and primal graph points
    res_dualmap: float   # primal graph duals vs adjoint-coupled dual iterate
    res_coupling: float  # coupled primal iterate vs dual graph points
    res_dual: float      # dual graph duals vs dual iterate
    dists: tuple[float, ...] = ()  # distances to the known fixture solutions

    def residual_sum(self) -> float:
        return self.res_primal + self.res_dualmap + self.res_coupling + self.res_dual


@dataclass
class EngineState:
    """Mutable per-run state: iterate, anchor, recycled graph points, buffers."""

    n: int
    current: PrimalDualPoint
    anchor: PrimalDualPoint
    a_points: list[Optional[GraphPoint]]
    b_points: list[Optional[GraphPoint]]
    buffer: LagBuffer
    trace: list[IterationRecord] = field(default_factory=list)
    last_record: Optional[IterationRecord] = None

    @classmethod
    def initial(cls, problem: ProblemSpec, config: SolverConfig,
                sched: ControlSchedule) -> "EngineState":
        start = config.start
        if start is None:
            start = PrimalDualPoint(BlockVector.zeros(problem.signature.primal_dims),
                                    BlockVector.zeros(problem.signature.dual_dims))
        current = problem.projector.project(start)
        return cls(n=0, current=current, anchor=current,
                   a_points=[None] * problem.m, b_points=[None] * problem.p,
                   buffer=LagBuffer(sched.D, current))


@dataclass
class RunResult:
    status: str  # "solved" | "max_iter" | "exact_point" | "inconsistent"
    final: PrimalDualPoint
    trace: list[IterationRecord]
    iterations: int
    message: str = ""
    metadata: dict = field(default_factory=dict)


class _PerturbState:
    """Run-local RNG and acceptance counters for injected resolvent errors."""

    def __init__(self, rule: PerturbationRule):
        self.rng = np.random.default_rng(rule.seed)
        self.scale = rule.scale
        self.accepted = 0
        self.rejected = 0

    def coefficient(self) -> float:
        return float(self.rng.uniform(-self.scale, self.scale))


def _fresh_primal(problem: ProblemSpec, config: SolverConfig,
                  perturb: Optional[_PerturbState], i: int, read_at: int,
                  past: PrimalDualPoint) -> GraphPoint:
    lstar = adjoint_block(problem.coupling, past.v_star, i)
    gamma = _stepsize_at(config.gamma, i, read_at)
    op = problem.A_ops[i]
    zst = problem.z_star.blocks[i]
    x_i = past.x.blocks[i]
    exact = graph_point_primal(op, zst, gamma, x_i, lstar, eps_prox=config.eps_prox)
    if perturb is None:
        return exact
    e = perturb.coefficient() * (x_i - exact.point)
    cap = 0.95 * config.inexact.beta
    e_norm = float(np.linalg.norm(e))
    if e_norm > cap:
        e = e * (cap / e_norm)
    candidate = graph_point_primal(op, zst, gamma, x_i, lstar, error=e,
                                   eps_prox=config.eps_prox)
    check = validate_inexact_primal(op, candidate, x_i, lstar, zst, gamma, config.inexact)
    if check.accepted:
        perturb.accepted += 1
        return candidate
    perturb.rejected += 1
    return exact


def _fresh_dual(problem: ProblemSpec, config: SolverConfig,
                perturb: Optional[_PerturbState], k: int, read_at: int,
                past: PrimalDualPoint) -> GraphPoint:
    l_k = forward_block(problem.coupling, past.x, k)
    mu = _stepsize_at(config.mu, k, read_at)
    op = problem.B_ops[k]
    r_k = problem.r.blocks[k]
    v_k = past.v_star.blocks[k]
    exact = graph_point_dual(op, r_k, mu, l_k, v_k, eps_prox=config.eps_prox)
    if perturb is None:
        return exact
    f = perturb.coefficient() * (l_k - exact.point)
    cap = 0.95 * config.inexact.delta
    f_norm = float(np.linalg.norm(f))
    if f_norm > cap:
        f = f * (cap / f_norm)
    candidate = graph_point_dual(op, r_k, mu, l_k, v_k, error=f, eps_prox=config.eps_prox)
    check = validate_inexact_dual(op, candidate, l_k, v_k, r_k, mu, config.inexact)
    if check.accepted:
        perturb.accepted += 1
        return candidate
    perturb.rejected += 1
    return exact


def iteration_record(n: int, theta: float, tau: float, violation: float,
                     problem: ProblemSpec, current: PrimalDualPoint,
                     a_points: Sequence[GraphPoint],
                     b_points: Sequence[GraphPoint]) -> IterationRecord:
    """Assemble the diagnostics row for one iteration."""
    L = problem.coupling
    rp = 0.0
    rdm = 0.0
    for i in range(problem.m):
        diff = current.x.blocks[i] - a_points[i].point
        rp += float(np.dot(diff, diff))
        w = a_points[i].dual + adjoint_block(L, current.v_star, i)
        rdm += float(np.dot(w, w))
    rc = 0.0
    rd = 0.0
    for k in range(problem.p):
        diff = forward_block(L, current.x, k) - b_points[k].point
        rc += float(np.dot(diff, diff))
        w = b_points[k].dual - current.v_star.blocks[k]
        rd += float(np.dot(w, w))
    dists = tuple(pd_norm(current - z) for z in problem.known_Z_points)
    return IterationRecord(n, theta, tau, violation,
                           math.sqrt(rp), math.sqrt(rdm), math.sqrt(rc), math.sqrt(rd),
                           dists)


def haugazeau_update(anchor: PrimalDualPoint, current: PrimalDualPoint,
                     candidate: PrimalDualPoint,
                     rho_tol: float = RHO_TOL) -> PrimalDualPoint:
    """Project the anchor onto the intersection of the two bracketing half-spaces.

    The three-case closed form branches on chi = <anchor-current,
    current-candidate>, the squared norms mu, nu of those differences, and
    the Gram determinant rho = mu*nu - chi^2 (clamped at 0, which exact
    arithmetic guarantees).  A numerically zero rho with clearly negative
    chi means the two half-spaces miss each other, which is impossible when
    a solution exists; it is reported instead of silently patched.
    """
    diff_ay = anchor - current
    diff_yz = current - candidate
    chi = pd_inner(diff_ay, diff_yz)
    mu = pd_norm_sq(diff_ay)
    nu = pd_norm_sq(diff_yz)
    rho = max(mu * nu - chi * chi, 0.0)
    if rho <= rho_tol * mu * nu:
        if chi >= -rho_tol * (mu + nu):
            return candidate
        raise InconsistencyError(
            f"empty outer approximation (chi={chi:.3e}, mu={mu:.3e}, nu={nu:.3e})")
    if chi * nu >= rho:
        return anchor + (1.0 + chi / nu) * (candidate - current)
    return current + (nu / rho) * (chi * diff_ay + mu * (candidate - current))


def _check_step_invariants(problem: ProblemSpec, config: SolverConfig,
                           state: EngineState, sep, nxt: PrimalDualPoint) -> None:
    """Test-mode assertions evaluated every iteration."""
    for side, ops, points, shift in (
            ("primal", problem.A_ops, state.a_points, problem.z_star.blocks),
            ("dual", problem.B_ops, state.b_points, problem.r.blocks)):
        for idx, gp in enumerate(points):
            if side == "primal":
                res = membership_residual(ops[idx], gp.point, gp.dual + shift[idx])
            else:
                res = membership_residual(ops[idx], gp.point - shift[idx], gp.dual)
            if res > MEMBERSHIP_TOL * (1.0 + float(np.linalg.norm(gp.point))):
                raise InvariantViolation(
                    f"{side} graph point {idx} off its graph at n={state.n}: {res:.3e}")
    for j, z in enumerate(problem.known_Z_points):
        gap = inner(z.x, sep.normal_primal) + inner(sep.normal_dual, z.v_star) - sep.level
        if gap > HALFSPACE_TOL:
            raise InvariantViolation(
                f"half-space at n={state.n} cuts off fixture solution {j} by {gap:.3e}")
        if config.mode == "fejer":
            if pd_norm(nxt - z) > pd_norm(state.current - z) + FEJER_TOL:
                raise InvariantViolation(
                    f"distance to fixture solution {j} increased at n={state.n}")
    if config.mode == "haugazeau":
        if pd_norm(nxt - state.anchor) < pd_norm(state.current - state.anchor) - ANCHOR_TOL:
            raise InvariantViolation(f"anchor distance decreased at n={state.n}")
    if problem.projector.residual(nxt) > SUBSPACE_ITERATE_TOL:
        raise InvariantViolation(f"iterate left the subspace at n={state.n}")


def _step(state: EngineState, problem: ProblemSpec, sched: ControlSchedule,
          config: SolverConfig, perturb: Optional[_PerturbState],
          check_invariants: bool):
    """One full iteration; returns None or a terminal (status, point, message)."""
    n = state.n
    current = state.current
    I_n, K_n = sched.blocks_at(n)
    for i in I_n:
        read_at = sched.lag_primal(i, n)
        state.a_points[i] = _fresh_primal(problem, config, perturb, i, read_at,
                                          state.buffer.get(read_at))
    for k in K_n:
        read_at = sched.lag_dual(k, n)
        state.b_points[k] = _fresh_dual(problem, config, perturb, k, read_at,
                                        state.buffer.get(read_at))
    sep, raw = build_separator(state.a_points, state.b_points, problem)
    candidate = PrimalDualPoint(
        BlockVector([gp.point for gp in state.a_points], copy=False),
        BlockVector([gp.dual for gp in state.b_points], copy=False))
    exact = detect_exact_solution(raw, candidate, config.exact_tol)
    violation = halfspace_violation(current, sep)
    theta, half = project_halfspace(current, sep, _relaxation_at(config, n),
                                    config.tau_zero_tol)
    nxt = half if config.mode == "fejer" else haugazeau_update(state.anchor, current, half)
    record = iteration_record(n, theta, sep.norm_sq, violation, problem, current,
                              state.a_points, state.b_points)
    state.last_record = record
    if n % config.trace_stride == 0:
        state.trace.append(record)
    finite = math.isfinite(record.residual_sum()) and math.isfinite(theta) \
        and all(math.isfinite(float(np.sum(b))) for b in (*nxt.x.blocks, *nxt.v_star.blocks))
    if not finite:
        return "inconsistent", current, f"non-finite values at iteration {n}"
    if exact is not None:
        return "exact_point", exact, f"separator normal vanished at iteration {n}"
    if check_invariants:
        _check_step_invariants(problem, config, state, sep, nxt)
    state.current = nxt
    state.buffer.push(n + 1, nxt)
    state.n = n + 1
    return None


def step_fejer(state: EngineState, problem: ProblemSpec, sched: ControlSchedule,
               config: SolverConfig):
    """Advance the relaxed-projection engine by one iteration."""
    if config.mode != "fejer":
        raise ConfigError("step_fejer requires mode='fejer'")
    return _step(state, problem, sched, config, None, False)


def step_haugazeau(state: EngineState, problem: ProblemSpec, sched: ControlSchedule,
                   config: SolverConfig):
    """Advance the best-approximation engine by one iteration."""
    if config.mode != "haugazeau":
        raise ConfigError("step_haugazeau requires mode='haugazeau'")
    return _step(state, problem, sched, config, None, False)


def _describe_rule(rule) -> str:
    if rule is None:
        return "default"
    if isinstance(rule, (int, float)):
        return repr(float(rule))
    if callable(rule):
        return "callable"
    return "per-block" if rule else "empty"


def run(problem: ProblemSpec, config: SolverConfig,
        sched: Optional[ControlSchedule] = None,
        check_invariants: bool = False) -> RunResult:
    """Iterate until the residual test, an exact solution, or the budget.

    Stops when the sum of the four residuals drops below
    resid_tol * (1 + norm of the iterate they were measured at).
    """
    config.validate(problem)
    if sched is None:
        sched = synchronous(problem.m, problem.p)
    cert = validate(sched, problem.m, problem.p)
    if not cert.certified:
        raise ConfigError(f"schedule not certified: {cert.reason} (n={cert.at})")
    perturb = _PerturbState(config.perturbation) if config.perturbation else None
    state = EngineState.initial(problem, config, sched)
    if config.relaxation is None:
        relaxation_desc = f"{_relaxation_at(config, 0)!r} (default)"
    else:
        relaxation_desc = _describe_rule(config.relaxation)
    metadata = {
        "mode": config.mode,
        "epsilon": config.epsilon,
        "eps_prox": config.eps_prox,
        "relaxation": relaxation_desc,
        "gamma": _describe_rule(config.gamma),
        "mu": _describe_rule(config.mu),
        "schedule_M": sched.M,
        "schedule_D": sched.D,
    }

    def result(status: str, final: PrimalDualPoint, message: str = "") -> RunResult:
        if perturb is not None:
            metadata["perturb_accepted"] = perturb.accepted
            metadata["perturb_rejected"] = perturb.rejected
        return RunResult(status, final, state.trace, state.n, message, metadata)

    for _ in range(config.max_iter):
        pre_point = state.current
        pre_norm = pd_norm(pre_point)
        try:
            terminal = _step(state, problem, sched, config, perturb, check_invariants)
        except InconsistencyError as exc:
            return result("inconsistent", state.current, str(exc))
        if terminal is not None:
            status, final, message = terminal
            if status == "exact_point":
                state.n += 1
            return result(status, final, message)
        rec = state.last_record
        if rec.residual_sum() <= config.resid_tol * (1.0 + pre_norm):
            # the residuals certify the point the step started from
            return result("solved", pre_point)
    return result("max_iter", state.current,
                  f"residual target not reached in {config.max_iter} iterations")
