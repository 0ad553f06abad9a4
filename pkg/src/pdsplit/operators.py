"""Registry of maximally monotone operators with exact resolvents.

The registry is closed on purpose: six kinds, each with a closed-form or
direct-solve resolvent, so every downstream guarantee can be tested
exhaustively.  To extend, add a kind constructor, a branch in
:func:`resolvent`, and (if it is a subdifferential) a branch in
:func:`function_value`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DimensionError, NumericalError

OPERATOR_KINDS = (
    "zero",
    "l1_norm",
    "box_indicator",
    "quadratic",
    "affine_monotone",
    "normal_cone_box",
)

# Kinds that are subdifferentials of an explicit convex function, so their
# resolvent is a proximity operator and can be cross-checked by minimization.
PROX_REPRESENTABLE = ("zero", "l1_norm", "box_indicator", "quadratic")

PSD_EIGENVALUE_FLOOR = -1e-10
DEFAULT_EPS_PROX = 1e-2


@dataclass(frozen=True)
class MonotoneOp:
    """A monotone operator from the closed registry: a kind tag plus parameters."""

    kind: str
    dim: int
    params: dict

    @property
    def prox_representable(self) -> bool:
        return self.kind in PROX_REPRESENTABLE

    def __repr__(self) -> str:
        return f"MonotoneOp(kind={self.kind!r}, dim={self.dim})"


def _as_bound(v, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = np.full(dim, float(arr))
    if arr.shape != (dim,):
        raise DimensionError(f"{name} has shape {arr.shape}, expected ({dim},)")
    return arr


def _check_sym_psd(S: np.ndarray, name: str) -> None:
    scale = 1.0 + float(np.abs(S).max(initial=0.0))
    if float(np.abs(S - S.T).max(initial=0.0)) > 1e-10 * scale:
        raise ConfigError(f"{name} is not symmetric")
    lo = float(np.linalg.eigvalsh(0.5 * (S + S.T)).min())
    if lo < PSD_EIGENVALUE_FLOOR:
        raise ConfigError(f"{name} has eigenvalue {lo:.3e} below the PSD floor")


def zero(dim: int) -> MonotoneOp:
    """The zero operator; its resolvent is the identity."""
    return MonotoneOp("zero", int(dim), {})


def l1_norm(dim: int, weight: float = 1.0) -> MonotoneOp:
    """Subdifferential of w * ||.||_1; resolvent is coordinatewise soft-thresholding."""
    w = float(weight)
    if w <= 0:
        raise ConfigError(f"l1_norm weight must be > 0, got {w}")
    return MonotoneOp("l1_norm", int(dim), {"weight": w})


def _box(kind: str, lo, hi) -> MonotoneOp:
    lo_arr = np.atleast_1d(np.asarray(lo, dtype=float))
    hi_arr = _as_bound(hi, lo_arr.shape[0], "hi")
    lo_arr = _as_bound(lo_arr, lo_arr.shape[0], "lo")
    if np.any(lo_arr > hi_arr):
        raise ConfigError("box bounds must satisfy lo <= hi coordinatewise")
    return MonotoneOp(kind, lo_arr.shape[0], {"lo": lo_arr, "hi": hi_arr})


def box_indicator(lo, hi) -> MonotoneOp:
    """Subdifferential of the indicator of [lo, hi]; resolvent clamps to the box."""
    return _box("box_indicator", lo, hi)


def normal_cone_box(lo, hi) -> MonotoneOp:
    """Normal cone operator of [lo, hi]; same resolvent as the box indicator."""
    return _box("normal_cone_box", lo, hi)


def quadratic(Q, q=None) -> MonotoneOp:
    """Gradient of the convex quadratic x -> x'Qx/2 + q'x with Q symmetric PSD."""
    Q_arr = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q_arr.shape[0] != Q_arr.shape[1]:
        raise DimensionError(f"Q must be square, got {Q_arr.shape}")
    _check_sym_psd(Q_arr, "quadratic Q")
    d = Q_arr.shape[0]
    q_arr = np.zeros(d) if q is None else _as_bound(q, d, "q")
    return MonotoneOp("quadratic", d, {"Q": Q_arr.copy(), "q": q_arr})


def affine_monotone(M, c=None) -> MonotoneOp:
    """Affine map x -> Mx + c with M + M' PSD (M itself may be asymmetric)."""
    M_arr = np.atleast_2d(np.asarray(M, dtype=float))
    if M_arr.shape[0] != M_arr.shape[1]:
        raise DimensionError(f"M must be square, got {M_arr.shape}")
    _check_sym_psd(M_arr + M_arr.T, "affine_monotone M + M'")
    d = M_arr.shape[0]
    c_arr = np.zeros(d) if c is None else _as_bound(c, d, "c")
    return MonotoneOp("affine_monotone", d, {"M": M_arr.copy(), "c": c_arr})


def resolvent(op: MonotoneOp, gamma: float, u: np.ndarray) -> np.ndarray:
    """Evaluate (Id + gamma*Op)^{-1} at u.

    Returns the unique a with (u - a)/gamma in Op(a).
    """
    if gamma <= 0:
        raise ConfigError(f"resolvent parameter must be > 0, got {gamma}")
    u = np.asarray(u, dtype=float)
    if u.shape != (op.dim,):
        raise DimensionError(f"resolvent input has shape {u.shape}, expected ({op.dim},)")
    kind = op.kind
    if kind == "zero":
        return u.copy()
    if kind == "l1_norm":
        t = gamma * op.params["weight"]
        return np.sign(u) * np.maximum(np.abs(u) - t, 0.0)
    if kind in ("box_indicator", "normal_cone_box"):
        return np.minimum(np.maximum(u, op.params["lo"]), op.params["hi"])
    if kind == "quadratic":
        A = np.eye(op.dim) + gamma * op.params["Q"]
        rhs = u - gamma * op.params["q"]
    elif kind == "affine_monotone":
        A = np.eye(op.dim) + gamma * op.params["M"]
        rhs = u - gamma * op.params["c"]
    else:
        raise ConfigError(f"unknown operator kind {kind!r}")
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:  # cannot happen for monotone inputs
        raise NumericalError(f"resolvent solve failed for kind {kind!r}: {exc}") from exc


def function_value(op: MonotoneOp, x: np.ndarray) -> float:
    """Value of the convex function whose subdifferential the operator is.

    Only defined for prox-representable kinds; the box indicator returns
    +inf outside its box.
    """
    x = np.asarray(x, dtype=float)
    if op.kind == "zero":
        return 0.0
    if op.kind == "l1_norm":
        return op.params["weight"] * float(np.abs(x).sum())
    if op.kind == "box_indicator":
        if np.all(x >= op.params["lo"] - 1e-12) and np.all(x <= op.params["hi"] + 1e-12):
            return 0.0
        return math.inf
    if op.kind == "quadratic":
        return 0.5 * float(x @ op.params["Q"] @ x) + float(op.params["q"] @ x)
    raise ConfigError(f"kind {op.kind!r} is not prox-representable")


@dataclass(frozen=True)
class GraphPoint:
    """A pair (point, dual) claimed to satisfy dual in Op(point)."""

    point: np.ndarray
    dual: np.ndarray


def membership_residual(op: MonotoneOp, point: np.ndarray, dual: np.ndarray) -> float:
    """Distance of (point, dual) from the operator graph, via the resolvent test.

    dual in Op(point) iff point = resolvent(op, 1, point + dual).
    """
    return float(np.linalg.norm(point - resolvent(op, 1.0, point + dual)))


def check_graph_membership(op: MonotoneOp, gp: GraphPoint, tol: float) -> bool:
    return membership_residual(op, gp.point, gp.dual) <= tol


def default_membership_tol(point: np.ndarray) -> float:
    return 1e-9 * (1.0 + float(np.linalg.norm(point)))


def _check_prox_param(value: float, eps_prox: float, name: str) -> None:
    if not (eps_prox <= value <= 1.0 / eps_prox):
        raise ConfigError(
            f"{name}={value} outside the admissible range [{eps_prox}, {1.0 / eps_prox}]")


def graph_point_primal(op: MonotoneOp, z_star: np.ndarray, gamma: float,
                       x_lag: np.ndarray, lstar: np.ndarray,
                       error: Optional[np.ndarray] = None,
                       eps_prox: float = DEFAULT_EPS_PROX) -> GraphPoint:
    """Fresh graph point for one primal operator from (possibly lagged) reads.

    Exact mode (error=None) returns (a, a*) with
        a  = resolvent(op, gamma, x_lag + gamma*(z_star - lstar))
        a* = (x_lag - a)/gamma - lstar,
    so that a + gamma*(a* + lstar) = x_lag and a* + z_star in Op(a).
    A nonzero error perturbs the resolvent input and enters a* the same way,
    preserving graph membership while shifting the reconstruction identity.
    """
    _check_prox_param(gamma, eps_prox, "gamma")
    u = x_lag + gamma * (z_star - lstar)
    if error is None:
        a = resolvent(op, gamma, u)
        a_dual = (x_lag - a) / gamma - lstar
    else:
        a = resolvent(op, gamma, u + error)
        a_dual = (x_lag - a + error) / gamma - lstar
    return GraphPoint(a, a_dual)


def graph_point_dual(op: MonotoneOp, r: np.ndarray, mu: float,
                     l_k: np.ndarray, v_lag: np.ndarray,
                     error: Optional[np.ndarray] = None,
                     eps_prox: float = DEFAULT_EPS_PROX) -> GraphPoint:
    """Fresh graph point for one dual operator from (possibly lagged) reads.

    Exact mode returns (b, b*) with
        b  = r + resolvent(op, mu, l_k + mu*v_lag - r)
        b* = v_lag + (l_k - b)/mu,
    so that b + mu*(b* - v_lag) = l_k and b* in Op(b - r).
    """
    _check_prox_param(mu, eps_prox, "mu")
    u = l_k + mu * v_lag - r
    if error is None:
        b = r + resolvent(op, mu, u)
        b_dual = v_lag + (l_k - b) / mu
    else:
        b = r + resolvent(op, mu, u + error)
        b_dual = v_lag + (l_k - b + error) / mu
    return GraphPoint(b, b_dual)


@dataclass(frozen=True)
class InexactnessBudget:
    """Bounds for accepting approximate resolvent evaluations.

    beta/sigma govern the primal side, delta/zeta the dual side.
    """

    beta: float
    sigma: float
    delta: float
    zeta: float

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ConfigError(f"beta must be > 0, got {self.beta}")
        if not 0 <= self.sigma < 1:
            raise ConfigError(f"sigma must lie in [0, 1), got {self.sigma}")
        if not self.delta > 0:
            raise ConfigError(f"delta must be > 0, got {self.delta}")
        if not 0 <= self.zeta < 1:
            raise ConfigError(f"zeta must lie in [0, 1), got {self.zeta}")


@dataclass(frozen=True)
class InexactCheck:
    """Outcome of validating an approximate graph point."""

    accepted: bool
    reason: Optional[str] = None  # None when accepted


def validate_inexact_primal(op: MonotoneOp, candidate: GraphPoint,
                            x_lag: np.ndarray, lstar: np.ndarray, z_star: np.ndarray,
                            gamma: float, budget: InexactnessBudget,
                            membership_tol: Optional[float] = None) -> InexactCheck:
    """Check an approximate primal graph point against the error budget.

    The implied error is e = a + gamma*(a* + lstar) - x_lag.  Conditions are
    checked in order; the first violation is reported:
      membership   (a, z* + a*) must lie in the operator graph
      norm-bound   ||e|| <= beta
      sigma-dual   <e, a* + l*> <= sigma * gamma * ||a* + l*||^2
      sigma-primal <x - a, e>  >= -sigma * ||x - a||^2
    """
    a, a_dual = candidate.point, candidate.dual
    tol = default_membership_tol(a) if membership_tol is None else membership_tol
    if membership_residual(op, a, a_dual + z_star) > tol:
        return InexactCheck(False, "membership")
    e = a + gamma * (a_dual + lstar) - x_lag
    if float(np.linalg.norm(e)) > budget.beta:
        return InexactCheck(False, "norm-bound")
    w = a_dual + lstar
    if float(np.dot(e, w)) > budget.sigma * gamma * float(np.dot(w, w)):
        return InexactCheck(False, "sigma-dual")
    d = x_lag - a
    if float(np.dot(d, e)) < -budget.sigma * float(np.dot(d, d)):
        return InexactCheck(False, "sigma-primal")
    return InexactCheck(True)


def validate_inexact_dual(op: MonotoneOp, candidate: GraphPoint,
                          l_k: np.ndarray, v_lag: np.ndarray, r: np.ndarray,
                          mu: float, budget: InexactnessBudget,
                          membership_tol: Optional[float] = None) -> InexactCheck:
    """Dual-side counterpart of :func:`validate_inexact_primal`.

    The implied error is f = b + mu*b* - l - mu*v_lag; conditions in order:
      membership   (b - r, b*) must lie in the operator graph
      norm-bound   ||f|| <= delta
      zeta-primal  <l - b, f> >= -zeta * ||l - b||^2
      zeta-dual    <f, b* - v*> <= zeta * mu * ||b* - v*||^2
    """
    b, b_dual = candidate.point, candidate.dual
    tol = default_membership_tol(b) if membership_tol is None else membership_tol
    if membership_residual(op, b - r, b_dual) > tol:
        return InexactCheck(False, "membership")
    f = b + mu * b_dual - l_k - mu * v_lag
    if float(np.linalg.norm(f)) > budget.delta:
        return InexactCheck(False, "norm-bound")
    d = l_k - b
    if float(np.dot(d, f)) < -budget.zeta * float(np.dot(d, d)):
        return InexactCheck(False, "zeta-primal")
    w = b_dual - v_lag
    if float(np.dot(f, w)) > budget.zeta * mu * float(np.dot(w, w)):
        return InexactCheck(False, "zeta-dual")
    return InexactCheck(True)
