"""Canonical on-disk formats: problem, schedule and config JSON, trace CSV.

One format per artifact, no auto-detection; floats are written with full
round-trip precision so byte-identical reruns are achievable.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from . import operators as ops
from .blockspace import BlockVector, CouplingMap, PrimalDualPoint, SpaceSignature
from .engine import IterationRecord, PerturbationRule, SolverConfig
from .errors import PdsplitError, SchemaError
from .operators import InexactnessBudget, MonotoneOp
from .schedule import ControlSchedule, periodic, random_admissible
from .separator import ProblemSpec, SubspaceSpec

PathLike = Union[str, Path]


def _load_json(path: PathLike) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _need(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise SchemaError(f"{where}: missing required field {key!r}")
    return obj[key]


# ---------------------------------------------------------------- operators

def _op_to_dict(op: MonotoneOp) -> dict:
    out: dict = {"kind": op.kind, "dim": op.dim}
    for name, value in op.params.items():
        out[name] = value.tolist() if isinstance(value, np.ndarray) else value
    return out


def _op_from_dict(d: dict, where: str) -> MonotoneOp:
    kind = _need(d, "kind", where)
    try:
        if kind == "zero":
            return ops.zero(_need(d, "dim", where))
        if kind == "l1_norm":
            return ops.l1_norm(_need(d, "dim", where), d.get("weight", 1.0))
        if kind == "box_indicator":
            return ops.box_indicator(_need(d, "lo", where), _need(d, "hi", where))
        if kind == "normal_cone_box":
            return ops.normal_cone_box(_need(d, "lo", where), _need(d, "hi", where))
        if kind == "quadratic":
            return ops.quadratic(_need(d, "Q", where), d.get("q"))
        if kind == "affine_monotone":
            return ops.affine_monotone(_need(d, "M", where), d.get("c"))
    except PdsplitError as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    raise SchemaError(f"{where}: unknown operator kind {kind!r}")


# ------------------------------------------------------------------ problem

def _blocks_to_lists(v: BlockVector) -> list:
    return [b.tolist() for b in v.blocks]


def _point_to_dict(z: PrimalDualPoint) -> dict:
    return {"x": _blocks_to_lists(z.x), "v_star": _blocks_to_lists(z.v_star)}


def _point_from_dict(d: dict, where: str) -> PrimalDualPoint:
    try:
        return PrimalDualPoint(BlockVector(_need(d, "x", where)),
                               BlockVector(_need(d, "v_star", where)))
    except PdsplitError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def problem_to_dict(spec: ProblemSpec) -> dict:
    sub: dict = {"variant": spec.subspace.variant}
    if spec.subspace.C is not None:
        sub["C"] = spec.subspace.C.tolist()
    if spec.subspace.A1 is not None:
        sub["A1"] = spec.subspace.A1.tolist()
    return {
        "signature": {"primal_dims": list(spec.signature.primal_dims),
                      "dual_dims": list(spec.signature.dual_dims)},
        "A_ops": [_op_to_dict(op) for op in spec.A_ops],
        "B_ops": [_op_to_dict(op) for op in spec.B_ops],
        "coupling": [{"k": k, "i": i, "matrix": mat.tolist()}
                     for (k, i), mat in sorted(spec.coupling.entries.items())],
        "z_star": _blocks_to_lists(spec.z_star),
        "r": _blocks_to_lists(spec.r),
        "subspace": sub,
        "known_Z_points": [_point_to_dict(z) for z in spec.known_Z_points],
    }


def problem_from_dict(data: dict, where: str = "problem") -> ProblemSpec:
    sig_d = _need(data, "signature", where)
    try:
        signature = SpaceSignature(tuple(_need(sig_d, "primal_dims", f"{where}.signature")),
                                   tuple(_need(sig_d, "dual_dims", f"{where}.signature")))
        A_ops = [_op_from_dict(d, f"{where}.A_ops[{j}]")
                 for j, d in enumerate(_need(data, "A_ops", where))]
        B_ops = [_op_from_dict(d, f"{where}.B_ops[{j}]")
                 for j, d in enumerate(_need(data, "B_ops", where))]
        entries = {}
        for j, ent in enumerate(_need(data, "coupling", where)):
            loc = f"{where}.coupling[{j}]"
            entries[(int(_need(ent, "k", loc)), int(_need(ent, "i", loc)))] = \
                np.asarray(_need(ent, "matrix", loc), dtype=float)
        coupling = CouplingMap(signature, entries)
        sub_d = data.get("subspace", {"variant": "full"})
        subspace = SubspaceSpec(_need(sub_d, "variant", f"{where}.subspace"),
                                C=sub_d.get("C"), A1=sub_d.get("A1"))
        fixtures = [_point_from_dict(d, f"{where}.known_Z_points[{j}]")
                    for j, d in enumerate(data.get("known_Z_points", []))]
        return ProblemSpec(signature, A_ops, B_ops, coupling,
                           BlockVector(_need(data, "z_star", where)),
                           BlockVector(_need(data, "r", where)),
                           subspace, fixtures)
    except SchemaError:
        raise
    except PdsplitError as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: malformed problem file: {exc}") from exc


def parse_problem(path: PathLike) -> ProblemSpec:
    return problem_from_dict(_load_json(path), where=str(path))


def write_problem(spec: ProblemSpec, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(spec), fh, indent=1)
        fh.write("\n")


def parse_point(path: PathLike) -> PrimalDualPoint:
    return _point_from_dict(_load_json(path), where=str(path))


def write_point(point: PrimalDualPoint, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_point_to_dict(point), fh, indent=1)
        fh.write("\n")


# ----------------------------------------------------------------- schedule

def schedule_to_dict(s: ControlSchedule) -> dict:
    c: dict[str, dict[str, int]] = {}
    for (i, n), val in sorted(s.c.items()):
        c.setdefault(str(i), {})[str(n)] = int(val)
    d: dict[str, dict[str, int]] = {}
    for (k, n), val in sorted(s.d.items()):
        d.setdefault(str(k), {})[str(n)] = int(val)
    return {"M": s.M, "D": s.D, "horizon": s.horizon,
            "I_seq": [list(t) for t in s.I_seq],
            "K_seq": [list(t) for t in s.K_seq],
            "c": c, "d": d}


def _lag_table(data: dict, where: str) -> dict[tuple[int, int], int]:
    out = {}
    try:
        for idx, per_n in data.items():
            for n, val in per_n.items():
                out[(int(idx), int(n))] = int(val)
    except (TypeError, ValueError, AttributeError) as exc:
        raise SchemaError(f"{where}: malformed lag table: {exc}") from exc
    return out


def schedule_from_dict(data: dict, where: str = "schedule") -> ControlSchedule:
    gen = data.get("type")
    if gen is not None:
        try:
            if gen == "periodic":
                pattern = data.get("lag", {"pattern": "zero"})
                name = _need(pattern, "pattern", f"{where}.lag")
                if name == "zero":
                    lag = ("zero",)
                elif name == "constant":
                    lag = ("constant", int(_need(pattern, "value", f"{where}.lag")))
                elif name == "sawtooth":
                    lag = ("sawtooth", int(_need(pattern, "max", f"{where}.lag")))
                else:
                    raise SchemaError(f"{where}.lag: unknown pattern {name!r}")
                return periodic(int(_need(data, "m", where)), int(_need(data, "p", where)),
                                int(_need(data, "group_size", where)),
                                int(_need(data, "horizon", where)), lag)
            if gen == "random":
                return random_admissible(
                    int(_need(data, "m", where)), int(_need(data, "p", where)),
                    int(_need(data, "M", where)), int(_need(data, "D", where)),
                    int(_need(data, "horizon", where)), int(_need(data, "seed", where)))
        except SchemaError:
            raise
        except PdsplitError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
        raise SchemaError(f"{where}: unknown generator type {gen!r}")
    try:
        return ControlSchedule(
            horizon=int(_need(data, "horizon", where)),
            I_seq=[tuple(s) for s in _need(data, "I_seq", where)],
            K_seq=[tuple(s) for s in _need(data, "K_seq", where)],
            c=_lag_table(data.get("c", {}), where),
            d=_lag_table(data.get("d", {}), where),
            M=int(_need(data, "M", where)), D=int(_need(data, "D", where)))
    except SchemaError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def parse_schedule(path: PathLike) -> ControlSchedule:
    return schedule_from_dict(_load_json(path), where=str(path))


def write_schedule(s: ControlSchedule, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schedule_to_dict(s), fh, indent=1)
        fh.write("\n")


# ------------------------------------------------------------------- config

_CONFIG_KEYS = {"mode", "epsilon", "relaxation", "gamma", "mu", "eps_prox",
                "max_iter", "resid_tol", "tau_zero_tol", "exact_tol",
                "trace_stride", "start", "inexact", "perturbation"}


def config_from_dict(data: dict, where: str = "config") -> SolverConfig:
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise SchemaError(f"{where}: unknown config fields {sorted(unknown)}")
    kwargs: dict = {}
    for key in ("mode", "epsilon", "relaxation", "gamma", "mu", "eps_prox",
                "max_iter", "resid_tol", "tau_zero_tol", "exact_tol", "trace_stride"):
        if key in data:
            kwargs[key] = data[key]
    if "start" in data and data["start"] is not None:
        kwargs["start"] = _point_from_dict(data["start"], f"{where}.start")
    if "inexact" in data and data["inexact"] is not None:
        b = data["inexact"]
        loc = f"{where}.inexact"
        try:
            kwargs["inexact"] = InexactnessBudget(
                float(_need(b, "beta", loc)), float(_need(b, "sigma", loc)),
                float(_need(b, "delta", loc)), float(_need(b, "zeta", loc)))
        except PdsplitError as exc:
            raise SchemaError(f"{loc}: {exc}") from exc
    if "perturbation" in data and data["perturbation"] is not None:
        pt = data["perturbation"]
        loc = f"{where}.perturbation"
        kwargs["perturbation"] = PerturbationRule(
            int(_need(pt, "seed", loc)), float(_need(pt, "scale", loc)))
    return SolverConfig(**kwargs)


def config_to_dict(config: SolverConfig) -> dict:
    for name, rule in (("relaxation", config.relaxation), ("gamma", config.gamma),
                       ("mu", config.mu)):
        if callable(rule):
            raise SchemaError(f"cannot serialize a callable {name} rule; "
                              "use a constant or a list")
    out: dict = {"mode": config.mode, "epsilon": config.epsilon,
                 "gamma": config.gamma, "mu": config.mu,
                 "eps_prox": config.eps_prox, "max_iter": config.max_iter,
                 "resid_tol": config.resid_tol, "tau_zero_tol": config.tau_zero_tol,
                 "exact_tol": config.exact_tol, "trace_stride": config.trace_stride}
    if config.relaxation is not None:
        out["relaxation"] = config.relaxation
    if config.start is not None:
        out["start"] = _point_to_dict(config.start)
    if config.inexact is not None:
        b = config.inexact
        out["inexact"] = {"beta": b.beta, "sigma": b.sigma, "delta": b.delta, "zeta": b.zeta}
    if config.perturbation is not None:
        out["perturbation"] = {"seed": config.perturbation.seed,
                               "scale": config.perturbation.scale}
    return out


def parse_config(path: PathLike) -> SolverConfig:
    return config_from_dict(_load_json(path), where=str(path))


def write_config(config: SolverConfig, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=1)
        fh.write("\n")


# -------------------------------------------------------------------- trace

TRACE_COLUMNS = ("n", "theta", "tau", "violation",
                 "res_primal", "res_dualmap", "res_coupling", "res_dual")


def trace_header(fixture_count: int) -> str:
    cols = list(TRACE_COLUMNS) + [f"dist_z{j}" for j in range(fixture_count)]
    return ",".join(cols)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_trace(records: list[IterationRecord], path: PathLike,
                fixture_count: int = None) -> None:
    """Write the iteration trace as deterministic CSV (17 significant digits)."""
    if fixture_count is None:
        fixture_count = len(records[0].dists) if records else 0
    lines = [trace_header(fixture_count)]
    for rec in records:
        cells = [str(rec.n), _fmt(rec.theta), _fmt(rec.tau), _fmt(rec.violation),
                 _fmt(rec.res_primal), _fmt(rec.res_dualmap),
                 _fmt(rec.res_coupling), _fmt(rec.res_dual)]
        cells.extend(_fmt(d) for d in rec.dists)
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def read_trace(path: PathLike) -> tuple[list[str], list[list[float]]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines:
        raise SchemaError(f"{path}: empty trace file")
    header = lines[0].split(",")
    rows = []
    for idx, ln in enumerate(lines[1:], start=1):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise SchemaError(f"{path}: row {idx} has {len(cells)} cells, header has {len(header)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise SchemaError(f"{path}: row {idx}: {exc}") from exc
    return header, rows
