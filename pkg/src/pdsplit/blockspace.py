"""Block vectors over products of real coordinate spaces and block-sparse couplings.

Everything here is immutable after construction and safe to share between
workers; all operations are pure and allocate fresh output arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class SpaceSignature:
    """Per-block dimensions of the primal and dual product spaces."""

    primal_dims: tuple[int, ...]
    dual_dims: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "primal_dims", tuple(int(d) for d in self.primal_dims))
        object.__setattr__(self, "dual_dims", tuple(int(d) for d in self.dual_dims))
        if not self.primal_dims or not self.dual_dims:
            raise DimensionError("signature needs at least one primal and one dual block")
        if any(d < 1 for d in self.primal_dims + self.dual_dims):
            raise DimensionError("every block dimension must be >= 1")

    @property
    def m(self) -> int:
        return len(self.primal_dims)

    @property
    def p(self) -> int:
        return len(self.dual_dims)

    @property
    def total_dim(self) -> int:
        return sum(self.primal_dims) + sum(self.dual_dims)


class BlockVector:
    """Indexed family of dense real vectors, one per factor space."""

    __slots__ = ("blocks",)

    def __init__(self, blocks: Iterable, copy: bool = True):
        if copy:
            converted = []
            for j, b in enumerate(blocks):
                arr = np.atleast_1d(np.asarray(b, dtype=float))
                if arr.ndim != 1:
                    raise DimensionError(f"block {j} is not a vector (ndim={arr.ndim})")
                converted.append(arr.copy())
            self.blocks = tuple(converted)
        else:
            self.blocks = tuple(blocks)
        if not self.blocks:
            raise DimensionError("a block vector needs at least one block")

    @classmethod
    def zeros(cls, dims: Iterable[int]) -> "BlockVector":
        return cls([np.zeros(int(d)) for d in dims], copy=False)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.blocks)

    def copy(self) -> "BlockVector":
        return BlockVector([b.copy() for b in self.blocks], copy=False)

    def to_flat(self) -> np.ndarray:
        return np.concatenate(self.blocks)

    @classmethod
    def from_flat(cls, flat: np.ndarray, dims: Iterable[int]) -> "BlockVector":
        flat = np.asarray(flat, dtype=float)
        dims = tuple(int(d) for d in dims)
        if flat.shape != (sum(dims),):
            raise DimensionError(f"flat vector of length {flat.shape} does not split into {dims}")
        out, at = [], 0
        for d in dims:
            out.append(flat[at:at + d].copy())
            at += d
        return cls(out, copy=False)

    def __add__(self, other: "BlockVector") -> "BlockVector":
        return BlockVector([a + b for a, b in zip(self.blocks, other.blocks)], copy=False)

    def __sub__(self, other: "BlockVector") -> "BlockVector":
        return BlockVector([a - b for a, b in zip(self.blocks, other.blocks)], copy=False)

    def __mul__(self, alpha: float) -> "BlockVector":
        return BlockVector([alpha * b for b in self.blocks], copy=False)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"BlockVector(dims={self.dims})"


def inner(u: BlockVector, v: BlockVector) -> float:
    """Product-space inner product: sum of per-block Euclidean inner products."""
    if u.dims != v.dims:
        raise DimensionError(f"inner product between dims {u.dims} and {v.dims}")
    total = 0.0
    for a, b in zip(u.blocks, v.blocks):
        total += float(np.dot(a, b))
    return total


def norm_sq(u: BlockVector) -> float:
    total = 0.0
    for b in u.blocks:
        total += float(np.dot(b, b))
    return total


def norm(u: BlockVector) -> float:
    return math.sqrt(norm_sq(u))


@dataclass(frozen=True)
class PrimalDualPoint:
    """A pair (x, v*) of primal and dual block vectors."""

    x: BlockVector
    v_star: BlockVector

    def __add__(self, other: "PrimalDualPoint") -> "PrimalDualPoint":
        return PrimalDualPoint(self.x + other.x, self.v_star + other.v_star)

    def __sub__(self, other: "PrimalDualPoint") -> "PrimalDualPoint":
        return PrimalDualPoint(self.x - other.x, self.v_star - other.v_star)

    def __mul__(self, alpha: float) -> "PrimalDualPoint":
        return PrimalDualPoint(alpha * self.x, alpha * self.v_star)

    __rmul__ = __mul__

    def copy(self) -> "PrimalDualPoint":
        return PrimalDualPoint(self.x.copy(), self.v_star.copy())


def pd_inner(u: PrimalDualPoint, v: PrimalDualPoint) -> float:
    """Inner product on the primal-dual product space (primal blocks first)."""
    return inner(u.x, v.x) + inner(u.v_star, v.v_star)


def pd_norm_sq(u: PrimalDualPoint) -> float:
    return norm_sq(u.x) + norm_sq(u.v_star)


def pd_norm(u: PrimalDualPoint) -> float:
    return math.sqrt(pd_norm_sq(u))


class CouplingMap:
    """Block-sparse linear map between the primal and dual product spaces.

    Entry (k, i) holds the dense matrix mapping primal block i into dual
    block k; absent entries are zero maps.  The adjoint of entry (k, i) is
    its transpose.  Shapes are validated here, once, so the apply paths can
    stay lean.
    """

    __slots__ = ("signature", "entries", "_rows", "_cols")

    def __init__(self, signature: SpaceSignature, entries: Mapping[tuple[int, int], np.ndarray]):
        self.signature = signature
        table: dict[tuple[int, int], np.ndarray] = {}
        for key, mat in entries.items():
            k, i = int(key[0]), int(key[1])
            if not (0 <= k < signature.p and 0 <= i < signature.m):
                raise DimensionError(f"coupling entry ({k},{i}) outside signature range")
            arr = np.atleast_2d(np.asarray(mat, dtype=float))
            expected = (signature.dual_dims[k], signature.primal_dims[i])
            if arr.shape != expected:
                raise DimensionError(
                    f"coupling entry ({k},{i}) has shape {arr.shape}, expected {expected}")
            table[(k, i)] = arr.copy()
        self.entries = table
        rows: dict[int, list] = {k: [] for k in range(signature.p)}
        cols: dict[int, list] = {i: [] for i in range(signature.m)}
        for (k, i) in sorted(table):
            rows[k].append((i, table[(k, i)]))
            cols[i].append((k, table[(k, i)]))
        self._rows = rows
        self._cols = cols

    def to_dense(self) -> np.ndarray:
        """Assemble the full matrix (diagnostics and tests only)."""
        sig = self.signature
        out = np.zeros((sum(sig.dual_dims), sum(sig.primal_dims)))
        r_off = np.concatenate([[0], np.cumsum(sig.dual_dims)])
        c_off = np.concatenate([[0], np.cumsum(sig.primal_dims)])
        for (k, i), mat in self.entries.items():
            out[r_off[k]:r_off[k + 1], c_off[i]:c_off[i + 1]] = mat
        return out


def _check_primal(cmap: CouplingMap, x: BlockVector) -> None:
    if x.dims != cmap.signature.primal_dims:
        raise DimensionError(f"primal vector dims {x.dims} != signature {cmap.signature.primal_dims}")


def _check_dual(cmap: CouplingMap, y: BlockVector) -> None:
    if y.dims != cmap.signature.dual_dims:
        raise DimensionError(f"dual vector dims {y.dims} != signature {cmap.signature.dual_dims}")


def forward_block(cmap: CouplingMap, x: BlockVector, k: int) -> np.ndarray:
    """Dual block k of the forward map: sum over i of entry (k,i) applied to x_i."""
    acc = np.zeros(cmap.signature.dual_dims[k])
    for i, mat in cmap._rows[k]:
        acc += mat @ x.blocks[i]
    return acc


def adjoint_block(cmap: CouplingMap, y: BlockVector, i: int) -> np.ndarray:
    """Primal block i of the adjoint map: sum over k of entry (k,i) transposed applied to y_k."""
    acc = np.zeros(cmap.signature.primal_dims[i])
    for k, mat in cmap._cols[i]:
        acc += mat.T @ y.blocks[k]
    return acc


def apply_forward(cmap: CouplingMap, x: BlockVector) -> BlockVector:
    _check_primal(cmap, x)
    return BlockVector([forward_block(cmap, x, k) for k in range(cmap.signature.p)], copy=False)


def apply_adjoint(cmap: CouplingMap, y: BlockVector) -> BlockVector:
    _check_dual(cmap, y)
    return BlockVector([adjoint_block(cmap, y, i) for i in range(cmap.signature.m)], copy=False)
