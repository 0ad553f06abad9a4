"""Shared fixtures: the desk-scale benchmark problems and a seeded problem generator."""

import numpy as np
import pytest

import pdsplit as ps
from pdsplit.blockspace import adjoint_block, forward_block
from pdsplit.operators import resolvent


def make_scalar_problem(A_op, B_op, z_fixtures=()):
    """1x1-block problem with identity coupling and zero offsets."""
    sig = ps.SpaceSignature((1,), (1,))
    L = ps.CouplingMap(sig, {(0, 0): [[1.0]]})
    fixtures = [ps.PrimalDualPoint(ps.BlockVector([[zx]]), ps.BlockVector([[zv]]))
                for zx, zv in z_fixtures]
    return ps.ProblemSpec(sig, [A_op], [B_op], L,
                          ps.BlockVector([[0.0]]), ps.BlockVector([[0.0]]),
                          known_Z_points=fixtures)


@pytest.fixture
def l1_identity_problem():
    """A = d|.|, B = identity map, L = 1; unique solution (0, 0)."""
    return make_scalar_problem(ps.l1_norm(1), ps.affine_monotone([[1.0]]),
                               z_fixtures=[(0.0, 0.0)])


@pytest.fixture
def box_problem():
    """A = 0, B = normal cone of [-1,1], L = 1; solution set [-1,1] x {0}."""
    return make_scalar_problem(ps.zero(1), ps.normal_cone_box([-1.0], [1.0]),
                               z_fixtures=[(0.5, 0.0), (-1.0, 0.0), (1.0, 0.0)])


def make_lasso_problem():
    """f = ||.||_1 on R^2, g = 0.5*||. - (2,1)||^2, identity coupling.

    Solution: soft-threshold of (2,1) by 1, i.e. primal (1,0), dual (-1,-1).
    """
    sig = ps.SpaceSignature((2,), (2,))
    L = ps.CouplingMap(sig, {(0, 0): np.eye(2)})
    zfix = ps.PrimalDualPoint(ps.BlockVector([[1.0, 0.0]]),
                              ps.BlockVector([[-1.0, -1.0]]))
    return ps.ProblemSpec(sig, [ps.l1_norm(2)], [ps.quadratic(np.eye(2), [-2.0, -1.0])],
                          L, ps.BlockVector([[0.0, 0.0]]), ps.BlockVector([[0.0, 0.0]]),
                          known_Z_points=[zfix])


@pytest.fixture
def lasso_problem():
    return make_lasso_problem()


def make_linear_primal_problem(subspace_variant):
    """Single linear primal operator diag(1,2); solution x=(1,1/3), v*=-(1,2/3)."""
    Q1 = np.diag([1.0, 2.0])
    sig = ps.SpaceSignature((2,), (2,))
    zfix = ps.PrimalDualPoint(ps.BlockVector([[1.0, 1.0 / 3.0]]),
                              ps.BlockVector([[-1.0, -2.0 / 3.0]]))
    if subspace_variant == "linear_primal":
        sub = ps.SubspaceSpec("linear_primal", A1=Q1)
    else:
        sub = ps.SubspaceSpec("full")
    return ps.ProblemSpec(sig, [ps.quadratic(Q1)], [ps.quadratic(np.eye(2), [-2.0, -1.0])],
                          ps.CouplingMap(sig, {(0, 0): np.eye(2)}),
                          ps.BlockVector([[0.0, 0.0]]), ps.BlockVector([[0.0, 0.0]]),
                          sub, known_Z_points=[zfix])


def point(x, v):
    return ps.PrimalDualPoint(ps.BlockVector(x), ps.BlockVector(v))


def random_registry_op(rng, dim, allow_normal_cone):
    kinds = ["zero", "l1_norm", "box_indicator", "quadratic", "affine_monotone"]
    if allow_normal_cone:
        kinds.append("normal_cone_box")
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "zero":
        return ps.zero(dim)
    if kind == "l1_norm":
        return ps.l1_norm(dim, float(rng.uniform(0.5, 2.0)))
    if kind in ("box_indicator", "normal_cone_box"):
        lo = rng.uniform(-2.0, 0.0, dim)
        hi = rng.uniform(0.0, 2.0, dim)
        return ps.box_indicator(lo, hi) if kind == "box_indicator" \
            else ps.normal_cone_box(lo, hi)
    if kind == "quadratic":
        G = rng.normal(size=(dim, dim)) / np.sqrt(dim)
        return ps.quadratic(G.T @ G, rng.normal(size=dim))
    G = rng.normal(size=(dim, dim)) / np.sqrt(dim)
    W = rng.normal(size=(dim, dim))
    return ps.affine_monotone(G.T @ G + 0.5 * (W - W.T), rng.normal(size=dim))


def random_problem(seed):
    """Seeded random problem (m,p <= 3, dims <= 4, coupling norm <= 2).

    The offsets are reverse-engineered from sampled graph points so that one
    solution pair is known exactly and shipped as a fixture.
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    p = int(rng.integers(1, 4))
    pdims = tuple(int(rng.integers(1, 5)) for _ in range(m))
    ddims = tuple(int(rng.integers(1, 5)) for _ in range(p))
    sig = ps.SpaceSignature(pdims, ddims)
    entries = {}
    for k in range(p):
        for i in range(m):
            if rng.random() < 0.85 or (k == 0 and i == 0):
                entries[(k, i)] = rng.normal(size=(ddims[k], pdims[i]))
    L = ps.CouplingMap(sig, entries)
    smax = float(np.linalg.svd(L.to_dense(), compute_uv=False).max())
    if smax > 2.0:
        entries = {key: mat * (2.0 / smax) for key, mat in entries.items()}
        L = ps.CouplingMap(sig, entries)
    A_ops = [random_registry_op(rng, pdims[i], False) for i in range(m)]
    B_ops = [random_registry_op(rng, ddims[k], True) for k in range(p)]
    xbar, wstars = [], []
    for i in range(m):
        u = rng.normal(size=pdims[i])
        a = resolvent(A_ops[i], 1.0, u)
        xbar.append(a)
        wstars.append(u - a)
    ybar, vbar = [], []
    for k in range(p):
        u = rng.normal(size=ddims[k])
        y = resolvent(B_ops[k], 1.0, u)
        ybar.append(y)
        vbar.append(u - y)
    xb = ps.BlockVector(xbar)
    vb = ps.BlockVector(vbar)
    z_star = ps.BlockVector([wstars[i] + adjoint_block(L, vb, i) for i in range(m)])
    r = ps.BlockVector([forward_block(L, xb, k) - ybar[k] for k in range(p)])
    return ps.ProblemSpec(sig, A_ops, B_ops, L, z_star, r,
                          known_Z_points=[ps.PrimalDualPoint(xb, vb)])
