import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pdsplit as ps
from pdsplit.schedule import (ControlSchedule, LagBuffer, periodic, random_admissible,
                              synchronous, validate)

from conftest import point


def test_validate_synchronous():
    s = ControlSchedule(4, [(0, 1)] * 4, [(0,)] * 4, M=1, D=0)
    assert validate(s, 2, 1).certified


def test_validate_periodic_sweep():
    # full at 0, then one block at a time with period 3
    I_seq = [(0, 1, 2)] + [((n - 1) % 3,) for n in range(1, 10)]
    K_seq = [(0,)] * 10
    s = ControlSchedule(10, I_seq, K_seq, M=3, D=0)
    assert validate(s, 3, 1).certified


def test_validate_empty_block_set():
    I_seq = [(0,)] * 5 + [()] + [(0,)] * 2
    s = ControlSchedule(8, I_seq, [(0,)] * 8, M=1, D=0)
    cert = validate(s, 1, 1)
    assert not cert.certified and cert.at == 5 and "empty" in cert.reason


def test_validate_lag_exceeds_bound():
    s = ControlSchedule(10, [(0, 1)] * 10, [(0,)] * 10,
                        c={(1, 7): 2}, M=1, D=4)
    cert = validate(s, 2, 1)
    assert not cert.certified and cert.at == 7 and "lag exceeds D" in cert.reason


def test_validate_requires_full_start():
    s = ControlSchedule(3, [(0,), (0, 1), (0, 1)], [(0,)] * 3, M=2, D=0)
    cert = validate(s, 2, 1)
    assert not cert.certified and cert.at == 0


def test_validate_coverage_window():
    # block 1 never activated after iteration 0
    s = ControlSchedule(6, [(0, 1)] + [(0,)] * 5, [(0,)] * 6, M=2, D=0)
    cert = validate(s, 2, 1)
    assert not cert.certified and "misses primal" in cert.reason


def test_periodic_full_group_is_synchronous():
    s = periodic(3, 2, group_size=3, horizon=8)
    assert s.M == 1
    assert all(I == (0, 1, 2) for I in s.I_seq)
    assert validate(s, 3, 2).certified


def test_periodic_half_groups():
    s = periodic(4, 1, group_size=2, horizon=12)
    assert s.M == 2
    assert validate(s, 4, 1).certified


def test_periodic_sawtooth_lags():
    s = periodic(2, 2, group_size=1, horizon=16, lag_pattern=("sawtooth", 3))
    assert s.D == 3
    assert validate(s, 2, 2).certified
    lags = [n - s.lag_primal(i, n) for n in range(16) for i in s.I_seq[n]]
    assert max(lags) == 3


def test_random_admissible_deterministic():
    a = random_admissible(3, 2, M=3, D=4, horizon=64, seed=11)
    b = random_admissible(3, 2, M=3, D=4, horizon=64, seed=11)
    assert a.I_seq == b.I_seq and a.K_seq == b.K_seq and a.c == b.c and a.d == b.d


def test_random_admissible_m1_always_full():
    s = random_admissible(3, 2, M=1, D=2, horizon=32, seed=5)
    assert all(I == (0, 1, 2) for I in s.I_seq)
    assert all(K == (0, 1) for K in s.K_seq)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=100_000))
def test_random_admissible_always_certified(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    p = int(rng.integers(1, 4))
    M = int(rng.integers(1, 5))
    D = int(rng.integers(0, 6))
    s = random_admissible(m, p, M, D, horizon=40, seed=seed)
    assert validate(s, m, p).certified


def test_zero_lag_is_identity():
    s = random_admissible(2, 2, M=2, D=0, horizon=32, seed=3)
    for n in range(32):
        for i in s.I_seq[n]:
            assert s.lag_primal(i, n) == n
        for k in s.K_seq[n]:
            assert s.lag_dual(k, n) == n


def test_tail_extension_preserves_certification():
    s = random_admissible(3, 3, M=3, D=4, horizon=20, seed=9)
    # coverage over windows straddling and beyond the horizon
    for n in range(10, 80):
        got_I, got_K = set(), set()
        for j in range(n, n + s.M):
            I_j, K_j = s.blocks_at(j)
            got_I.update(I_j)
            got_K.update(K_j)
        assert got_I == {0, 1, 2} and got_K == {0, 1, 2}
    for n in range(20, 80):
        I_n, K_n = s.blocks_at(n)
        for i in I_n:
            c = s.lag_primal(i, n)
            assert max(0, n - s.D) <= c <= n
        for k in K_n:
            d = s.lag_dual(k, n)
            assert max(0, n - s.D) <= d <= n


def test_synchronous_helper():
    s = synchronous(2, 3)
    assert validate(s, 2, 3).certified
    assert s.blocks_at(100) == ((0, 1), (0, 1, 2))
    assert s.lag_primal(0, 57) == 57


def test_lag_buffer_window():
    p0 = point([[0.0]], [[0.0]])
    buf = LagBuffer(3, p0)  # keeps last 4 iterates
    pts = [p0]
    for n in range(1, 10):
        pt = point([[float(n)]], [[0.0]])
        buf.push(n, pt)
        pts.append(pt)
    for j in range(10):
        if 6 <= j <= 9:
            assert buf.get(j) is pts[j]
        else:
            with pytest.raises(LookupError):
                buf.get(j)
    with pytest.raises(LookupError):
        buf.get(10)


def test_lag_buffer_push_order():
    buf = LagBuffer(2, point([[0.0]], [[0.0]]))
    with pytest.raises(ps.ConfigError):
        buf.push(5, point([[1.0]], [[0.0]]))
