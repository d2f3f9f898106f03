from __future__ import annotations

import numpy as np
import pytest

from dynrmat.numerics import (CollisionDetected, DegenerateSpectrum, UnnormalizableT, dq_dA, factorize_te,
                              fd_check_derivatives, initial_state, rs_gradient, rs_hamiltonian,
                              rs_invariants, simulate_rs)


def rand(n, seed):
    return np.random.default_rng(seed).standard_normal((n, n))


# -- factorization ------------------------------------------------------------------------------

def test_diagonal_input():
    A = np.diag([3.0, 1.0, 2.0])
    T, Q = factorize_te(A)
    assert np.allclose(T.sum(axis=1), 1)
    assert np.allclose(np.diag(Q), [1, 2, 3])


@pytest.mark.parametrize("seed", range(5))
def test_reconstruction(seed):
    A = rand(3, seed)
    T, Q = factorize_te(A)
    assert np.linalg.norm(A - T @ Q @ np.linalg.inv(T)) / np.linalg.norm(A) <= 1e-10
    assert np.allclose(T @ np.ones(3), np.ones(3))


def test_ordering_real_then_imaginary():
    A = rand(4, 3)
    _, Q = factorize_te(A)
    w = np.diag(Q)
    keys = [(round(x.real, 9), x.imag) for x in w]
    assert keys == sorted(keys)


def test_ordering_stable_for_conjugate_pairs():
    # a rotation block: conjugate pair with equal real part
    A = np.array([[0.5, -1.0, 0.0], [1.0, 0.5, 0.0], [0.3, 0.2, 2.0]])
    for eps in (0.0, 1e-13, -1e-13):
        _, Q = factorize_te(A + eps * np.eye(3)[::-1])
        assert np.diag(Q)[0].imag < 0 < np.diag(Q)[1].imag


def test_degenerate_spectrum():
    with pytest.raises(DegenerateSpectrum):
        factorize_te(np.eye(3))


def test_unnormalizable():
    # e is itself an eigenvector, so Te = e forces a zero column scale
    with pytest.raises(UnnormalizableT):
        factorize_te(np.array([[1.0, 1.0], [0.0, 2.0]]))


def test_continuity():
    A, E = rand(3, 1), rand(3, 9)
    T0, _ = factorize_te(A)
    rates = [np.linalg.norm(factorize_te(A + e * E)[0] - T0) / e for e in (1e-4, 1e-5, 1e-6)]
    assert max(rates) / min(rates) < 1.01


# -- derivative formulas ------------------------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4])
@pytest.mark.parametrize("seed", range(5))
def test_fd_derivatives(n, seed):
    err = fd_check_derivatives(rand(n, seed), 1e-6)
    assert set(err) == {"dTdA", "dQdA"}
    assert max(err.values()) <= 1e-5


def test_dq_at_diagonal():
    T, _ = factorize_te(np.diag([1.0, 2.0, 3.0]))
    d = dq_dA(T)
    # d q_i / d A_mn = delta_im delta_in
    for i in range(3):
        for m in range(3):
            for k in range(3):
                assert d[i, m, k] == pytest.approx(1.0 if i == m == k else 0.0, abs=1e-14)


def test_fd_step_sweep():
    A = rand(3, 0)
    big, small = (max(fd_check_derivatives(A, h).values()) for h in (1e-4, 1e-6))
    assert small < big


# -- RS flow ---------------------------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("n", [2, 3, 4])
def test_analytic_gradient(n, seed):
    rng = np.random.default_rng(seed)
    q = np.sort(rng.uniform(-3, 3, n)) + np.arange(n)
    p = rng.standard_normal(n)
    gamma = 0.7
    dq, dp = rs_gradient(q, p, gamma)
    h = 1e-6
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        fq = (rs_hamiltonian(q + e, p, gamma) - rs_hamiltonian(q - e, p, gamma)) / (2 * h)
        fp = (rs_hamiltonian(q, p + e, gamma) - rs_hamiltonian(q, p - e, gamma)) / (2 * h)
        scale = max(1.0, abs(rs_hamiltonian(q, p, gamma)))
        assert abs(fq - dq[k]) <= 1e-7 * scale
        assert abs(fp - dp[k]) <= 1e-7 * scale


def test_first_invariant_is_hamiltonian():
    q, p = initial_state(3, 2)
    assert rs_invariants(q, p, 1.0)[0] == pytest.approx(rs_hamiltonian(q, p, 1.0), rel=1e-14)


def test_initial_state_is_ordered_and_seeded():
    q, p = initial_state(4, 5)
    assert np.all(np.diff(q) > 0)
    q2, p2 = initial_state(4, 5)
    assert np.array_equal(q, q2) and np.array_equal(p, p2)


def test_free_motion():
    tr = simulate_rs(3, 0.0, dt=1e-2, horizon=2.0, seed=1)
    assert np.allclose(tr.p, tr.p[0], atol=0)
    v = np.exp(tr.p[0])
    assert np.allclose(tr.q, tr.q[0] + np.outer(tr.t, v), atol=1e-12)
    assert tr.max_drift().max() < 1e-15


def test_drift_rank_two():
    tr = simulate_rs(2, 1.0, dt=1e-3, horizon=10.0, seed=7)
    assert tr.t[-1] == pytest.approx(10.0)
    assert np.all(np.diff(tr.t) > 0)
    assert tr.max_drift().max() <= 1e-8


def test_time_reversal():
    # the flow is not p -> -p symmetric; retrace by integrating backwards
    fwd = simulate_rs(2, 1.0, dt=1e-3, horizon=5.0, seed=3)
    back = simulate_rs(2, 1.0, q0=fwd.q[-1], p0=fwd.p[-1], dt=-1e-3, horizon=5.0)
    assert np.abs(back.q[::-1] - fwd.q).max() <= 1e-8
    assert np.abs(back.p[::-1] - fwd.p).max() <= 1e-8


def test_collision_halts_with_partial_trajectory():
    with pytest.raises(CollisionDetected) as info:
        simulate_rs(2, 1.0, q0=[0.0, 0.5], p0=[0.0, 0.0], dt=1e-3, horizon=10.0)
    tr = info.value.trajectory
    assert 1 < len(tr.t) < 10001
    assert tr.q.shape == (len(tr.t), 2)


def test_invalid_initial_data():
    with pytest.raises(ValueError):
        simulate_rs(2, 1.0, q0=[1.0, 0.0], p0=[0.0, 0.0])
    with pytest.raises(ValueError):
        simulate_rs(2, 1.0, q0=[0.0, 1.0, 2.0], p0=[0.0, 0.0])
    with pytest.raises(ValueError):
        simulate_rs(2, 1.0, dt=0.0)


def test_csv_layout():
    tr = simulate_rs(3, 1.0, dt=1e-2, horizon=0.05, seed=0)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,q1,q2,q3,p1,p2,p3,I1,I2,I3,drift1,drift2,drift3"
    assert len(lines) == 1 + len(tr.t)
    assert [float(x) for x in lines[1].split(",")][:4] == [0.0, *tr.q[0]]


def test_record_every():
    tr = simulate_rs(2, 1.0, dt=1e-2, horizon=1.0, seed=0, record_every=10)
    assert len(tr.t) == 11
