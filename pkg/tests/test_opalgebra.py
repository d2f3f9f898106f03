from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dynrmat.coeffield import PoleError, VarSpace
from dynrmat.models import position_matrix, rs_integral, rs_L, w_matrix
from dynrmat.opalgebra import (FlavorMismatch, MatOperator, momentum, op_commutator, op_is_zero,
                               op_mul, op_partial_trace)
from dynrmat.tensoralg import DimensionMismatch, RMat, diag_sum, permutation

S2 = VarSpace(2)
S3 = VarSpace(3)

coef = st.sampled_from([S2.one, S2.hbar_f, S2.inv_diff(0, 1), S2.pos(0), S2.diff(0, 1, gamma=1),
                        S2.const(Fraction(3, 2))])


def _ops(flavor, legs, lo):
    mono = st.tuples(st.integers(lo, 2), st.integers(lo, 2))
    dim = 2 ** legs
    mat = st.dictionaries(st.tuples(st.integers(0, dim - 1), st.integers(0, dim - 1)), coef,
                          min_size=1, max_size=3).map(lambda d: RMat(S2, legs, d))
    return st.dictionaries(mono, mat, max_size=3).map(lambda t: MatOperator(S2, legs, flavor, t))


shift0, shift1 = _ops("shift", 0, -1), _ops("shift", 1, -1)
deriv0, deriv1 = _ops("deriv", 0, 0), _ops("deriv", 1, 0)
test_funcs = [S2.pos(0) * S2.pos(1) + S2.gamma_f,
              S2.inv_linear({0: 1, 1: 2}, 3),
              S2.diff(0, 1, hbar=2) * S2.inv_linear({0: 3, 1: -1, S2.hbar_index: 1})]


@given(st.one_of(st.tuples(shift0, shift0, shift0), st.tuples(deriv0, deriv0, deriv0),
                 st.tuples(shift1, shift1, shift1), st.tuples(deriv1, deriv1, deriv1)))
def test_associativity(abc):
    a, b, c = abc
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@given(st.one_of(st.tuples(shift0, shift0), st.tuples(deriv0, deriv0),
                 st.tuples(shift1, shift1), st.tuples(deriv1, deriv1)), st.sampled_from(test_funcs))
def test_product_is_composition_of_actions(ab, f):
    # the normal-ordered product must act as the composition of the two actions
    a, b = ab
    assert (a * b).apply(f) == a.apply(b.apply(f))


@given(st.one_of(shift1, deriv1), st.one_of(shift1, deriv1))
def test_commutator_antisymmetry(a, b):
    if a.flavor != b.flavor:
        with pytest.raises(FlavorMismatch):
            a * b
        return
    assert a.commutator(b) == -b.commutator(a)
    assert a.commutator(a).is_zero()


@given(deriv1, deriv1, deriv1)
def test_jacobi_identity(a, b, c):
    jac = a.commutator(b.commutator(c)) + b.commutator(c.commutator(a)) + c.commutator(a.commutator(b))
    assert jac.is_zero()


@given(shift1, shift1)
def test_partial_trace_is_linear(a, b):
    assert (a + b).partial_trace([1]) == a.partial_trace([1]) + b.partial_trace([1])


# -- worked examples ---------------------------------------------------------------------------

def test_shift_product_example():
    q1 = S2.pos(0)
    a = MatOperator.monomial(S2, (1, 0), coeff=RMat.scalar(S2, q1))
    expect = MatOperator.monomial(S2, (2, 0), coeff=RMat.scalar(S2, q1 * (q1 - S2.hbar_f)))
    assert a * a == expect
    f = S2.pos(0) ** 2 + S2.pos(1)
    assert (a * a).apply(f) == a.apply(a.apply(f))


def test_derivation_product_example():
    # d * q = q d + 1
    d = MatOperator.monomial(S2, (1, 0), "deriv")
    q = MatOperator.from_mat(RMat.scalar(S2, S2.pos(0)), "deriv")
    assert d * q == q * d + MatOperator.identity(S2, 0, "deriv")


@pytest.mark.parametrize("sp", [S2, S3])
def test_position_momentum_relation(sp):
    Q1 = MatOperator.from_mat(position_matrix(sp).embed([1], 2))
    P2 = momentum(sp, 2, 2)
    E = MatOperator.from_mat(diag_sum(sp).scale(sp.hbar_f))
    assert Q1 * P2 - P2 * Q1 == P2 * E


def test_identity_is_neutral():
    L = rs_L(S2)
    one = MatOperator.identity(S2, 1)
    assert op_mul(one, L) == L and op_mul(L, one) == L


def test_self_commutator_vanishes():
    assert op_is_zero(op_commutator(rs_L(S2), rs_L(S2)))


def test_zero_checks():
    assert op_is_zero(MatOperator(S2, 1, "shift"))
    L = rs_L(S3)
    assert op_is_zero(L - L)


@pytest.mark.parametrize("sp", [S2, S3])
def test_position_l_relation(sp):
    L2 = rs_L(sp).embed([2], 2)
    Q1 = MatOperator.from_mat(position_matrix(sp).embed([1], 2))
    E = MatOperator.from_mat(diag_sum(sp).scale(sp.hbar_f))
    assert (op_commutator(Q1, L2) - L2 * E).is_zero()


def test_integrals_commute_by_action_on_test_functions():
    # independent of the normal form: act with both orderings on functions
    I2, I3 = rs_integral(S2, 2), rs_integral(S2, 3)
    rng = random.Random(5)
    for f in test_funcs:
        a = I2.apply(I3.apply(f))[0, 0]
        b = I3.apply(I2.apply(f))[0, 0]
        hits = 0
        while hits < 3:
            pt = S2.random_point(rng)
            try:
                assert a.eval(pt) == b.eval(pt)
            except PoleError:
                continue
            hits += 1
    assert op_commutator(I2, I3).is_zero()


def test_partial_trace_of_identity():
    one = MatOperator.identity(S3, 2)
    assert op_partial_trace(one, [1]) == MatOperator.identity(S3, 1) * 3


def test_transposed_permutation_trace_gives_diagonal_sum():
    # tr_12 C^t2 L_1 = sum_j W_jj S_j
    W = w_matrix(S2)
    Ct2 = MatOperator.from_mat(permutation(S2).partial_transpose(2))
    got = op_partial_trace(Ct2 * rs_L(S2).embed([1], 2), [1, 2])
    expect = MatOperator(S2, 0, "shift", {(1, 0): RMat.scalar(S2, W[0, 0]), (0, 1): RMat.scalar(S2, W[1, 1])})
    assert got == expect


def test_coefficient_action_on_matrix():
    L = rs_L(S2)
    got = L.apply(S2.pos(1))
    W = w_matrix(S2)
    q2 = S2.pos(1)
    assert got == RMat(S2, 1, {(0, 0): W[0, 0] * q2, (1, 0): W[1, 0] * q2,
                               (0, 1): W[0, 1] * (q2 - S2.hbar_f), (1, 1): W[1, 1] * (q2 - S2.hbar_f)})


def test_mismatched_operands():
    with pytest.raises(DimensionMismatch):
        rs_L(S2) * MatOperator.identity(S2, 2)
    with pytest.raises(FlavorMismatch):
        rs_L(S2) * MatOperator.identity(S2, 1, "deriv")
    with pytest.raises(ValueError):
        MatOperator.monomial(S2, (-1, 0), "deriv")
