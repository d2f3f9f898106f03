from __future__ import annotations

import json

import pytest

from dynrmat import identities as I
from dynrmat import models as M
from dynrmat.coeffield import VarSpace
from dynrmat.opalgebra import MatOperator
from dynrmat.poisson import PhaseMat, momentum_diag, pbracket_tensor
from dynrmat.tensoralg import RMat, diag_sum, permutation

ALL = list(I.CATALOG)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("check_id", ALL)
def test_catalog_passes(check_id, n):
    rep = I.run_check(check_id, n)
    assert rep.status == "pass", rep
    assert rep.residual_terms == 0


@pytest.mark.parametrize("check_id", ["r_cybe", "R_qybe", "qWW_reduce", "Rbar_inverse", "series_S", "moment_map"])
def test_extended_checks_rank_four(check_id):
    assert I.run_check(check_id, 4).status == "pass"


def test_report_schema():
    rep = I.run_check("r_skew", 2)
    assert list(rep.to_dict()) == ["check_id", "paper_anchor", "n", "status", "residual_terms", "elapsed_ms"]
    json.dumps(rep.to_dict())


def test_errors():
    with pytest.raises(I.UnknownCheck):
        I.run_check("nosuch", 2)
    with pytest.raises(ValueError):
        I.run_check("r_skew", 1)
    with pytest.raises(I.EnvelopeExceeded):
        I.run_check("In_commute", 9)
    with pytest.raises(I.UnknownCheck):
        I.select_checks(["nosuch"])


def test_specialized_parameters():
    assert I.run_check("R_unitarity", 3, hbar=0).status == "pass"
    assert I.run_check("qLL_rep", 2, hbar="1/3", gamma=2).status == "pass"


def test_pole_specialization_is_skipped():
    # b and the moment map carry 1/gamma
    assert I.run_check("moment_map", 2, gamma=0).status == "skipped"


def test_series_example():
    sp = VarSpace(2)
    W = M.w_matrix(sp)
    term = [W[0, j] * sp.inv_diff(1, j, gamma=1) for j in range(2)]
    assert term == [sp.inv_diff(1, 0), sp.inv_diff(0, 1)]
    assert (term[0] + term[1]).is_zero()


def test_series_diagonal_case_does_not_vanish():
    sp = VarSpace(2)
    W = M.w_matrix(sp)
    s = W[0, 0] * sp.inv_diff(0, 0, gamma=1) + W[0, 1] * sp.inv_diff(0, 1, gamma=1)
    assert not s.is_zero()


# -- filters, determinism ---------------------------------------------------------------------

def test_classical_filter():
    got = I.select_checks(["classical"])
    assert got == [c for c in ALL if c.startswith(("cl_", "trig_cl_"))]
    reps = I.run_suite(["classical"], (2,), workers=1)
    assert [r.check_id for r in reps] == got


def test_empty_filter_selects_everything():
    assert I.select_checks([]) == ALL
    assert I.select_checks(None) == ALL
    assert I.select_checks(["all"]) == ALL


def test_filter_by_check_id():
    assert I.select_checks(["r_skew", "cl_LL"]) == ["r_skew", "cl_LL"]


def test_suite_order_and_envelope():
    reps = I.run_suite(["R_unitarity", "In_commute"], (2, 5), workers=1)
    assert [(r.check_id, r.n) for r in reps] == [("R_unitarity", 2), ("R_unitarity", 5),
                                                  ("In_commute", 2), ("In_commute", 5)]
    assert reps[3].status == "skipped"


def test_deterministic_across_runs_and_workers():
    a = I.run_suite(["rmatrix", "frobenius"], (2, 3), workers=1)
    b = I.run_suite(["rmatrix", "frobenius"], (2, 3), workers=1)
    c = I.run_suite(["rmatrix", "frobenius"], (2, 3), workers=3)
    assert [r.key() for r in a] == [r.key() for r in b] == [r.key() for r in c]


def test_workers_env(monkeypatch):
    monkeypatch.setenv(I.WORKERS_ENV, "3")
    assert I.default_workers() == 3


# -- non-vacuity -----------------------------------------------------------------------------

def test_perturbation_breaks_exchange_relations():
    reps = I.perturbation_sensitivity(2)
    assert [r.check_id for r in reps] == ["RRbRb", "qLL_rep"]
    assert all(r.status == "fail" and r.residual_terms > 0 for r in reps)


def test_perturbation_only_touches_one_coefficient():
    sp = VarSpace(2)
    diff = I._corrupt_rbar(sp) - M.quantum_Rbar(sp)
    assert diff.nnz() == 2


def test_identity_with_leading_R_fails():
    # the variant with R_12 (instead of Rbar_12) in front does not hold
    sp = VarSpace(2)
    h = sp.hbar_f
    Q1 = M.position_matrix(sp).embed([1], 2)
    R, Rbi = M.quantum_R(sp), M.quantum_Rbar_inv(sp)
    lhs = R * (Q1 + diag_sum(sp).scale(h)) * Rbi * R - R * Q1
    assert not (lhs - permutation(sp).scale(h)).is_zero()


def _flip_derivatives(L: MatOperator) -> MatOperator:
    terms = {m: (c if not any(m) else -c) for m, c in L.terms.items()}
    return MatOperator(L.space, L.legs, L.flavor, terms)


def test_cm_momentum_sign():
    sp = VarSpace(2)
    Q1 = MatOperator.from_mat(M.position_matrix(sp).embed([1], 2), "deriv")
    E = MatOperator.from_mat(diag_sum(sp).scale(sp.hbar_f), "deriv")
    for L, ok in ((M.cm_rational_L(sp), True), (_flip_derivatives(M.cm_rational_L(sp)), False)):
        L2 = L.embed([2], 2)
        assert (Q1 * L2 - L2 * Q1 == E) is ok


def _sg_residual(sp, L):
    rt = M.trig_objects(sp)["r_tilde"]
    h = sp.hbar_f
    a = L.embed([1], 2) + MatOperator.from_mat(rt.swap().scale(h), "deriv")
    b = L.embed([2], 2) + MatOperator.from_mat(rt.scale(h), "deriv")
    return a.commutator(b)


def test_trig_exchange_needs_conjugated_operator_and_sign():
    sp = VarSpace(2, flavor="v")
    T = M.trig_objects(sp)
    assert _sg_residual(sp, T["L_conj"]).is_zero()
    assert not _sg_residual(sp, T["L_cm"]).is_zero()
    v = [sp.pos(i) for i in range(2)]
    flipped = (MatOperator.from_mat(RMat.diag(sp, [x.inv() for x in v]), "deriv")
               * _flip_derivatives(T["L_cm"]) * MatOperator.from_mat(RMat.diag(sp, v), "deriv"))
    assert not _sg_residual(sp, flipped).is_zero()


@pytest.mark.parametrize("sign, ok", [(-1, True), (1, False)])
def test_classical_trig_momentum_sign(sign, ok):
    sp = VarSpace(2, flavor="v")
    L = M.classical_trig_L(sp)
    if sign == 1:
        L = L + momentum_diag(sp) * 2
    L1, L2 = L.embed([1], 2), L.embed([2], 2)
    Rt = PhaseMat.from_mat(M.trig_objects(sp)["R_tilde"])
    Rt21 = PhaseMat.from_mat(M.trig_objects(sp)["R_tilde"].swap())
    res = pbracket_tensor(L, L) - (Rt.commutator(L1) - Rt21.commutator(L2))
    assert res.is_zero() is ok


def test_not_trace_witness():
    a, ab = I.not_trace_ranks(VarSpace(2, flavor="v"), seed=0)
    assert ab == a + 1
    for seed in (1, 2):
        a, ab = I.not_trace_ranks(VarSpace(3, flavor="v"), seed=seed)
        assert ab > a
