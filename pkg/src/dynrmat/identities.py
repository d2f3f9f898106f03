"""Named catalog of exact identity checks.

Each check builds both sides of one relation over a :class:`VarSpace` of rank
``n`` and returns its residuals; the check passes iff every residual has zero
canonical form.  :func:`run_check` wraps one check in a :class:`CheckReport`,
:func:`run_suite` runs a filtered slice of the catalog over a range of ``n``.
"""
from __future__ import annotations

import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import flint

from . import models as M
from .coeffield import PoleError, RatFun, VarSpace
from .opalgebra import MatOperator, momentum
from .poisson import PhaseFun, PhaseMat, momentum_diag, pbracket, pbracket_tensor
from .tensoralg import RMat, diag_sum, permutation

__all__ = [
    "CheckReport",
    "Check",
    "CATALOG",
    "UnknownCheck",
    "EnvelopeExceeded",
    "run_check",
    "run_suite",
    "select_checks",
    "perturbation_sensitivity",
    "PERTURBATIONS",
]

WORKERS_ENV = "DYNRMAT_WORKERS"


class UnknownCheck(KeyError):
    pass


class EnvelopeExceeded(ValueError):
    pass


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    paper_anchor: str
    n: int
    status: str
    residual_terms: int
    elapsed_ms: int

    def to_dict(self) -> dict:
        return asdict(self)

    def key(self) -> tuple:
        """Everything except timing."""
        return (self.check_id, self.paper_anchor, self.n, self.status, self.residual_terms)


@dataclass(frozen=True)
class Check:
    check_id: str
    anchor: str
    tags: frozenset
    max_n: int
    flavor: str
    fn: Callable


# -- lazily built objects per space --------------------------------------------------

class Objects:
    """Cache of model objects for one space; ``overrides`` replace builders by name."""

    def __init__(self, space: VarSpace, overrides: dict | None = None, seed: int = 0):
        self.space = space
        self.seed = seed
        self.n = space.n
        self.h = space.hbar_f
        self._over = overrides or {}

    def _get(self, name, default):
        fn = self._over.get(name)
        return fn(self.space) if fn is not None else default()

    @cached_property
    def C(self):
        return permutation(self.space)

    @cached_property
    def E(self):
        return diag_sum(self.space)

    @cached_property
    def Q(self):
        return M.position_matrix(self.space)

    @cached_property
    def r(self):
        return M.classical_r(self.space)

    @cached_property
    def rbar(self):
        return M.classical_rbar(self.space)

    @cached_property
    def R(self):
        return self._get("R", lambda: M.quantum_R(self.space))

    @cached_property
    def Rinv(self):
        return M.quantum_R_inv(self.space)

    @cached_property
    def Rbar(self):
        return self._get("Rbar", lambda: M.quantum_Rbar(self.space))

    @cached_property
    def Rbar_inv(self):
        return self._get("Rbar_inv", lambda: M.quantum_Rbar_inv(self.space))

    @cached_property
    def W(self):
        return M.w_matrix(self.space)

    @cached_property
    def L(self):
        return M.rs_L(self.space)

    @cached_property
    def trig(self):
        return M.trig_objects(self.space)


def _op(mat: RMat, flavor: str = "shift") -> MatOperator:
    return MatOperator.from_mat(mat, flavor)


def _shift_vec(n: int, j: int, k: int) -> list:
    a = [0] * n
    a[j] = k
    return a


# -- Frobenius algebra and classical r ---------------------------------------------------

def _frob(o: Objects, which: str) -> list:
    F = M.frobenius_basis(o.space)
    zero = RMat.zero(o.space, 1)

    def f(i, j):
        return F.get((i, j), zero)

    def d(a, b):
        return 1 if a == b else 0

    out = []
    for (i, j) in F:
        for (k, l) in F:
            if which == "lie":
                rhs = ((f(i, l) - f(i, j)).scale(d(i, k)) + (f(k, j) - f(k, l)).scale(d(i, l))
                       + (f(i, j) - f(i, l)).scale(d(j, k)))
                out.append(F[(i, j)].commutator(F[(k, l)]) - rhs)
            else:
                rhs = f(i, l).scale(d(i, k)) + (f(i, k) - f(i, l)).scale(d(j, k))
                out.append(F[(i, j)] * F[(k, l)] - rhs)
    return out


def check_frob_lie(o):
    return _frob(o, "lie")


def check_frob_assoc(o):
    return _frob(o, "assoc")


def check_r_skew(o):
    return [o.r.swap() + o.r]


def check_r_cybe(o):
    r12, r13, r23 = (o.r.embed(p, 3) for p in ([1, 2], [1, 3], [2, 3]))
    return [r12.commutator(r13) + r12.commutator(r23) + r13.commutator(r23)]


def check_r_sq_zero(o):
    return [o.r * o.r]


def check_cocycle_inverse(o):
    return [M.cocycle_reconstruct_r(o.space) - o.r]


# -- quantum R-matrices ------------------------------------------------------------------

def check_R_unitarity(o):
    return [o.R * o.R.swap() - RMat.identity(o.space, 2)]


def check_R_qybe(o):
    R12, R13, R23 = (o.R.embed(p, 3) for p in ([1, 2], [1, 3], [2, 3]))
    return [R12 * R13 * R23 - R23 * R13 * R12]


def check_RRbRb(o):
    sp = o.space
    R12 = _op(o.R.embed([1, 2], 3))
    Rb13 = _op(o.Rbar.embed([1, 3], 3))
    Rb23 = _op(o.Rbar.embed([2, 3], 3))
    P3, P3i = momentum(sp, 3, 3), momentum(sp, 3, 3, -1)
    return [R12 * Rb13 * Rb23 - Rb23 * Rb13 * P3i * R12 * P3]


def check_RbRb(o):
    sp = o.space
    Rb12 = _op(o.Rbar.embed([1, 2], 3))
    Rb13 = _op(o.Rbar.embed([1, 3], 3))
    P2, P2i = momentum(sp, 2, 3), momentum(sp, 2, 3, -1)
    P3, P3i = momentum(sp, 3, 3), momentum(sp, 3, 3, -1)
    return [Rb12 * P2i * Rb13 * P2 - Rb13 * P3i * Rb12 * P3]


def check_Rbar_inverse(o):
    one = RMat.identity(o.space, 2)
    return [o.Rbar * o.Rbar_inv - one, o.Rbar_inv * o.Rbar - one]


def check_qQ_identity_1(o):
    Q1, Q2 = o.Q.embed([1], 2), o.Q.embed([2], 2)
    R, R21 = o.R, o.R.swap()
    lhs = R * Q1 * R21 * Q2 - Q2 * R * Q1 * R21
    return [lhs - (o.C * Q1 * R21 - R * Q1 * o.C).scale(o.h)]


def check_qQ_identity_2(o):
    # leading factor is Rbar_12; with R_12 there the residual is nonzero
    Q1 = o.Q.embed([1], 2)
    lhs = o.Rbar * (Q1 + o.E.scale(o.h)) * o.Rbar_inv * o.R - o.R * Q1
    return [lhs - o.C.scale(o.h)]


def check_RRbPPRb(o):
    sp = o.space
    P1, P2 = momentum(sp, 1, 2), momentum(sp, 2, 2)
    Rbi, Rbi21 = _op(o.Rbar_inv), _op(o.Rbar_inv.swap())
    return [_op(o.Rinv) * P1 * Rbi21 * P2 * Rbi * _op(o.R) - P2 * Rbi * P1 * Rbi21]


def check_QTL(o):
    L2 = o.L.embed([2], 2)
    Q1 = _op(o.Q.embed([1], 2))
    return [Q1 * L2 - L2 * Q1 - L2 * _op(o.E.scale(o.h))]


def check_qLL_rep(o):
    L1, L2 = o.L.embed([1], 2), o.L.embed([2], 2)
    R, Rb21 = _op(o.R), _op(o.Rbar.swap())
    Rbi, Rbi21 = _op(o.Rbar_inv), _op(o.Rbar_inv.swap())
    return [L1 * Rbi21 * L2 * Rbi * R * Rb21 - R * L2 * Rbi * L1]


def check_qWW_reduce(o):
    WW = o.W.embed([1], 2) * o.W.embed([2], 2)
    return [o.r.commutator(WW)]


def check_qWP_full(o):
    P2 = momentum(o.space, 2, 2)
    W1 = _op(o.W.embed([1], 2))
    Rbi = _op(o.Rbar_inv)
    return [W1 * P2 * Rbi - P2 * Rbi * W1]


def _sum(items, sp):
    return RatFun.sum_of(list(items), sp)


def check_qWP_components(o):
    """Each index case of ``P_j^{-1} [W_kl, P_j]`` separately.

    Cases: ``k != j, l != j`` (k = l allowed); ``k = j != l``; ``k = l = j``;
    ``l = j != k``.
    """
    sp, n, h, W = o.space, o.n, o.h, o.W

    def q(i, j):
        return sp.diff(i, j)

    def iq(i, j, hb=0):
        return sp.inv_diff(i, j, hbar=hb)

    out = []
    for j in range(n):
        for k in range(n):
            for l in range(n):
                lhs = W[k, l].shift(_shift_vec(n, j, -1)) - W[k, l]
                if k != j and l != j:
                    rhs = h * iq(k, j) * iq(l, j, -1) * (q(k, l) * W[k, l] - q(j, l) * W[j, l])
                elif k == j and l != j:
                    rhs = h * iq(l, j, -1) * W[j, l]
                elif k == l == j:
                    rhs = _sum((-h * iq(i, k, -1) * W[k, i] for i in range(n) if i != k), sp)
                else:
                    s_k = _sum((iq(i, j, -1) * W[k, i] for i in range(n) if i != j), sp)
                    s_j = _sum((iq(i, j, -1) * W[j, i] for i in range(n) if i != j), sp)
                    rhs = (h * iq(k, j) * (W[j, j] - W[k, j]) + h * (h - q(k, j)) * iq(k, j) * s_k
                           - h * h * iq(k, j) * s_j)
                out.append(lhs - rhs)
    return out


def check_series_S(o):
    # for m = k the sum does not vanish (extra residue), so only m != k
    sp, n, W = o.space, o.n, o.W
    return [_sum((W[m, j] * sp.inv_diff(k, j, gamma=1) for j in range(n)), sp)
            for m in range(n) for k in range(n) if m != k]


def _sum_rhs(o, k, j):
    sp, n = o.space, o.n
    prod = sp.one
    for a in range(n):
        if a != k:
            prod = prod * sp.diff(a, j, hbar=-1, gamma=1)
        if a != j:
            prod = prod * sp.inv_diff(a, j, hbar=-1)
    hi = o.h.inv()
    return -hi * prod + hi * o.W[k, j]


def _sum_lhs(o, k, j):
    sp = o.space
    return _sum((sp.inv_diff(i, j, hbar=-1) * o.W[k, i] for i in range(o.n) if i != j), sp)


def check_series_sum(o):
    return [_sum_lhs(o, k, j) - _sum_rhs(o, k, j) for k in range(o.n) for j in range(o.n)]


def check_series_sum1(o):
    return [_sum_lhs(o, j, j) - _sum_rhs(o, j, j) for j in range(o.n)]


def check_In_commute(o):
    sp = o.space
    I = {k: M.rs_integral(sp, k, L=o.L, Rbar=o.Rbar) for k in (1, 2, 3)}
    tr_w = MatOperator(sp, 0, "shift", {tuple(_shift_vec(o.n, j, 1)): RMat.scalar(sp, o.W[j, j])
                                        for j in range(o.n)})
    out = [I[1] - tr_w]
    for a, b in ((1, 2), (1, 3), (2, 3)):
        out.append(I[a].commutator(I[b]))
    return out


def _J(o):
    return {k: M.frobenius_J(o.space, k, W=o.W) for k in (1, 2, 3)}


def check_Jn_P(o):
    out = []
    for J in _J(o).values():
        Jop = _op(RMat.scalar(o.space, J))
        for j in range(o.n):
            P = MatOperator.monomial(o.space, _shift_vec(o.n, j, 1))
            out.append(Jop.commutator(P))
    return out


def check_Jn_Jm(o):
    J = {k: _op(RMat.scalar(o.space, v)) for k, v in _J(o).items()}
    return [J[a].commutator(J[b]) for a, b in ((1, 2), (1, 3), (2, 3))]


def check_Jn_Q(o):
    Q = _op(o.Q)
    return [_op(RMat.identity(o.space, 1, scale=J)).commutator(Q) for J in _J(o).values()]


def check_hatR_push(o):
    sp = o.space
    Rhat12 = _op((o.R * o.C).embed([1, 2], 3))
    P3, P3i = momentum(sp, 3, 3), momentum(sp, 3, 3, -1)
    Rb13, Rb23 = _op(o.Rbar.embed([1, 3], 3)), _op(o.Rbar.embed([2, 3], 3))
    Rbi13, Rbi23 = _op(o.Rbar_inv.embed([1, 3], 3)), _op(o.Rbar_inv.embed([2, 3], 3))
    return [P3i * Rhat12 * P3 - Rbi23 * Rbi13 * Rhat12 * Rb13 * Rb23]


def check_trace_lemma(o):
    Ct2 = o.C.partial_transpose(2)
    return [o.Rbar.swap().partial_transpose(2) * Ct2 - Ct2]


def check_moment_map(o):
    return [M.moment_residual(o.space)]


# -- classical brackets on the explicit representation ------------------------------------------

def _pm(m: RMat) -> PhaseMat:
    return PhaseMat.from_mat(m)


def check_cl_QP(o):
    Q, P = _pm(o.Q), momentum_diag(o.space)
    return [pbracket_tensor(Q, P) - P.embed([2], 2) * o.E, pbracket_tensor(P, P)]


def check_cl_QL(o):
    Q, L = _pm(o.Q), M.classical_rs_L(o.space)
    return [pbracket_tensor(Q, L) - L.embed([2], 2) * o.E]


def check_cl_LL(o):
    L = M.classical_rs_L(o.space)
    L1, L2 = L.embed([1], 2), L.embed([2], 2)
    r, rb, rb21 = o.r, o.rbar, o.rbar.swap()
    L12 = L1 * L2
    rhs = r * L12 + L12 * (rb - rb21 - r) + L1 * rb21 * L2 - L2 * rb * L1
    return [pbracket_tensor(L, L) - rhs]


def check_cl_WW(o):
    W = _pm(o.W)
    WW = W.embed([1], 2) * W.embed([2], 2)
    return [pbracket_tensor(W, W) - (o.r * WW - WW * o.r)]


def check_cl_WP(o):
    W, P = _pm(o.W), momentum_diag(o.space)
    W1 = W.embed([1], 2)
    return [pbracket_tensor(W, P) + P.embed([2], 2) * (o.rbar * W1 - W1 * o.rbar)]


def check_cl_In_commute(o):
    L = M.classical_rs_L(o.space)
    I = {k: (L ** k).trace() for k in (1, 2, 3)}
    return [pbracket(I[a], I[b]) for a, b in ((1, 2), (1, 3), (2, 3))]


# -- rational CM limit ---------------------------------------------------------------------------

def _dop(m: RMat) -> MatOperator:
    return MatOperator.from_mat(m, "deriv")


def check_cm_QL(o):
    Lc2 = M.cm_rational_L(o.space).embed([2], 2)
    Q1 = _dop(o.Q.embed([1], 2))
    return [Q1 * Lc2 - Lc2 * Q1 - _dop(o.E.scale(o.h))]


def check_cm_eleg(o):
    Lc = M.cm_rational_L(o.space)
    a = Lc.embed([1], 2) + _dop((o.r.swap() - o.rbar.swap()).scale(o.h))
    b = Lc.embed([2], 2) + _dop((o.r - o.rbar).scale(o.h))
    return [a.commutator(b)]


# -- trigonometric CM -------------------------------------------------------------------------------

def _sq_inv_diag(sp: VarSpace) -> RMat:
    return RMat.diag(sp, [sp.pos(i).inv() ** 2 for i in range(sp.n)])


def check_trig_s_identity(o):
    s = o.trig["s12"]
    D1 = o.trig["D"].embed([1], 2)
    D1i = _sq_inv_diag(o.space).embed([1], 2)
    return [s - D1i * s * D1 + o.E - o.C]


def check_trig_R_tilde(o):
    return [M.R_tilde_from_conjugation(o.space, o.trig["r_tilde"]) - o.trig["R_tilde"]]


def check_trig_sg(o):
    L = o.trig["L_conj"]
    rt = o.trig["r_tilde"]
    a = L.embed([1], 2) + _dop(rt.swap().scale(o.h))
    b = L.embed([2], 2) + _dop(rt.scale(o.h))
    return [a.commutator(b)]


def check_trig_DL(o):
    L2 = o.trig["L_conj"].embed([2], 2)
    D1 = o.trig["D"].embed([1], 2)
    return [_dop(D1) * L2 - L2 * _dop(D1) + _dop((D1 * o.E).scale(o.h))]


def _tensor_bracket_rhs(Rt: RMat, L: PhaseMat) -> PhaseMat:
    L1, L2 = L.embed([1], 2), L.embed([2], 2)
    return _pm(Rt).commutator(L1) - _pm(Rt.swap()).commutator(L2)


def check_trig_cl_LLL(o):
    L = M.classical_trig_L(o.space)
    return [pbracket_tensor(L, L) - _tensor_bracket_rhs(o.trig["R_tilde"], L)]


def check_trig_cl_DL(o):
    sp = o.space
    Lt = M.classical_trig_L(sp)
    v = [sp.pos(i) for i in range(sp.n)]
    calL = _pm(RMat.diag(sp, [x.inv() for x in v])) * Lt * _pm(RMat.diag(sp, v))
    D = _pm(o.trig["D"])
    return [pbracket_tensor(D, calL) + D.embed([1], 2) * o.E,
            pbracket_tensor(calL, calL) - _tensor_bracket_rhs(o.trig["r_tilde"], calL)]


def check_trig_extra_term(o):
    L = M.classical_trig_L(o.space)
    delta = o.trig["extra_term"]
    return [_tensor_bracket_rhs(delta, L)]


def check_trig_In(o):
    sp = o.space
    L = o.trig["L_conj"]
    I = {k: M.trig_integral(sp, k, L=L, s12=o.trig["s12"]) for k in (1, 2, 3)}
    out = [I[k] - M.trig_integral_component(sp, k, L=L) for k in (1, 2, 3)]
    for a, b in ((1, 2), (1, 3), (2, 3)):
        out.append(I[a].commutator(I[b]))
    return out


def not_trace_ranks(space: VarSpace, seed: int = 0) -> tuple:
    """Ranks of ``A`` and ``[A | b]`` for ``I_2 = alpha tr L^2 + beta tr L + delta``.

    One equation per monomial coefficient, evaluated at two random points that
    share one random value of ``hbar``.  ``rank([A|b]) > rank(A)`` means no
    constants fit.
    """
    L = M.trig_objects(space)["L_conj"]
    I2 = M.trig_integral(space, 2)
    T2 = (L * L).partial_trace([1])
    T1 = L.partial_trace([1])
    rng = random.Random(seed)
    monos = sorted(set(I2.terms) | set(T2.terms) | set(T1.terms) | {(0,) * space.n})

    def rnd():
        return Fraction(rng.randint(1, 10 ** 6), rng.randint(1, 10 ** 6))

    h = space.param_values().get(space.hbar_index, rnd())
    rows = []
    points = 0
    while points < 2:
        pt = [rnd() for _ in range(space.n)] + [h, Fraction(0)]

        def at(op, m):
            return op.terms[m][0, 0].eval(pt) if m in op.terms else Fraction(0)

        try:
            block = [[at(T2, m), at(T1, m), Fraction(int(not any(m))), at(I2, m)] for m in monos]
        except PoleError:
            continue
        rows.extend(block)
        points += 1
    full = flint.fmpq_mat([[flint.fmpq(x.numerator, x.denominator) for x in r] for r in rows])
    coef = flint.fmpq_mat([[flint.fmpq(x.numerator, x.denominator) for x in r[:3]] for r in rows])
    return coef.rank(), full.rank()


def check_trig_In_not_trace(o):
    a, ab = not_trace_ranks(o.space, o.seed)
    # residual is "a fitting combination exists"
    return [] if ab > a else [o.space.one]


# -- catalog ------------------------------------------------------------------------------------------

def _c(check_id, anchor, tags, fn, max_n=4, flavor="q"):
    return Check(check_id, anchor, frozenset(tags.split()), max_n, flavor, fn)


_EXT = 6

CATALOG: dict = {c.check_id: c for c in [
    _c("frob_lie", "Frobenius basis: commutator formula", "frobenius algebra", check_frob_lie),
    _c("frob_assoc", "Frobenius basis: product formula", "frobenius algebra", check_frob_assoc),
    _c("r_skew", "classical r-matrix: skew symmetry", "rmatrix algebra", check_r_skew),
    _c("r_cybe", "classical r-matrix: classical Yang-Baxter equation", "rmatrix algebra extended",
       check_r_cybe, _EXT),
    _c("r_sq_zero", "classical r-matrix: nilpotency r^2 = 0", "rmatrix algebra", check_r_sq_zero),
    _c("cocycle_inverse", "Frobenius cocycle: inversion reproduces r", "frobenius rmatrix",
       check_cocycle_inverse),
    _c("R_unitarity", "quantum R: unitarity R12 R21 = 1", "rmatrix quantum", check_R_unitarity),
    _c("R_qybe", "quantum R: quantum Yang-Baxter equation", "rmatrix quantum extended",
       check_R_qybe, _EXT),
    _c("RRbRb", "mixed R/Rbar exchange relation with P3 conjugation", "rmatrix quantum operator",
       check_RRbRb),
    _c("RbRb", "Rbar/Rbar exchange relation with P conjugation", "rmatrix quantum operator",
       check_RbRb),
    _c("Rbar_inverse", "Rbar times its closed-form inverse", "rmatrix quantum extended",
       check_Rbar_inverse, _EXT),
    _c("qQ_identity_1", "[A,A] reduction identity", "rmatrix quantum", check_qQ_identity_1),
    _c("qQ_identity_2", "[A,g] reduction identity", "rmatrix quantum", check_qQ_identity_2),
    _c("RRbPPRb", "[g,g] reduction identity", "rmatrix quantum operator", check_RRbPPRb),
    _c("QTL", "position / L-operator exchange relation", "rs quantum operator", check_QTL),
    _c("qLL_rep", "quadratic L-operator algebra on L = W P", "rs quantum operator", check_qLL_rep),
    _c("qWW_reduce", "[r, W1 W2] = 0 for the explicit W", "rs frobenius extended",
       check_qWW_reduce, _EXT),
    _c("qWP_full", "W / P exchange relation", "rs quantum operator", check_qWP_full),
    _c("qWP_components", "W / P exchange relation by index case",
       "rs quantum", check_qWP_components),
    _c("series_S", "vanishing series sum_j W_mj / (gamma + q_kj)", "rs series extended",
       check_series_S, _EXT),
    _c("series_sum", "shifted series sum_{i!=j} W_ki / (q_ij - hbar)", "rs series", check_series_sum),
    _c("series_sum1", "shifted series, diagonal case", "rs series", check_series_sum1),
    _c("In_commute", "quantum trace integrals I_n commute", "rs quantum operator integrals",
       check_In_commute),
    _c("Jn_P", "Frobenius integrals J_n commute with P", "rs frobenius integrals", check_Jn_P),
    _c("Jn_Jm", "Frobenius integrals J_n commute", "rs frobenius integrals", check_Jn_Jm),
    _c("Jn_Q", "Frobenius integrals J_n commute with Q", "rs frobenius integrals informational",
       check_Jn_Q),
    _c("hatR_push", "P3 conjugation of Rhat = R C", "rmatrix quantum operator", check_hatR_push),
    _c("trace_lemma", "Rbar21^t2 C^t2 = C^t2", "rmatrix quantum", check_trace_lemma),
    _c("moment_map", "moment-map equation for the explicit W", "rs frobenius extended",
       check_moment_map, _EXT),
    _c("cl_QP", "classical bracket {Q1, P2}, {P1, P2}", "classical rs", check_cl_QP),
    _c("cl_QL", "classical bracket {Q1, L2}", "classical rs", check_cl_QL),
    _c("cl_LL", "classical quadratic L-operator bracket", "classical rs", check_cl_LL),
    _c("cl_WW", "classical Sklyanin bracket for W", "classical rs", check_cl_WW),
    _c("cl_WP", "classical bracket {W1, P2}", "classical rs", check_cl_WP),
    _c("cl_In_commute", "classical integrals tr L^n Poisson-commute", "classical rs integrals",
       check_cl_In_commute),
    _c("cm_eleg", "rational CM exchange algebra, factorized form", "cm quantum operator",
       check_cm_eleg),
    _c("cm_QL", "rational CM position / L relation", "cm quantum operator", check_cm_QL),
    _c("trig_s_identity", "s-matrix conjugation identity", "trig", check_trig_s_identity, flavor="v"),
    _c("trig_R_tilde", "Rtilde from conjugating rtilde", "trig", check_trig_R_tilde, flavor="v"),
    _c("trig_sg", "quantum trigonometric CM exchange algebra", "trig quantum operator",
       check_trig_sg, flavor="v"),
    _c("trig_DL", "quantum bracket [D1, L2]", "trig quantum operator", check_trig_DL, flavor="v"),
    _c("trig_cl_LLL", "classical bracket of the conjugated trig L-operator", "classical trig",
       check_trig_cl_LLL, flavor="v"),
    _c("trig_cl_DL", "classical {D1, L2} and {L1, L2} with rtilde", "classical trig",
       check_trig_cl_DL, flavor="v"),
    _c("trig_extra_term", "difference term drops out of the bracket", "trig",
       check_trig_extra_term, flavor="v"),
    _c("trig_In", "trig quantum integrals: tensor vs component form, commutativity",
       "trig quantum operator integrals", check_trig_In, flavor="v"),
    _c("trig_In_not_trace", "I_2 is not a combination of tr L^2, tr L, 1", "trig integrals refutation",
       check_trig_In_not_trace, flavor="v"),
]}


# -- running -------------------------------------------------------------------------------------------

def _residual_terms(res) -> int:
    if isinstance(res, RatFun):
        return 0 if res.is_zero() else 1
    if isinstance(res, RMat):
        return res.nnz()
    if isinstance(res, (MatOperator, PhaseMat)):
        return res.residual_terms()
    raise TypeError(f"unexpected residual type {type(res).__name__}")


def _space(check: Check, n: int, hbar, gamma) -> VarSpace:
    if check.flavor == "v":
        return VarSpace(n, flavor="v", hbar=hbar)
    return VarSpace(n, hbar=hbar, gamma=gamma)


def run_check(check_id: str, n: int, hbar=None, gamma=None, perturb: str | None = None,
              seed: int = 0) -> CheckReport:
    """Run one catalog check at rank ``n``; ``hbar``/``gamma`` specialize the parameters."""
    check = CATALOG.get(check_id)
    if check is None:
        raise UnknownCheck(check_id)
    if n < 2:
        raise ValueError("N >= 2 required")
    if n > check.max_n:
        raise EnvelopeExceeded(f"{check_id} is budgeted for N <= {check.max_n}")
    hbar = None if hbar is None else Fraction(hbar)
    gamma = None if gamma is None else Fraction(gamma)
    overrides = PERTURBATIONS[perturb] if perturb else None
    t0 = time.perf_counter()
    try:
        residuals = check.fn(Objects(_space(check, n, hbar, gamma), overrides, seed))
        terms = sum(_residual_terms(r) for r in residuals)
        status = "pass" if terms == 0 else "fail"
    except (PoleError, ZeroDivisionError):
        # the specialization lands on a pole of the identity
        terms, status = 0, "skipped"
    elapsed = int(round((time.perf_counter() - t0) * 1000))
    return CheckReport(check_id, check.anchor, n, status, terms, elapsed)


def select_checks(tags: Iterable[str] | None = None) -> list:
    """Catalog ids matching any of ``tags`` (tag names or check ids); all if empty."""
    tags = {t for t in (tags or ()) if t}
    if not tags or "all" in tags:
        return list(CATALOG)
    unknown = tags - set(CATALOG) - {t for c in CATALOG.values() for t in c.tags}
    if unknown:
        raise UnknownCheck(", ".join(sorted(unknown)))
    return [cid for cid, c in CATALOG.items() if cid in tags or c.tags & tags]


def _job(args):
    cid, n, hbar, gamma, seed = args
    check = CATALOG[cid]
    if n > check.max_n:
        return CheckReport(cid, check.anchor, n, "skipped", 0, 0)
    return run_check(cid, n, hbar, gamma, seed=seed)


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_suite(tags: Iterable[str] | None = None, n_range: Sequence[int] = (2, 3),
              hbar=None, gamma=None, workers: int | None = None, seed: int = 0) -> list:
    """Run the selected checks for every ``n`` in ``n_range``.

    Reports come back in catalog order, then by ``n``, regardless of worker
    count.  Pairs outside a check's envelope are reported as ``skipped``.
    """
    jobs = [(cid, n, hbar, gamma, seed) for cid in select_checks(tags) for n in n_range]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_job, jobs))


# -- non-vacuity ---------------------------------------------------------------------------------------

def _corrupt_rbar(space: VarSpace) -> RMat:
    """Rbar with the (1,2) coefficient hbar/(q_12 - hbar) replaced by hbar/q_12."""
    good = M.quantum_Rbar(space)
    h = space.hbar_f
    F = M.frob_matrix(space, 0, 1).kron(RMat.unit(space, 1, 1))
    delta = h * space.inv_diff(0, 1) - h * space.inv_diff(0, 1, hbar=-1)
    return good + F.scale(delta)


PERTURBATIONS = {"rbar_coefficient": {"Rbar": _corrupt_rbar}}


def perturbation_sensitivity(n: int = 2, checks: Sequence[str] = ("RRbRb", "qLL_rep")) -> list:
    """Reports for ``checks`` run with one corrupted Rbar coefficient (all should fail)."""
    return [run_check(cid, n, perturb="rbar_coefficient") for cid in checks]
