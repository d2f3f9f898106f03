"""Constructors for the concrete objects of the rational RS / trigonometric CM setup.

Rational objects live on a q-flavored :class:`VarSpace`; trigonometric ones on
a v-flavored space where ``v_i = exp(q_i/2)``, so ``D_i = v_i**2`` and

    sinh(q_ij/2) = (v_i^2 - v_j^2) / (2 v_i v_j),
    coth(q_ij/2) = (v_i^2 + v_j^2) / (v_i^2 - v_j^2).

All constructors are pure functions of the space.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .coeffield import FactorMismatch, RatFun, VarSpace
from .opalgebra import MatOperator, momentum
from .poisson import PhaseMat, momentum_diag
from .tensoralg import RMat, all_ones, diag_sum, permutation

__all__ = [
    "SingularCocycle",
    "ModelObject",
    "frobenius_basis",
    "frob_matrix",
    "classical_r",
    "classical_rbar",
    "quantum_R",
    "quantum_R_inv",
    "quantum_Rbar",
    "quantum_Rbar_inv",
    "w_matrix",
    "b_vector",
    "moment_residual",
    "position_matrix",
    "rs_L",
    "rs_integral",
    "frobenius_J",
    "cocycle_matrix",
    "cocycle_reconstruct_r",
    "cm_rational_L",
    "trig_objects",
    "trig_integral",
    "trig_integral_component",
    "classical_rs_L",
    "classical_trig_L",
    "REGISTRY",
]


class SingularCocycle(ArithmeticError):
    pass


@dataclass(frozen=True)
class ModelObject:
    name: str
    description: str
    flavor: str
    build: Callable


def _require_q(space: VarSpace):
    if space.flavor != "q":
        raise ValueError("rational-model objects need a q-flavored space")


def _require_v(space: VarSpace):
    if space.flavor != "v":
        raise ValueError("trigonometric objects need a v-flavored space")


# -- Frobenius algebra --------------------------------------------------------------

def frob_matrix(space: VarSpace, i: int, j: int) -> RMat:
    """``F_ij = E_ii - E_ij``; zero for ``i == j``."""
    if i == j:
        return RMat.zero(space, 1)
    one = space.one
    return RMat(space, 1, {(i, i): one, (i, j): -one})


def frobenius_basis(space: VarSpace) -> dict:
    """``{(i, j): F_ij}`` for the ``N(N-1)`` pairs ``i != j``."""
    n = space.n
    return {(i, j): frob_matrix(space, i, j) for i in range(n) for j in range(n) if i != j}


def position_matrix(space: VarSpace) -> RMat:
    """``Q = diag(q_1, .., q_N)`` (or ``diag(v_i)`` on v-space)."""
    return RMat.diag(space, [space.pos(i) for i in range(space.n)])


def _unit(space: VarSpace, i: int, j: int) -> RMat:
    return RMat.unit(space, i, j)


# -- classical and quantum R-matrices ---------------------------------------------------

def classical_r(space: VarSpace) -> RMat:
    """``r = sum_{i!=j} F_ij (x) F_ji / q_ij``."""
    n = space.n
    parts = []
    for i in range(n):
        for j in range(n):
            if i != j:
                parts.append(frob_matrix(space, i, j).kron(frob_matrix(space, j, i)).scale(space.inv_diff(i, j)))
    return RMat.sum_of(parts)


def classical_rbar(space: VarSpace) -> RMat:
    """``rbar = sum_{i!=j} F_ij (x) E_jj / q_ij``."""
    n = space.n
    parts = []
    for i in range(n):
        for j in range(n):
            if i != j:
                parts.append(frob_matrix(space, i, j).kron(_unit(space, j, j)).scale(space.inv_diff(i, j)))
    return RMat.sum_of(parts)


def quantum_R(space: VarSpace) -> RMat:
    """``R = 1 + hbar r`` (exact since ``r^2 = 0``)."""
    return RMat.identity(space, 2) + classical_r(space).scale(space.hbar_f)


def quantum_R_inv(space: VarSpace) -> RMat:
    return RMat.identity(space, 2) - classical_r(space).scale(space.hbar_f)


def _rbar_like(space: VarSpace, coeff: Callable[[int, int], RatFun]) -> RMat:
    n = space.n
    parts = [RMat.identity(space, 2)]
    for i in range(n):
        for j in range(n):
            if i != j:
                parts.append(frob_matrix(space, i, j).kron(_unit(space, j, j)).scale(coeff(i, j)))
    return RMat.sum_of(parts)


def quantum_Rbar(space: VarSpace) -> RMat:
    """``Rbar = 1 + sum_{i!=j} hbar/(q_ij - hbar) F_ij (x) E_jj``."""
    h = space.hbar_f
    return _rbar_like(space, lambda i, j: h * space.inv_diff(i, j, hbar=-1))


def quantum_Rbar_inv(space: VarSpace) -> RMat:
    """``Rbar^{-1} = 1 - sum_{i!=j} (hbar/q_ij) F_ij (x) E_jj``."""
    h = space.hbar_f
    return _rbar_like(space, lambda i, j: -h * space.inv_diff(i, j))


# -- the Frobenius group element W -------------------------------------------------------

def w_entry(space: VarSpace, i: int, j: int) -> RatFun:
    n = space.n
    out = space.one
    for a in range(n):
        if a != i:
            out = out * space.diff(a, j, gamma=1)
        if a != j:
            out = out * space.inv_diff(a, j)
    return out


def w_matrix(space: VarSpace) -> RMat:
    """``W_ij = prod_{a!=i} (q_aj + gamma) / prod_{a!=j} q_aj``."""
    _require_q(space)
    n = space.n
    return RMat(space, 1, {(i, j): w_entry(space, i, j) for i in range(n) for j in range(n)})


def b_vector(space: VarSpace) -> list:
    """``b_j = prod_a (q_aj + gamma) / (gamma * prod_{a!=j} q_aj)``."""
    _require_q(space)
    n = space.n
    ginv = space.inv_linear({space.gamma_index: 1})
    out = []
    for j in range(n):
        b = ginv
        for a in range(n):
            b = b * space.diff(a, j, gamma=1)
            if a != j:
                b = b * space.inv_diff(a, j)
        out.append(b)
    return out


def moment_residual(space: VarSpace) -> RMat:
    """``WQ - QW - gamma W + gamma e (x) b``; vanishes on the reduced space."""
    W = w_matrix(space)
    Q = position_matrix(space)
    g = space.gamma_f
    b = b_vector(space)
    n = space.n
    eb = RMat(space, 1, {(i, j): g * b[j] for i in range(n) for j in range(n)})
    return W * Q - Q * W - W.scale(g) + eb


# -- rational RS L-operator and its quantum integrals -------------------------------------------

def rs_L(space: VarSpace) -> MatOperator:
    """``L = sum_ij W_ij S_j E_ij`` with ``S_j: q_j -> q_j - hbar``."""
    W = w_matrix(space)
    n = space.n
    terms = {}
    for j in range(n):
        mono = [0] * n
        mono[j] = 1
        terms[tuple(mono)] = RMat(space, 1, {(i, j): W[i, j] for i in range(n)})
    return MatOperator(space, 1, "shift", terms)


def rs_integral(space: VarSpace, n: int, L: MatOperator | None = None,
                Rbar: RMat | None = None) -> MatOperator:
    """Quantum trace ``tr_12 C^t2 L_1 (Rbar_21^t2 R_12^t2 L_1)^(n-1)``."""
    if n < 1:
        raise ValueError("n >= 1 required")
    L = rs_L(space) if L is None else L
    Rbar = quantum_Rbar(space) if Rbar is None else Rbar
    L1 = L.embed([1], 2)
    X = Rbar.swap().partial_transpose(2) * quantum_R(space).partial_transpose(2)
    op = L1
    for _ in range(n - 1):
        op = op * X * L1
    Ct2 = permutation(space).partial_transpose(2)
    return (MatOperator.from_mat(Ct2, "shift") * op).partial_trace([1, 2])


def frobenius_J(space: VarSpace, n: int, W: RMat | None = None) -> RatFun:
    """``tr_{1..n} [Rhat_12 .. Rhat_{n-1,n} W_1 .. W_n]`` with ``Rhat = R C``."""
    if not 1 <= n <= 3:
        raise ValueError("J_n is built for 1 <= n <= 3")
    W = w_matrix(space) if W is None else W
    if n == 1:
        return W.trace()
    Rhat = quantum_R(space) * permutation(space)
    prod = RMat.identity(space, n)
    for k in range(1, n):
        prod = prod * Rhat.embed([k, k + 1], n)
    for k in range(1, n + 1):
        prod = prod * W.embed([k], n)
    return prod.partial_trace(range(1, n + 1))[0, 0]


# -- Frobenius cocycle --------------------------------------------------------------------------

def cocycle_matrix(space: VarSpace) -> tuple:
    """Basis labels and ``omega(F_a, F_b) = tr(Q [F_a, F_b])`` as a dense list."""
    basis = frobenius_basis(space)
    labels = sorted(basis)
    Q = position_matrix(space)
    omega = [[(Q * basis[a].commutator(basis[b])).trace() for b in labels] for a in labels]
    return labels, omega


def _invert(rows: list) -> list:
    """Exact Gauss-Jordan inverse over RatFun.

    Pivots must have a constant or linear numerator so the reciprocal stays
    inside the factored-denominator field.
    """
    m = len(rows)
    if not m:
        return []
    sp = rows[0][0].space
    a = [list(r) + [sp.one if i == j else sp.zero for j in range(m)] for i, r in enumerate(rows)]
    for col in range(m):
        piv = None
        for r in range(col, m):
            if not a[r][col].is_zero():
                try:
                    a[r][col].inv()
                except FactorMismatch:
                    continue
                piv = r
                break
        if piv is None:
            if all(a[r][col].is_zero() for r in range(col, m)):
                raise SingularCocycle(f"zero pivot in column {col}")
            raise SingularCocycle(f"no invertible pivot in column {col}")
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col].inv()
        a[col] = [x * inv for x in a[col]]
        for r in range(m):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[m:] for row in a]


def cocycle_reconstruct_r(space: VarSpace) -> RMat:
    """``sum_{a,b} (omega^{-1})_{ba} F_a (x) F_b``."""
    labels, omega = cocycle_matrix(space)
    inv = _invert(omega)
    basis = frobenius_basis(space)
    parts = []
    for x, a in enumerate(labels):
        for y, b in enumerate(labels):
            c = inv[y][x]
            if not c.is_zero():
                parts.append(basis[a].kron(basis[b]).scale(c))
    return RMat.sum_of(parts)


# -- rational CM limit ------------------------------------------------------------------------

def cm_rational_L(space: VarSpace) -> MatOperator:
    """``Lcm_ij = 1/q_ij`` (i != j), ``Lcm_ii = sum_{a!=i} 1/q_ai - hbar d_i``."""
    _require_q(space)
    n = space.n
    func = {}
    for i in range(n):
        for j in range(n):
            if i != j:
                func[(i, j)] = space.inv_diff(i, j)
        func[(i, i)] = RatFun.sum_of([space.inv_diff(a, i) for a in range(n) if a != i], space)
    terms = {(0,) * n: RMat(space, 1, func)}
    for i in range(n):
        mono = [0] * n
        mono[i] = 1
        terms[tuple(mono)] = RMat.unit(space, i, i, -space.hbar_f)
    return MatOperator(space, 1, "deriv", terms)


# -- trigonometric CM ---------------------------------------------------------------------------------

def _inv_sq_diff(space: VarSpace, i: int, j: int) -> RatFun:
    """``1 / (v_i^2 - v_j^2)`` as ``1/((v_i - v_j)(v_i + v_j))``."""
    return space.inv_diff(i, j) * space.inv_linear({i: 1, j: 1})


def _csch_half(space: VarSpace, i: int, j: int) -> RatFun:
    """``1 / sinh(q_ij/2) = 2 v_i v_j / (v_i^2 - v_j^2)``."""
    return space.pos(i) * space.pos(j) * _inv_sq_diff(space, i, j) * 2


def _coth_half(space: VarSpace, i: int, j: int) -> RatFun:
    vi, vj = space.pos(i), space.pos(j)
    return (vi * vi + vj * vj) * _inv_sq_diff(space, i, j)


def trig_objects(space: VarSpace) -> dict:
    """``s12``, ``r_tilde``, ``R_tilde``, the extra term, ``D`` and the L-operators.

    ``L_cm`` is the quantum L-operator ``sum p_i E_ii + (1/2) sum csch(q_ij/2) E_ij``
    with ``p_i = hbar d/dq_i``; ``L_conj = D^{-1/2} L_cm D^{1/2}`` is its
    conjugate, the operator entering the CM exchange algebra and integrals.
    """
    _require_v(space)
    n = space.n
    half = Fraction(1, 2)
    v = [space.pos(i) for i in range(n)]
    D = RMat.diag(space, [x * x for x in v])
    s_parts, rt_parts, extra_parts = [], [], []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            Di, Dj = v[i] * v[i], v[j] * v[j]
            s_parts.append(frob_matrix(space, i, j).kron(_unit(space, j, i)).scale(-Di * _inv_sq_diff(space, i, j)))
            rt_parts.append(_unit(space, i, j).kron(_unit(space, j, i)).scale(_coth_half(space, i, j) * (-half)))
            rt_parts.append(_unit(space, i, i).kron(_unit(space, j, i)).scale(_csch_half(space, i, j) * half))
            e = _unit(space, j, i) + _unit(space, i, j)
            extra_parts.append(_unit(space, i, i).kron(e).scale(_csch_half(space, i, j) * half))
    s12 = RMat.sum_of(s_parts)
    r_tilde = -s12 + permutation(space).scale(half)
    R_tilde = RMat.sum_of(rt_parts)
    extra = RMat.sum_of(extra_parts)
    offdiag = {(i, j): v[i] * v[j] * _inv_sq_diff(space, i, j) for i in range(n) for j in range(n) if i != j}
    terms = {(0,) * n: RMat(space, 1, offdiag)}
    for i in range(n):
        mono = [0] * n
        mono[i] = 1
        terms[tuple(mono)] = RMat.unit(space, i, i, space.hbar_f)
    L_cm = MatOperator(space, 1, "deriv", terms)
    sqrtD = MatOperator.from_mat(RMat.diag(space, v), "deriv")
    sqrtD_inv = MatOperator.from_mat(RMat.diag(space, [x.inv() for x in v]), "deriv")
    L_conj = sqrtD_inv * L_cm * sqrtD
    return {
        "s12": s12,
        "r_tilde": r_tilde,
        "R_tilde": R_tilde,
        "extra_term": extra,
        "D": D,
        "L_cm": L_cm,
        "L_conj": L_conj,
    }


def R_tilde_from_conjugation(space: VarSpace, r_tilde: RMat) -> RMat:
    """``D1^{1/2} D2^{1/2} r_tilde D1^{-1/2} D2^{-1/2} - (1/2) sum E_ii (x) E_ii``."""
    n = space.n
    v = [space.pos(i) for i in range(n)]
    s = RMat.diag(space, v)
    si = RMat.diag(space, [x.inv() for x in v])
    left = s.kron(s)
    right = si.kron(si)
    return left * r_tilde * right - diag_sum(space).scale(Fraction(1, 2))


def trig_integral(space: VarSpace, n: int, L: MatOperator | None = None, s12: RMat | None = None) -> MatOperator:
    """``tr_12 C^t2 (L_1 + hbar s_21^t2)^n`` as a 0-leg differential operator."""
    if not 1 <= n <= 3:
        raise ValueError("trig integrals are built for 1 <= n <= 3")
    if L is None or s12 is None:
        objs = trig_objects(space)
        L = objs["L_conj"] if L is None else L
        s12 = objs["s12"] if s12 is None else s12
    X = L.embed([1], 2) + MatOperator.from_mat(s12.swap().partial_transpose(2).scale(space.hbar_f), "deriv")
    op = X ** n
    Ct2 = permutation(space).partial_transpose(2)
    return (MatOperator.from_mat(Ct2, "deriv") * op).partial_trace([1, 2])


def operator_entry(L: MatOperator, a: int, b: int) -> MatOperator:
    """Entry ``(a, b)`` of a 1-leg operator as a 0-leg operator."""
    sp = L.space
    terms = {}
    for mono, c in L.terms.items():
        e = c[a, b]
        if not e.is_zero():
            terms[mono] = RMat.scalar(sp, e)
    return MatOperator(sp, 0, L.flavor, terms)


def trig_integral_component(space: VarSpace, n: int, L: MatOperator | None = None) -> MatOperator:
    """Component expansion of :func:`trig_integral`.

    Sums over index chains ``(j_1, m_0=j_1) -> (j_2, m_1) -> .. -> (j_{n+1}, m_n)``
    closed by ``j_{n+1} = m_n``, each step contributing

        L_{j j'} delta_{m m'} + hbar [j != j'] delta_{m' j'}
            (delta_{m j'} - delta_{m j}) / (D_j / D_j' - 1).
    """
    if not 1 <= n <= 3:
        raise ValueError("trig integrals are built for 1 <= n <= 3")
    N = space.n
    L = trig_objects(space)["L_conj"] if L is None else L
    h = space.hbar_f
    v = [space.pos(i) for i in range(N)]
    entries = {(a, b): operator_entry(L, a, b) for a in range(N) for b in range(N)}
    one = MatOperator.identity(space, 0, "deriv")
    frac = {}
    for j in range(N):
        for jp in range(N):
            if j != jp:
                # 1/(D_j/D_j' - 1) = v_j'^2 / (v_j^2 - v_j'^2)
                frac[(j, jp)] = h * v[jp] * v[jp] * _inv_sq_diff(space, j, jp)
    state = {(j, j): one for j in range(N)}
    for _ in range(n):
        nxt: dict = {}
        for (j, m), acc in state.items():
            for jp in range(N):
                for mp in range(N):
                    factor = None
                    if m == mp and not entries[(j, jp)].is_zero():
                        factor = entries[(j, jp)]
                    if j != jp and mp == jp:
                        d = (1 if m == jp else 0) - (1 if m == j else 0)
                        if d:
                            extra = frac[(j, jp)] * d
                            factor = extra if factor is None else factor + extra
                    if factor is None:
                        continue
                    if isinstance(factor, RatFun):
                        factor = MatOperator.from_mat(RMat.scalar(space, factor), "deriv")
                    term = acc * factor
                    key = (jp, mp)
                    nxt[key] = term if key not in nxt else nxt[key] + term
        state = nxt
    parts = [op for (j, m), op in state.items() if j == m]
    out = MatOperator(space, 0, "deriv")
    for p in parts:
        out = out + p
    return out


# -- classical L-operators ------------------------------------------------------------------

def classical_rs_L(space: VarSpace) -> PhaseMat:
    """``L = W diag(P)`` with ``P_j = exp(p_j)`` as phase-space symbols."""
    return PhaseMat.from_mat(w_matrix(space)) * momentum_diag(space)


def classical_trig_L(space: VarSpace) -> PhaseMat:
    """``sum_i p_i E_ii + (1/2) sum csch(q_ij/2) E_ij`` on the v phase space.

    The momentum is the classical limit of ``hbar d/dq``, so it enters with the
    sign opposite to the canonical symbol: ``{q_i, p_j} = -delta_ij``.
    """
    _require_v(space)
    n = space.n
    half = Fraction(1, 2)
    off = RMat(space, 1, {(i, j): _csch_half(space, i, j) * half
                          for i in range(n) for j in range(n) if i != j})
    return PhaseMat.from_mat(off) - momentum_diag(space)


# -- registry for printing ---------------------------------------------------------------------------

def _trig(key):
    return lambda sp: trig_objects(sp)[key]


REGISTRY = {
    "F": ModelObject("F", "Frobenius basis F_ij = E_ii - E_ij", "q", frobenius_basis),
    "Q": ModelObject("Q", "diag(q)", "q", position_matrix),
    "C": ModelObject("C", "permutation operator", "q", permutation),
    "r": ModelObject("r", "classical Frobenius r-matrix", "q", classical_r),
    "rbar": ModelObject("rbar", "classical dynamical rbar-matrix", "q", classical_rbar),
    "R": ModelObject("R", "quantum R = 1 + hbar r", "q", quantum_R),
    "Rinv": ModelObject("Rinv", "R^{-1} = 1 - hbar r", "q", quantum_R_inv),
    "Rbar": ModelObject("Rbar", "quantum dynamical Rbar", "q", quantum_Rbar),
    "Rbar_inv": ModelObject("Rbar_inv", "Rbar^{-1}", "q", quantum_Rbar_inv),
    "W": ModelObject("W", "Frobenius group element of the RS representation", "q", w_matrix),
    "b": ModelObject("b", "row vector b = eU", "q", b_vector),
    "moment_residual": ModelObject("moment_residual", "moment-map residual (zero)", "q", moment_residual),
    "L": ModelObject("L", "quantum rational RS L-operator W P", "q", rs_L),
    "I1": ModelObject("I1", "quantum trace I_1", "q", lambda sp: rs_integral(sp, 1)),
    "I2": ModelObject("I2", "quantum trace I_2", "q", lambda sp: rs_integral(sp, 2)),
    "J2": ModelObject("J2", "Frobenius integral J_2", "q", lambda sp: frobenius_J(sp, 2)),
    "Lcm": ModelObject("Lcm", "rational CM L-operator", "q", cm_rational_L),
    "s12": ModelObject("s12", "trigonometric s-matrix", "v", _trig("s12")),
    "r_tilde": ModelObject("r_tilde", "trigonometric r-matrix -s + C/2", "v", _trig("r_tilde")),
    "R_tilde": ModelObject("R_tilde", "conjugated trigonometric r-matrix", "v", _trig("R_tilde")),
    "extra_term": ModelObject("extra_term", "difference from the standard CM r-matrix", "v", _trig("extra_term")),
    "D": ModelObject("D", "diag(v_i^2)", "v", _trig("D")),
    "L_tilde": ModelObject("L_tilde", "trigonometric CM L-operator", "v", _trig("L_cm")),
}
