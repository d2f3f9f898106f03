"""Classical phase-space functions and the canonical Poisson bracket.

A :class:`PhaseMat` is a polynomial in momentum symbols with :class:`RMat`
coefficients, stored as ``{exponent tuple: RMat}``; a :class:`PhaseFun` is the
0-leg case.  Two phase spaces:

q-flavor
    symbols ``P_i = exp(p_i)``, so ``{q_i, P_j} = delta_ij P_j`` and
    ``{f, g} = sum_i (d_i f * P_i dg/dP_i - P_i df/dP_i * d_i g)``.
v-flavor
    additive momenta ``p_i`` with ``v_i = exp(q_i/2)`` and
    ``{f, g} = sum_i (D_i f * dg/dp_i - df/dp_i * D_i g)``, ``D_i = (v_i/2) d/dv_i``.

Coefficient matrices commute with the momentum symbols, so products are just
products of coefficients with added exponents.
"""
from __future__ import annotations

from collections import defaultdict
from typing import Sequence

from .coeffield import RatFun, VarSpace
from .tensoralg import DimensionMismatch, RMat

__all__ = ["PhaseMat", "PhaseFun", "pbracket", "pbracket_tensor", "momentum_diag"]


def _add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


class PhaseMat:
    """``sum_a M_a * P^a`` with matrix coefficients on ``legs`` legs."""

    __slots__ = ("space", "legs", "terms")

    def __init__(self, space: VarSpace, legs: int, terms: dict | None = None):
        self.space = space
        self.legs = legs
        self.terms = {}
        for mono, m in (terms or {}).items():
            mono = tuple(mono)
            if len(mono) != space.n or min(mono) < 0:
                raise ValueError(f"bad momentum exponent {mono}")
            if m.legs != legs:
                raise DimensionMismatch(f"coefficient on {m.legs} legs, expected {legs}")
            if not m.is_zero():
                self.terms[mono] = m

    @classmethod
    def _raw(cls, space, legs, terms):
        obj = cls.__new__(cls)
        obj.space, obj.legs, obj.terms = space, legs, terms
        return obj

    @classmethod
    def from_mat(cls, mat: RMat) -> "PhaseMat":
        return cls(mat.space, mat.legs, {(0,) * mat.space.n: mat})

    @classmethod
    def zero(cls, space: VarSpace, legs: int = 1) -> "PhaseMat":
        return cls._raw(space, legs, {})

    def is_zero(self) -> bool:
        return not self.terms

    def residual_terms(self) -> int:
        return sum(m.nnz() for m in self.terms.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhaseMat):
            return NotImplemented
        return self.legs == other.legs and self.terms == other.terms

    def __repr__(self) -> str:
        return f"{type(self).__name__}(N={self.space.n}, legs={self.legs}, monomials={len(self.terms)})"

    def _wrap(self, terms: dict) -> "PhaseMat":
        return type(self)._raw(self.space, self.legs, terms)

    def _coerce(self, other) -> "PhaseMat":
        if isinstance(other, PhaseMat):
            if other.legs != self.legs:
                raise DimensionMismatch(f"legs {self.legs} vs {other.legs}")
            return other
        if isinstance(other, RMat):
            return PhaseMat.from_mat(other)
        if isinstance(other, (RatFun, int)) or hasattr(other, "denominator"):
            return PhaseMat.from_mat(RMat.identity(self.space, self.legs, scale=other))
        raise TypeError(f"cannot combine PhaseMat with {type(other).__name__}")

    def __neg__(self):
        return self._wrap({m: -c for m, c in self.terms.items()})

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out[m] + c if m in out else c
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s
        return self._wrap(out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other.legs != self.legs:
            raise DimensionMismatch(f"legs {self.legs} vs {other.legs}")
        acc = defaultdict(list)
        for a, x in self.terms.items():
            for b, y in other.terms.items():
                acc[_add(a, b)].append(x * y)
        out = {}
        for m, mats in acc.items():
            s = RMat.sum_of(mats)
            if not s.is_zero():
                out[m] = s
        return self._wrap(out)

    def __rmul__(self, other):
        return self._coerce(other) * self

    def __pow__(self, k: int):
        out = self._wrap({(0,) * self.space.n: RMat.identity(self.space, self.legs)})
        for _ in range(k):
            out = out * self
        return out

    def commutator(self, other):
        other = self._coerce(other)
        return self * other - other * self

    def _map(self, fn, legs: int) -> "PhaseMat":
        out = {}
        for m, c in self.terms.items():
            nc = fn(c)
            if not nc.is_zero():
                out[m] = nc
        return PhaseMat._raw(self.space, legs, out)

    def embed(self, positions: Sequence[int], total_legs: int) -> "PhaseMat":
        return self._map(lambda c: c.embed(positions, total_legs), total_legs)

    def swap(self, i: int = 1, j: int = 2) -> "PhaseMat":
        return self._map(lambda c: c.swap(i, j), self.legs)

    def trace(self) -> "PhaseFun":
        tr = self._map(lambda c: RMat.scalar(self.space, c.trace()), 0)
        return PhaseFun._raw(self.space, 0, tr.terms)

    def entry(self, r: int, c: int) -> "PhaseFun":
        out = {}
        for m, mat in self.terms.items():
            e = mat[r, c]
            if not e.is_zero():
                out[m] = RMat.scalar(self.space, e)
        return PhaseFun._raw(self.space, 0, out)

    # -- derivatives -----------------------------------------------------------------
    def d_position(self, i: int) -> "PhaseMat":
        """``d/dq_i`` of the coefficients (``D_i`` on v-space)."""
        out = {}
        for m, c in self.terms.items():
            d = c.map(lambda f: f.qderive(i))
            if not d.is_zero():
                out[m] = d
        return self._wrap(out)

    def d_momentum(self, i: int) -> "PhaseMat":
        """``P_i d/dP_i`` on q-space (Euler operator), ``d/dp_i`` on v-space."""
        out = {}
        for m, c in self.terms.items():
            k = m[i]
            if not k:
                continue
            if self.space.flavor == "q":
                out[m] = c.scale(k)
            else:
                nm = list(m)
                nm[i] -= 1
                out[tuple(nm)] = c.scale(k)
        return self._wrap(out)


class PhaseFun(PhaseMat):
    """Scalar phase-space function (a 0-leg :class:`PhaseMat`)."""

    def __init__(self, space: VarSpace, terms: dict | None = None):
        conv = {}
        for m, c in (terms or {}).items():
            conv[m] = c if isinstance(c, RMat) else RMat.scalar(space, c)
        super().__init__(space, 0, conv)

    @classmethod
    def position(cls, space: VarSpace, i: int) -> "PhaseFun":
        return cls(space, {(0,) * space.n: space.pos(i)})

    @classmethod
    def momentum(cls, space: VarSpace, i: int, power: int = 1) -> "PhaseFun":
        mono = [0] * space.n
        mono[i] = power
        return cls(space, {tuple(mono): space.one})

    @classmethod
    def of(cls, space: VarSpace, f) -> "PhaseFun":
        if not isinstance(f, RatFun):
            f = space.const(f)
        return cls(space, {(0,) * space.n: f})

    def coeff(self, mono: Sequence[int]) -> RatFun:
        m = self.terms.get(tuple(mono))
        return self.space.zero if m is None else m[0, 0]

    def _coerce(self, other):
        if isinstance(other, PhaseMat) and not isinstance(other, PhaseFun) and other.legs == 0:
            return PhaseFun._raw(other.space, 0, other.terms)
        if isinstance(other, (RatFun, int)) or hasattr(other, "denominator"):
            return PhaseFun.of(self.space, other)
        return super()._coerce(other)

    def _wrap(self, terms):
        return PhaseFun._raw(self.space, 0, terms)


def _bracket_parts(f: PhaseMat, g: PhaseMat, combine) -> list:
    parts = []
    for i in range(f.space.n):
        fq, fp = f.d_position(i), f.d_momentum(i)
        gq, gp = g.d_position(i), g.d_momentum(i)
        if not (fq.is_zero() or gp.is_zero()):
            parts.append(combine(fq, gp))
        if not (fp.is_zero() or gq.is_zero()):
            parts.append(-combine(fp, gq))
    return parts


def pbracket(f: PhaseFun, g: PhaseFun) -> PhaseFun:
    """Canonical bracket of two scalar phase-space functions."""
    if f.space != g.space:
        raise ValueError("functions live on different phase spaces")
    out = PhaseFun(f.space)
    for p in _bracket_parts(f, g, lambda a, b: a * b):
        out = out + p
    return out


def _tensor(a: PhaseMat, b: PhaseMat) -> PhaseMat:
    acc = defaultdict(list)
    for m, x in a.terms.items():
        for k, y in b.terms.items():
            acc[_add(m, k)].append(x.kron(y))
    return PhaseMat(a.space, a.legs + b.legs, {m: RMat.sum_of(v) for m, v in acc.items()})


def pbracket_tensor(M: PhaseMat, K: PhaseMat) -> PhaseMat:
    """``{M_1, K_2}``: the 2-leg matrix of entrywise brackets ``{M_ij, K_kl}``."""
    if M.legs != 1 or K.legs != 1:
        raise DimensionMismatch("tensor bracket takes two 1-leg matrices")
    out = PhaseMat.zero(M.space, 2)
    for p in _bracket_parts(M, K, _tensor):
        out = out + p
    return out


def momentum_diag(space: VarSpace) -> PhaseMat:
    """``diag(P_1, .., P_N)`` (or ``diag(p_i)`` on v-space)."""
    n = space.n
    terms = {}
    for i in range(n):
        mono = [0] * n
        mono[i] = 1
        terms[tuple(mono)] = RMat.unit(space, i, i)
    return PhaseMat(space, 1, terms)
