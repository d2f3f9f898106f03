"""Matrix-valued difference and differential operators in normal form.

A :class:`MatOperator` is a finite sum ``sum_a A_a * M^a`` with :class:`RMat`
coefficients written to the left of monomials ``M^a``.  Two flavors:

``shift``
    ``M_i = S_i`` with ``S_i f(q) = f(q_1, .., q_i - hbar, ..) S_i``; exponents
    may be negative.  The quantum momentum ``exp(-hbar d/dq_j)`` is ``S_j``.
``deriv``
    ``M_i = d/dq_i`` (on v-space the same derivation, ``(v_i/2) d/dv_i``),
    with the Leibniz rule ``d_i f = f d_i + (d_i f)``.
"""
from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from itertools import product
from math import comb
from typing import Sequence

from .coeffield import RatFun, VarSpace
from .tensoralg import BadPositions, DimensionMismatch, RMat

__all__ = [
    "MatOperator",
    "FlavorMismatch",
    "op_mul",
    "op_commutator",
    "op_is_zero",
    "op_partial_trace",
    "momentum",
]

FLAVORS = ("shift", "deriv")


class FlavorMismatch(ValueError):
    pass


def _add_mono(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


class MatOperator:
    """Normal-ordered operator with matrix coefficients on ``legs`` legs."""

    __slots__ = ("space", "legs", "flavor", "terms")

    def __init__(self, space: VarSpace, legs: int, flavor: str, terms: dict | None = None):
        if flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {flavor!r}")
        self.space = space
        self.legs = legs
        self.flavor = flavor
        self.terms = {}
        for mono, mat in (terms or {}).items():
            mono = tuple(mono)
            if len(mono) != space.n:
                raise ValueError(f"monomial {mono} has wrong length")
            if flavor == "deriv" and min(mono) < 0:
                raise ValueError("derivation exponents must be non-negative")
            if mat.legs != legs:
                raise DimensionMismatch(f"coefficient on {mat.legs} legs, operator on {legs}")
            if not mat.is_zero():
                self.terms[mono] = mat

    @classmethod
    def _raw(cls, space, legs, flavor, terms):
        op = cls.__new__(cls)
        op.space, op.legs, op.flavor, op.terms = space, legs, flavor, terms
        return op

    # -- constructors ------------------------------------------------------------
    @classmethod
    def from_mat(cls, mat: RMat, flavor: str = "shift") -> "MatOperator":
        return cls(mat.space, mat.legs, flavor, {(0,) * mat.space.n: mat})

    @classmethod
    def identity(cls, space: VarSpace, legs: int = 0, flavor: str = "shift") -> "MatOperator":
        return cls.from_mat(RMat.identity(space, legs), flavor)

    @classmethod
    def monomial(cls, space: VarSpace, mono: Sequence[int], flavor: str = "shift",
                 coeff: RMat | None = None, legs: int = 0) -> "MatOperator":
        if coeff is None:
            coeff = RMat.identity(space, legs)
        return cls(space, coeff.legs, flavor, {tuple(mono): coeff})

    # -- properties ---------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.space.n

    def is_zero(self) -> bool:
        return not self.terms

    def residual_terms(self) -> int:
        return sum(m.nnz() for m in self.terms.values())

    def coeff(self, mono: Sequence[int]) -> RMat:
        return self.terms.get(tuple(mono), RMat.zero(self.space, self.legs))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatOperator):
            return NotImplemented
        return (self.legs, self.flavor) == (other.legs, other.flavor) and self.terms == other.terms

    def __repr__(self) -> str:
        return f"MatOperator({self.flavor}, N={self.n}, legs={self.legs}, monomials={len(self.terms)})"

    def _coerce(self, other) -> "MatOperator":
        if isinstance(other, MatOperator):
            if other.flavor != self.flavor:
                raise FlavorMismatch(f"{self.flavor} vs {other.flavor}")
            if other.legs != self.legs:
                raise DimensionMismatch(f"legs {self.legs} vs {other.legs}")
            return other
        if isinstance(other, RMat):
            if other.legs != self.legs:
                raise DimensionMismatch(f"legs {self.legs} vs {other.legs}")
            return MatOperator.from_mat(other, self.flavor)
        if isinstance(other, (RatFun, int, Fraction)):
            return MatOperator.from_mat(RMat.identity(self.space, self.legs, scale=other), self.flavor)
        raise TypeError(f"cannot combine MatOperator with {type(other).__name__}")

    # -- linear structure -----------------------------------------------------------
    def __neg__(self) -> "MatOperator":
        return MatOperator._raw(self.space, self.legs, self.flavor, {m: -c for m, c in self.terms.items()})

    def __add__(self, other) -> "MatOperator":
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            if m in out:
                s = out[m] + c
                if s.is_zero():
                    del out[m]
                else:
                    out[m] = s
            else:
                out[m] = c
        return MatOperator._raw(self.space, self.legs, self.flavor, out)

    __radd__ = __add__

    def __sub__(self, other) -> "MatOperator":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "MatOperator":
        return self._coerce(other) - self

    # -- products ----------------------------------------------------------------------
    def __mul__(self, other) -> "MatOperator":
        other = self._coerce(other)
        acc = defaultdict(list)
        if self.flavor == "shift":
            for b_mono, b in other.terms.items():
                for a_mono, a in self.terms.items():
                    shifted = b.map(lambda f, s=a_mono: f.shift(s)) if any(a_mono) else b
                    acc[_add_mono(a_mono, b_mono)].append(a * shifted)
        else:
            for b_mono, b in other.terms.items():
                derived = {(0,) * self.n: b}
                for a_mono, a in self.terms.items():
                    for part in product(*(range(k + 1) for k in a_mono)):
                        db = _derivative(derived, part)
                        if db.is_zero():
                            continue
                        c = 1
                        for k, p in zip(a_mono, part):
                            c *= comb(k, p)
                        term = a * db
                        if c != 1:
                            term = term.scale(c)
                        rest = tuple(k - p for k, p in zip(a_mono, part))
                        acc[_add_mono(rest, b_mono)].append(term)
        out = {}
        for mono, mats in acc.items():
            s = RMat.sum_of(mats)
            if not s.is_zero():
                out[mono] = s
        return MatOperator._raw(self.space, self.legs, self.flavor, out)

    def __rmul__(self, other) -> "MatOperator":
        return self._coerce(other) * self

    def __pow__(self, k: int) -> "MatOperator":
        out = MatOperator.identity(self.space, self.legs, self.flavor)
        for _ in range(k):
            out = out * self
        return out

    def commutator(self, other) -> "MatOperator":
        other = self._coerce(other)
        return self * other - other * self

    # -- coefficient-wise leg operations ------------------------------------------------
    def _map_coeffs(self, fn, legs=None) -> "MatOperator":
        out = {}
        for m, c in self.terms.items():
            nc = fn(c)
            if not nc.is_zero():
                out[m] = nc
        new_legs = self.legs if legs is None else legs
        return MatOperator._raw(self.space, new_legs, self.flavor, out)

    def partial_trace(self, legs) -> "MatOperator":
        legs = sorted(set(legs))
        if any(k < 1 or k > self.legs for k in legs):
            raise BadPositions(f"trace over {legs} on {self.legs} legs")
        return self._map_coeffs(lambda c: c.partial_trace(legs), self.legs - len(legs))

    def partial_transpose(self, leg: int) -> "MatOperator":
        return self._map_coeffs(lambda c: c.partial_transpose(leg))

    def embed(self, positions: Sequence[int], total_legs: int) -> "MatOperator":
        return self._map_coeffs(lambda c: c.embed(positions, total_legs), total_legs)

    def swap(self, i: int = 1, j: int = 2) -> "MatOperator":
        return self._map_coeffs(lambda c: c.swap(i, j))

    def map_entries(self, fn) -> "MatOperator":
        return self._map_coeffs(lambda c: c.map(fn))

    # -- action on functions ---------------------------------------------------------------
    def apply(self, f):
        """Act on a test function (RatFun) or a matrix of functions (RMat)."""
        sp = self.space
        if isinstance(f, RatFun):
            f = RMat.identity(sp, self.legs, scale=f)
        parts = []
        for mono, a in self.terms.items():
            if self.flavor == "shift":
                g = f.map(lambda x, s=mono: x.shift(s)) if any(mono) else f
            else:
                g = f
                for i, k in enumerate(mono):
                    for _ in range(k):
                        g = g.map(lambda x, i=i: x.qderive(i))
            parts.append(a * g)
        return RMat.sum_of(parts) if parts else RMat.zero(sp, self.legs)


def _derivative(cache: dict, part: tuple) -> RMat:
    """``d^part`` applied entrywise to the base coefficient ``cache[(0,..)]``."""
    hit = cache.get(part)
    if hit is not None:
        return hit
    i = max(k for k, p in enumerate(part) if p)
    prev = list(part)
    prev[i] -= 1
    base = _derivative(cache, tuple(prev))
    out = base.map(lambda f: f.qderive(i))
    cache[part] = out
    return out


def momentum(space: VarSpace, leg: int = 1, total_legs: int = 1, power: int = 1) -> MatOperator:
    """``P = sum_k E_kk S_k^power`` placed on ``leg`` of ``total_legs``."""
    n = space.n
    terms = {}
    for k in range(n):
        mono = [0] * n
        mono[k] = power
        terms[tuple(mono)] = RMat.unit(space, k, k).embed([leg], total_legs)
    return MatOperator(space, total_legs, "shift", terms)


def op_mul(a: MatOperator, b: MatOperator) -> MatOperator:
    return a * b


def op_commutator(a: MatOperator, b: MatOperator) -> MatOperator:
    return a.commutator(b)


def op_is_zero(a: MatOperator) -> bool:
    return a.is_zero()


def op_partial_trace(a: MatOperator, legs) -> MatOperator:
    return a.partial_trace(legs)
