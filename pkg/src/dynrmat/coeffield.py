"""Exact rational functions with factored linear-form denominators.

Every coefficient in this package is a quotient ``num / prod(l_k ** e_k)`` where
``num`` is a sparse multivariate polynomial with rational coefficients and each
``l_k`` is a primitive integer linear form.  Denominators stay factored, so
addition never needs a multivariate gcd: common factors are only removed by
exact trial division of the numerator by the (known) linear forms.

The polynomial engine is FLINT's ``fmpq_mpoly`` (via python-flint).
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import flint

__all__ = [
    "VarSpace",
    "LinForm",
    "RatFun",
    "FactorMismatch",
    "PoleError",
    "FlavorError",
]


class FactorMismatch(ValueError):
    """A supplied factorization does not expand to the numerator."""


class PoleError(ZeroDivisionError):
    """Evaluation or specialization hit a vanishing denominator factor."""


class FlavorError(ValueError):
    """Operation not defined on this kind of variable space."""


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, flint.fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def _fmpq(x) -> flint.fmpq:
    x = _to_fraction(x)
    return flint.fmpq(x.numerator, x.denominator)


@dataclass(frozen=True, order=True)
class LinForm:
    """Primitive integer linear form ``sum(coeffs[k] * x_k) + const``.

    ``coeffs`` runs over all variables of the owning :class:`VarSpace`
    (positions, then hbar, then gamma).  Canonical forms have integer content
    one and a positive first nonzero variable coefficient.
    """

    coeffs: tuple
    const: int = 0

    @staticmethod
    def canonical(coeffs: Sequence, const=0):
        """Return ``(form, unit)`` with ``unit * form`` equal to the input.

        ``form`` is ``None`` when every variable coefficient vanishes; the
        unit is then the constant value itself.
        """
        vals = [_to_fraction(c) for c in coeffs]
        const = _to_fraction(const)
        lead = next((c for c in vals if c != 0), None)
        if lead is None:
            return None, const
        den = math.lcm(*(v.denominator for v in vals), const.denominator)
        ints = [int(v * den) for v in vals]
        ic = int(const * den)
        g = math.gcd(*ints, ic)
        if lead < 0:
            g = -g
        form = LinForm(tuple(i // g for i in ints), ic // g)
        return form, Fraction(g, den)

    def value(self, point: Sequence[Fraction]) -> Fraction:
        return sum((c * x for c, x in zip(self.coeffs, point) if c), Fraction(self.const))


@dataclass(frozen=True)
class VarSpace:
    """Variables ``x_1..x_N`` (``q`` or ``v`` flavor) plus ``hbar`` and ``gamma``.

    ``hbar``/``gamma`` set to a rational value specialize the parameter: every
    object built through :attr:`hbar_f` / :attr:`gamma_f` then carries the
    constant instead of the symbol.  The ``v`` flavor stands for
    ``v_i = exp(q_i / 2)``.
    """

    n: int
    flavor: str = "q"
    hbar: Fraction | None = None
    gamma: Fraction | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"N must be >= 2, got {self.n}")
        if self.flavor not in ("q", "v"):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        for name in ("hbar", "gamma"):
            val = getattr(self, name)
            if val is not None and not isinstance(val, Fraction):
                object.__setattr__(self, name, _to_fraction(val))

    def __getstate__(self):
        return {"n": self.n, "flavor": self.flavor, "hbar": self.hbar, "gamma": self.gamma}

    def __setstate__(self, state):
        for k, v in state.items():
            object.__setattr__(self, k, v)
        object.__setattr__(self, "_cache", {})

    # -- variable bookkeeping -------------------------------------------------
    @property
    def names(self) -> tuple:
        return tuple(f"{self.flavor}{i + 1}" for i in range(self.n)) + ("hbar", "gamma")

    @property
    def nvars(self) -> int:
        return self.n + 2

    @property
    def hbar_index(self) -> int:
        return self.n

    @property
    def gamma_index(self) -> int:
        return self.n + 1

    @cached_property
    def ctx(self):
        return flint.fmpq_mpoly_ctx.get(self.names, "lex")

    @cached_property
    def _gens(self):
        return self.ctx.gens()

    def param_values(self) -> dict:
        vals = {}
        if self.hbar is not None:
            vals[self.hbar_index] = self.hbar
        if self.gamma is not None:
            vals[self.gamma_index] = self.gamma
        return vals

    def with_params(self, hbar=None, gamma=None) -> "VarSpace":
        return VarSpace(self.n, self.flavor, hbar, gamma)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def linform_poly(self, lf: LinForm):
        cache = self._cache.setdefault("lf", {})
        p = cache.get(lf)
        if p is None:
            p = self.ctx.constant(lf.const)
            for g, c in zip(self._gens, lf.coeffs):
                if c:
                    p = p + c * g
            cache[lf] = p
        return p

    def linform_str(self, lf: LinForm) -> str:
        return str(self.linform_poly(lf))

    # -- constructors ------------------------------------------------------------
    @property
    def zero(self) -> "RatFun":
        return RatFun(self, self.ctx.constant(0), ())

    @property
    def one(self) -> "RatFun":
        return RatFun(self, self.ctx.constant(1), ())

    def const(self, c) -> "RatFun":
        return RatFun(self, self.ctx.constant(_fmpq(c)), ())

    def var(self, k: int) -> "RatFun":
        """The k-th raw variable (0-based over positions, hbar, gamma)."""
        return RatFun(self, self._gens[k], ())

    def pos(self, i: int) -> "RatFun":
        return self.var(i)

    @property
    def hbar_f(self) -> "RatFun":
        return self.var(self.hbar_index) if self.hbar is None else self.const(self.hbar)

    @property
    def gamma_f(self) -> "RatFun":
        return self.var(self.gamma_index) if self.gamma is None else self.const(self.gamma)

    def linear(self, coeffs: Mapping[int, object], const=0):
        """Canonical ``(LinForm | None, unit)`` for a linear expression.

        Specialized parameters are folded into the constant term.
        """
        vec = [Fraction(0)] * self.nvars
        c0 = _to_fraction(const)
        params = self.param_values()
        for k, c in coeffs.items():
            c = _to_fraction(c)
            if k in params:
                c0 += c * params[k]
            else:
                vec[k] += c
        return LinForm.canonical(vec, c0)

    def diff(self, i: int, j: int, hbar=0, gamma=0) -> "RatFun":
        """``x_i - x_j + hbar_coeff * hbar + gamma_coeff * gamma`` as a RatFun."""
        coeffs = {i: 1, j: -1}
        if i == j:
            coeffs = {}
        if hbar:
            coeffs[self.hbar_index] = hbar
        if gamma:
            coeffs[self.gamma_index] = gamma
        return RatFun.from_linear(self, coeffs)

    def inv_diff(self, i: int, j: int, hbar=0, gamma=0, power: int = 1) -> "RatFun":
        """``1 / (x_i - x_j + ...)^power`` without going through general inversion."""
        coeffs = {i: 1, j: -1}
        if i == j:
            coeffs = {}
        if hbar:
            coeffs[self.hbar_index] = hbar
        if gamma:
            coeffs[self.gamma_index] = gamma
        return self.inv_linear(coeffs, power=power)

    def inv_linear(self, coeffs: Mapping[int, object], const=0, power: int = 1) -> "RatFun":
        """``1 / (linear expression)^power``."""
        lf, unit = self.linear(coeffs, const)
        if lf is None:
            if unit == 0:
                raise ZeroDivisionError("reciprocal of zero")
            return self.const(Fraction(1) / unit ** power)
        return RatFun(self, self.ctx.constant(_fmpq(Fraction(1) / unit ** power)), ((lf, power),))

    def random_point(self, rng: random.Random, prime: int = 2147483647) -> tuple:
        """Random rational coordinates for every variable (specialized ones fixed)."""
        params = self.param_values()
        pt = []
        for k in range(self.nvars):
            if k in params:
                pt.append(params[k])
            else:
                pt.append(Fraction(rng.randrange(-prime, prime), rng.randrange(1, 1 << 20)))
        return tuple(pt)


def _reduce(space: VarSpace, num, den: Mapping[LinForm, int]) -> "RatFun":
    if num.is_zero():
        return RatFun(space, num, ())
    out = []
    for lf in sorted(den):
        k = den[lf]
        if k <= 0:
            continue
        p = space.linform_poly(lf)
        while k:
            qt, rem = divmod(num, p)
            if not rem.is_zero():
                break
            num = qt
            k -= 1
        if k:
            out.append((lf, k))
    return RatFun(space, num, tuple(out))


def _cofactor(space: VarSpace, den: Mapping[LinForm, int], target: Mapping[LinForm, int]):
    p = space.ctx.constant(1)
    for lf, k in target.items():
        e = k - den.get(lf, 0)
        if e:
            p = p * space.linform_poly(lf) ** e
    return p


def _cancel(space: VarSpace, num, den: tuple):
    """Trial-divide ``num`` by the factors of ``den``; return (num, remaining den dict)."""
    rest = {}
    for lf, k in den:
        p = space.linform_poly(lf)
        while k:
            qt, rem = divmod(num, p)
            if not rem.is_zero():
                break
            num = qt
            k -= 1
        if k:
            rest[lf] = k
    return num, rest


class RatFun:
    """Canonical exact rational function over a :class:`VarSpace`.

    Equality is syntactic: the numerator carries the scalar unit, denominator
    factors are canonical linear forms sorted in a fixed order, and no factor
    divides the numerator.
    """

    __slots__ = ("space", "num", "den")

    def __init__(self, space: VarSpace, num, den: tuple = ()):
        self.space = space
        self.num = num
        self.den = den

    @classmethod
    def from_linear(cls, space: VarSpace, coeffs: Mapping[int, object], const=0) -> "RatFun":
        lf, unit = space.linear(coeffs, const)
        if lf is None:
            return space.const(unit)
        return cls(space, space.linform_poly(lf) * _fmpq(unit), ())

    @classmethod
    def from_poly(cls, space: VarSpace, num, den: Mapping[LinForm, int] | None = None) -> "RatFun":
        return _reduce(space, num, den or {})

    @staticmethod
    def sum_of(items: Iterable["RatFun"], space: VarSpace | None = None) -> "RatFun":
        """Sum with a single common denominator and a single reduction pass."""
        items = list(items)
        if space is None and items:
            space = items[0].space
        items = [x for x in items if not x.num.is_zero()]
        if not items:
            if space is None:
                raise ValueError("empty sum without a variable space")
            return space.zero
        if len(items) == 1:
            return items[0]
        space = items[0].space
        target: dict = {}
        for it in items:
            for lf, k in it.den:
                if target.get(lf, 0) < k:
                    target[lf] = k
        num = space.ctx.constant(0)
        for it in items:
            num = num + it.num * _cofactor(space, dict(it.den), target)
        return _reduce(space, num, target)

    # -- coercion ------------------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, RatFun):
            if other.space is not self.space and other.space != self.space:
                raise ValueError("RatFun operands live on different variable spaces")
            return other
        if isinstance(other, (int, Fraction)):
            return self.space.const(other)
        return None

    # -- predicates -----------------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self) -> bool:
        return not self.num.is_zero()

    def is_constant(self) -> bool:
        return not self.den and self.num.is_constant()

    def terms(self) -> int:
        return len(self.num.monoms())

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self.den == other.den and self.num == other.num

    def __hash__(self) -> int:
        return hash((tuple((m, str(c)) for m, c in self.num.terms()), self.den))

    # -- field arithmetic ---------------------------------------------------------
    def __neg__(self) -> "RatFun":
        return RatFun(self.space, -self.num, self.den)

    def __add__(self, other) -> "RatFun":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.num.is_zero():
            return other
        if other.num.is_zero():
            return self
        if self.den == other.den:
            return _reduce(self.space, self.num + other.num, dict(self.den))
        a, b = dict(self.den), dict(other.den)
        target = dict(a)
        for lf, k in b.items():
            if target.get(lf, 0) < k:
                target[lf] = k
        num = self.num * _cofactor(self.space, a, target) + other.num * _cofactor(self.space, b, target)
        return _reduce(self.space, num, target)

    __radd__ = __add__

    def __sub__(self, other) -> "RatFun":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "RatFun":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "RatFun":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return self.space.zero
            return RatFun(self.space, self.num * _fmpq(other), self.den)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.num.is_zero() or other.num.is_zero():
            return self.space.zero
        if not other.den and not self.den:
            return RatFun(self.space, self.num * other.num, ())
        sp = self.space
        a_num, b_den = _cancel(sp, self.num, other.den)
        b_num, a_den = _cancel(sp, other.num, self.den)
        den = dict(a_den)
        for lf, k in b_den.items():
            den[lf] = den.get(lf, 0) + k
        return RatFun(sp, a_num * b_num, tuple(sorted(den.items())))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "RatFun":
        if k < 0:
            return self.inv() ** (-k)
        return RatFun(self.space, self.num ** k, tuple((lf, e * k) for lf, e in self.den))

    def inv_factored(self, numerator_factors: Sequence, unit=1) -> "RatFun":
        """Reciprocal given ``num == unit * prod(form ** power)``."""
        if self.num.is_zero():
            raise ZeroDivisionError("reciprocal of zero")
        sp = self.space
        unit = _to_fraction(unit)
        if unit == 0:
            raise FactorMismatch("zero unit")
        expanded = sp.ctx.constant(_fmpq(unit))
        new_den: dict = {}
        for lf, k in numerator_factors:
            expanded = expanded * sp.linform_poly(lf) ** k
            new_den[lf] = new_den.get(lf, 0) + k
        if expanded != self.num:
            raise FactorMismatch(f"factorization does not expand to {self.num}")
        num = sp.ctx.constant(_fmpq(1 / unit))
        for lf, k in self.den:
            num = num * sp.linform_poly(lf) ** k
        return RatFun(sp, num, tuple(sorted(new_den.items())))

    def inv(self) -> "RatFun":
        """Reciprocal when the numerator is a constant or a single linear form."""
        if self.num.is_zero():
            raise ZeroDivisionError("reciprocal of zero")
        sp = self.space
        if self.num.is_constant():
            return self.inv_factored([], _to_fraction(self.num.leading_coefficient()))
        if self.num.total_degree() == 1:
            d = self.num.to_dict()
            coeffs = [0] * sp.nvars
            const = 0
            for m, c in d.items():
                k = next((i for i, e in enumerate(m) if e), None)
                if k is None:
                    const = _to_fraction(c)
                else:
                    coeffs[k] = _to_fraction(c)
            lf, unit = LinForm.canonical(coeffs, const)
            return self.inv_factored([(lf, 1)], unit)
        raise FactorMismatch("numerator is not a known product of linear forms; use inv_factored")

    def __truediv__(self, other) -> "RatFun":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return RatFun(self.space, self.num * _fmpq(Fraction(1) / _to_fraction(other)), self.den)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inv()

    def __rtruediv__(self, other) -> "RatFun":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inv()

    # -- substitutions -------------------------------------------------------------
    def shift(self, a: Sequence[int]) -> "RatFun":
        """Substitute ``q_i -> q_i - a_i * hbar``."""
        sp = self.space
        if sp.flavor != "q":
            raise FlavorError("shifts are defined on q-space only")
        if not any(a) or self.num.is_zero():
            return self
        gens = sp._gens
        h = sp.hbar_f.num
        subs = [gens[i] - a[i] * h if a[i] else gens[i] for i in range(sp.n)] + list(gens[sp.n:])
        num = self.num.compose(*subs)
        if not self.den:
            return RatFun(sp, num, ())
        params = sp.param_values()
        scale = Fraction(1)
        new = []
        for lf, k in self.den:
            s = sum(a[i] * lf.coeffs[i] for i in range(sp.n))
            if s == 0:
                new.append((lf, k))
                continue
            coeffs = list(lf.coeffs)
            const = Fraction(lf.const)
            if sp.hbar_index in params:
                const -= s * params[sp.hbar_index]
            else:
                coeffs[sp.hbar_index] -= s
            nlf, unit = LinForm.canonical(coeffs, const)
            scale *= unit ** k
            new.append((nlf, k))
        if scale != 1:
            num = num * _fmpq(1 / scale)
        return RatFun(sp, num, tuple(sorted(new)))

    def subs(self, k: int, value) -> "RatFun":
        """Specialize raw variable ``k`` to a rational value."""
        sp = self.space
        value = _to_fraction(value)
        num = self.num.subs({sp.names[k]: _fmpq(value)})
        den: dict = {}
        for lf, e in self.den:
            if not lf.coeffs[k]:
                den[lf] = den.get(lf, 0) + e
                continue
            coeffs = list(lf.coeffs)
            const = lf.const + coeffs[k] * value
            coeffs[k] = 0
            nlf, unit = LinForm.canonical(coeffs, const)
            if nlf is None:
                if unit == 0:
                    raise PoleError(f"denominator {sp.linform_str(lf)} vanishes at {sp.names[k]}={value}")
                num = num * _fmpq(1 / unit ** e)
                continue
            num = num * _fmpq(1 / unit ** e)
            den[nlf] = den.get(nlf, 0) + e
        return _reduce(sp, num, den)

    def derive(self, k: int) -> "RatFun":
        """Exact partial derivative in raw variable ``k``."""
        sp = self.space
        dn = self.num.derivative(k)
        dep = [(lf, e) for lf, e in self.den if lf.coeffs[k]]
        if not dep:
            return _reduce(sp, dn, dict(self.den))
        polys = [sp.linform_poly(lf) for lf, _ in dep]
        radical = sp.ctx.constant(1)
        for p in polys:
            radical = radical * p
        acc = sp.ctx.constant(0)
        for idx, (lf, e) in enumerate(dep):
            others = sp.ctx.constant(e * lf.coeffs[k])
            for jdx, p in enumerate(polys):
                if jdx != idx:
                    others = others * p
            acc = acc + others
        num = dn * radical - self.num * acc
        den = dict(self.den)
        for lf, _ in dep:
            den[lf] += 1
        return _reduce(sp, num, den)

    def qderive(self, i: int) -> "RatFun":
        """Derivative along position ``q_i``; on v-space this is ``(v_i/2) d/dv_i``."""
        if self.space.flavor == "q":
            return self.derive(i)
        d = self.derive(i)
        if d.num.is_zero():
            return d
        return d * (self.space.pos(i) * Fraction(1, 2))

    # -- evaluation ------------------------------------------------------------------
    def variables(self) -> frozenset:
        """Indices of the raw variables that occur in numerator or denominator."""
        used = {k for k, d in enumerate(self.num.degrees()) if d}
        for lf, _ in self.den:
            used.update(k for k, c in enumerate(lf.coeffs) if c)
        return frozenset(used)

    def eval(self, point) -> Fraction:
        """Exact value at a point (sequence over all variables, or name -> value map).

        A map only needs the variables this function actually contains.
        """
        sp = self.space
        if isinstance(point, Mapping):
            vals = []
            params = sp.param_values()
            used = self.variables()
            for k, name in enumerate(sp.names):
                if name in point:
                    vals.append(_to_fraction(point[name]))
                elif k in params:
                    vals.append(params[k])
                elif k not in used:
                    vals.append(Fraction(0))
                else:
                    raise KeyError(f"point does not assign {name}")
        else:
            vals = [_to_fraction(x) for x in point]
            if len(vals) == sp.n:
                params = sp.param_values()
                vals += [params.get(sp.hbar_index, Fraction(0)), params.get(sp.gamma_index, Fraction(0))]
        d = Fraction(1)
        for lf, e in self.den:
            v = lf.value(vals)
            if v == 0:
                raise PoleError(f"pole: {sp.linform_str(lf)} vanishes")
            d *= v ** e
        n = _to_fraction(self.num(*[_fmpq(v) for v in vals]))
        return n / d

    def probably_zero(self, rng: random.Random | None = None, points: int = 5) -> bool:
        """Screen by exact evaluation at random rational points."""
        rng = rng or random.Random(0)
        hits = 0
        while hits < points:
            try:
                if self.eval(self.space.random_point(rng)) != 0:
                    return False
            except PoleError:
                continue
            hits += 1
        return True

    # -- printing ----------------------------------------------------------------------
    def __str__(self) -> str:
        ns = str(self.num)
        if not self.den:
            return ns
        if len(self.num.monoms()) > 1:
            ns = f"({ns})"
        parts = []
        for lf, e in self.den:
            s = self.space.linform_str(lf)
            if len(self.space.linform_poly(lf).monoms()) > 1:
                s = f"({s})"
            parts.append(s if e == 1 else f"{s}^{e}")
        ds = "*".join(parts)
        if len(parts) > 1:
            ds = f"({ds})"
        return f"{ns}/{ds}"

    def __repr__(self) -> str:
        return f"RatFun({self})"
