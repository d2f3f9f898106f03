"""Square matrices over a coefficient ring with explicit tensor legs.

An :class:`RMat` on ``legs`` tensor factors of ``C^N`` has dimension
``N**legs``.  Flattened indices are row-major with leg 1 the most significant
digit, so ``E_ij (x) E_kl`` sits at row ``i*N + k`` and column ``j*N + l``.
Legs are numbered from 1; matrix indices inside a leg from 0.

Only nonzero entries are stored.  Entries are usually :class:`RatFun`, but
any ring element with ``+``, ``*``, ``-``, ``is_zero()`` and a ``sum_of``
static method works (the Poisson engine stores phase-space functions).
"""
from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Callable, Iterable, Sequence

from .coeffield import RatFun, VarSpace

__all__ = [
    "RMat",
    "DimensionMismatch",
    "BadPositions",
    "mat_compose",
    "embed",
    "leg_op",
    "permutation",
    "diag_sum",
    "all_ones",
]


class DimensionMismatch(ValueError):
    pass


class BadPositions(ValueError):
    pass


@lru_cache(maxsize=None)
def _digits(n: int, legs: int) -> tuple:
    return tuple(product(range(n), repeat=legs))


@lru_cache(maxsize=None)
def _weights(n: int, legs: int) -> tuple:
    return tuple(n ** (legs - 1 - k) for k in range(legs))


def _index(digits: Sequence[int], n: int) -> int:
    idx = 0
    for d in digits:
        idx = idx * n + d
    return idx


def _ring_sum(items: list, space: VarSpace):
    if not items:
        return space.zero
    if len(items) == 1:
        return items[0]
    return type(items[0]).sum_of(items)


class RMat:
    """Sparse square matrix on ``legs`` copies of ``C^N``."""

    __slots__ = ("space", "legs", "entries")

    def __init__(self, space: VarSpace, legs: int, entries: dict | None = None):
        self.space = space
        self.legs = legs
        ent = {}
        for key, v in (entries or {}).items():
            if not v.is_zero():
                ent[key] = v
        self.entries = ent

    @classmethod
    def _raw(cls, space, legs, entries):
        m = cls.__new__(cls)
        m.space, m.legs, m.entries = space, legs, entries
        return m

    # -- constructors ------------------------------------------------------------
    @classmethod
    def zero(cls, space: VarSpace, legs: int = 1) -> "RMat":
        return cls._raw(space, legs, {})

    @classmethod
    def identity(cls, space: VarSpace, legs: int = 1, scale=None) -> "RMat":
        one = space.one if scale is None else (scale if isinstance(scale, RatFun) else space.const(scale))
        dim = space.n ** legs
        return cls(space, legs, {(i, i): one for i in range(dim)})

    @classmethod
    def unit(cls, space: VarSpace, i: int, j: int, coeff=None) -> "RMat":
        """Matrix unit ``E_ij`` (1 leg), optionally scaled."""
        c = space.one if coeff is None else coeff
        return cls(space, 1, {(i, j): c})

    @classmethod
    def scalar(cls, space: VarSpace, value) -> "RMat":
        return cls(space, 0, {(0, 0): value})

    @classmethod
    def diag(cls, space: VarSpace, values: Sequence) -> "RMat":
        return cls(space, 1, {(i, i): v for i, v in enumerate(values)})

    @classmethod
    def from_dense(cls, space: VarSpace, rows: Sequence[Sequence], legs: int = 1) -> "RMat":
        dim = space.n ** legs
        if len(rows) != dim or any(len(r) != dim for r in rows):
            raise DimensionMismatch(f"expected {dim}x{dim}")
        return cls(space, legs, {(i, j): v for i, r in enumerate(rows) for j, v in enumerate(r)})

    # -- basic properties ----------------------------------------------------------
    @property
    def n(self) -> int:
        return self.space.n

    @property
    def dim(self) -> int:
        return self.space.n ** self.legs

    def __getitem__(self, key):
        return self.entries.get(key, self.space.zero)

    def dense(self) -> list:
        z = self.space.zero
        return [[self.entries.get((i, j), z) for j in range(self.dim)] for i in range(self.dim)]

    def is_zero(self) -> bool:
        return not self.entries

    def nnz(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RMat):
            return NotImplemented
        return self.legs == other.legs and self.entries == other.entries

    def __hash__(self):
        return hash((self.legs, frozenset(self.entries.items())))

    def __repr__(self) -> str:
        return f"RMat(N={self.n}, legs={self.legs}, nnz={self.nnz()})"

    def _check(self, other: "RMat"):
        if not isinstance(other, RMat):
            raise TypeError(f"expected RMat, got {type(other).__name__}")
        if self.legs != other.legs or self.space.n != other.space.n:
            raise DimensionMismatch(f"legs {self.legs} vs {other.legs}")

    # -- ring operations ------------------------------------------------------------
    def __neg__(self) -> "RMat":
        return RMat._raw(self.space, self.legs, {k: -v for k, v in self.entries.items()})

    def __add__(self, other) -> "RMat":
        if not isinstance(other, RMat):
            return NotImplemented
        self._check(other)
        out = dict(self.entries)
        for k, v in other.entries.items():
            if k in out:
                s = out[k] + v
                if s.is_zero():
                    del out[k]
                else:
                    out[k] = s
            else:
                out[k] = v
        return RMat._raw(self.space, self.legs, out)

    def __sub__(self, other) -> "RMat":
        return self + (-other)

    def scale(self, c) -> "RMat":
        return RMat(self.space, self.legs, {k: c * v for k, v in self.entries.items()})

    def __mul__(self, other) -> "RMat":
        if not isinstance(other, RMat):
            if isinstance(other, (RatFun, int, Fraction)):
                return self.scale(other)
            return NotImplemented
        self._check(other)
        rows = defaultdict(list)
        for (k, c), w in other.entries.items():
            rows[k].append((c, w))
        acc = defaultdict(list)
        for (r, k), v in self.entries.items():
            for c, w in rows.get(k, ()):
                acc[(r, c)].append(v * w)
        out = {}
        for key, items in acc.items():
            s = _ring_sum(items, self.space)
            if not s.is_zero():
                out[key] = s
        return RMat._raw(self.space, self.legs, out)

    def __rmul__(self, c) -> "RMat":
        if not isinstance(c, (RatFun, int, Fraction)):
            return NotImplemented
        return RMat(self.space, self.legs, {k: c * v for k, v in self.entries.items()})

    def __pow__(self, k: int) -> "RMat":
        out = RMat.identity(self.space, self.legs)
        for _ in range(k):
            out = out * self
        return out

    def commutator(self, other: "RMat") -> "RMat":
        return self * other - other * self

    @staticmethod
    def sum_of(mats: Sequence["RMat"]) -> "RMat":
        mats = list(mats)
        if not mats:
            raise ValueError("empty RMat sum")
        acc = defaultdict(list)
        for m in mats:
            mats[0]._check(m)
            for k, v in m.entries.items():
                acc[k].append(v)
        out = {}
        for k, items in acc.items():
            s = _ring_sum(items, mats[0].space)
            if not s.is_zero():
                out[k] = s
        return RMat._raw(mats[0].space, mats[0].legs, out)

    def map(self, fn: Callable) -> "RMat":
        """Apply ``fn`` to every stored entry (shifts, derivatives, substitutions)."""
        return RMat(self.space, self.legs, {k: fn(v) for k, v in self.entries.items()})

    def transpose(self) -> "RMat":
        return RMat._raw(self.space, self.legs, {(c, r): v for (r, c), v in self.entries.items()})

    def trace(self):
        return _ring_sum([v for (r, c), v in self.entries.items() if r == c], self.space)

    # -- tensor structure ---------------------------------------------------------------
    def kron(self, other: "RMat") -> "RMat":
        if self.space.n != other.space.n:
            raise DimensionMismatch("different base dimension")
        d = other.dim
        out = {}
        for (r1, c1), v in self.entries.items():
            for (r2, c2), w in other.entries.items():
                p = v * w
                if not p.is_zero():
                    out[(r1 * d + r2, c1 * d + c2)] = p
        return RMat._raw(self.space, self.legs + other.legs, out)

    def embed(self, positions: Sequence[int], total_legs: int) -> "RMat":
        """Act as ``self`` on the named legs (1-based), identity elsewhere."""
        positions = list(positions)
        if len(positions) != self.legs or len(set(positions)) != len(positions):
            raise BadPositions(f"{positions} for a {self.legs}-leg matrix")
        if any(p < 1 or p > total_legs for p in positions):
            raise BadPositions(f"{positions} outside 1..{total_legs}")
        n = self.n
        others = [k for k in range(1, total_legs + 1) if k not in positions]
        w = _weights(n, total_legs)
        pos_w = [w[p - 1] for p in positions]
        oth_w = [w[k - 1] for k in others]
        offsets = [sum(d * ww for d, ww in zip(o, oth_w)) for o in _digits(n, len(others))]
        dig = _digits(n, self.legs)
        out = {}
        for (r, c), v in self.entries.items():
            rb = sum(d * ww for d, ww in zip(dig[r], pos_w))
            cb = sum(d * ww for d, ww in zip(dig[c], pos_w))
            for off in offsets:
                out[(rb + off, cb + off)] = v
        return RMat._raw(self.space, total_legs, out)

    def permute_legs(self, perm: Sequence[int]) -> "RMat":
        """New leg ``k`` (1-based) is old leg ``perm[k-1]``."""
        if sorted(perm) != list(range(1, self.legs + 1)):
            raise BadPositions(f"{perm} is not a permutation of 1..{self.legs}")
        n = self.n
        dig = _digits(n, self.legs)
        idx = [_index([dig[i][p - 1] for p in perm], n) for i in range(self.dim)]
        return RMat._raw(self.space, self.legs, {(idx[r], idx[c]): v for (r, c), v in self.entries.items()})

    def swap(self, i: int = 1, j: int = 2) -> "RMat":
        perm = list(range(1, self.legs + 1))
        if not (1 <= i <= self.legs and 1 <= j <= self.legs):
            raise BadPositions(f"swap({i}, {j}) on {self.legs} legs")
        perm[i - 1], perm[j - 1] = perm[j - 1], perm[i - 1]
        return self.permute_legs(perm)

    def partial_transpose(self, leg: int) -> "RMat":
        if not 1 <= leg <= self.legs:
            raise BadPositions(f"leg {leg} on {self.legs} legs")
        n = self.n
        wt = _weights(n, self.legs)[leg - 1]
        out = {}
        for (r, c), v in self.entries.items():
            dr = (r // wt) % n
            dc = (c // wt) % n
            out[(r + (dc - dr) * wt, c + (dr - dc) * wt)] = v
        return RMat._raw(self.space, self.legs, out)

    def partial_trace(self, legs: Iterable[int]) -> "RMat":
        traced = sorted(set(legs))
        if any(k < 1 or k > self.legs for k in traced):
            raise BadPositions(f"trace over {traced} on {self.legs} legs")
        n = self.n
        keep = [k for k in range(1, self.legs + 1) if k not in traced]
        dig = _digits(n, self.legs)
        acc = defaultdict(list)
        for (r, c), v in self.entries.items():
            dr, dc = dig[r], dig[c]
            if all(dr[k - 1] == dc[k - 1] for k in traced):
                key = (_index([dr[k - 1] for k in keep], n), _index([dc[k - 1] for k in keep], n))
                acc[key].append(v)
        out = {}
        for key, items in acc.items():
            s = _ring_sum(items, self.space)
            if not s.is_zero():
                out[key] = s
        return RMat._raw(self.space, len(keep), out)


def mat_compose(a: RMat, b: RMat, op: str) -> RMat:
    if op == "mul":
        return a * b
    if op == "add":
        return a + b
    if op == "kron":
        return a.kron(b)
    raise ValueError(f"unknown op {op!r}")


def embed(a: RMat, positions: Sequence[int], total_legs: int) -> RMat:
    return a.embed(positions, total_legs)


def leg_op(a: RMat, which: str, *args) -> RMat:
    """``leg_op(a, "partial_transpose", j)``, ``("partial_trace", legs)``, ``("swap", i, j)``."""
    if which == "partial_transpose":
        return a.partial_transpose(*args)
    if which == "partial_trace":
        return a.partial_trace(*args)
    if which == "swap":
        return a.swap(*args)
    raise ValueError(f"unknown leg operation {which!r}")


def permutation(space: VarSpace) -> RMat:
    """The flip ``C = sum_ij E_ij (x) E_ji`` on two legs."""
    n = space.n
    one = space.one
    return RMat._raw(space, 2, {(i * n + j, j * n + i): one for i in range(n) for j in range(n)})


def diag_sum(space: VarSpace) -> RMat:
    """``sum_i E_ii (x) E_ii``."""
    n = space.n
    one = space.one
    return RMat._raw(space, 2, {(i * n + i, i * n + i): one for i in range(n)})


def all_ones(space: VarSpace) -> RMat:
    """The matrix with every entry 1 (``e (x) e`` as a matrix)."""
    n = space.n
    one = space.one
    return RMat._raw(space, 1, {(i, j): one for i in range(n) for j in range(n)})
