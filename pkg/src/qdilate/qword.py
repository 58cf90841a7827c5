"""Exact algebra of the twisted monomial group.

Elements are normal-form words ``q^{m0} s_1^{m1} ... s_k^{mk}`` where ``q^{m0}``
abbreviates ``prod_{i<j} q_ij^{m_ij}``.  The ``q_ij`` are central, and
``s_i s_j = q_ij s_j s_i`` for ``i < j``.  An element is stored as two integer
vectors: the central exponents ``m_ij`` (pairs in lexicographic order) and the
word exponents ``m_1..m_k``.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import combinations
from typing import Iterable, Mapping, Sequence

EXPONENT_BOUND = 2**62
FLOAT_UNIT_TOL = 1e-14


class ParseError(ValueError):
    """Malformed word text or out-of-range generator index."""


class DimensionMismatch(ValueError):
    pass


def _check_bound(values: Iterable[int]) -> None:
    for v in values:
        if abs(v) > EXPONENT_BOUND:
            raise OverflowError(f"exponent {v} exceeds the supported bound 2**62")


def pair_list(k: int) -> list[tuple[int, int]]:
    """The pairs ``(i, j)``, ``1 <= i < j <= k``, in the pinned lexicographic order."""
    return list(combinations(range(1, k + 1), 2))


def pair_index(i: int, j: int, k: int) -> int:
    """Position of the pair ``(i, j)`` (``i < j``) in :func:`pair_list`."""
    if not 1 <= i < j <= k:
        raise ValueError(f"invalid pair ({i}, {j}) for k={k}")
    # pairs (a, *) with a < i come first
    return (i - 1) * k - (i - 1) * i // 2 + (j - i - 1)


# --------------------------------------------------------------------------
# Unit complex numbers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitComplex:
    """A unimodular scalar, held exactly as a rational turn or as a float pair.

    The exact form ``turn = p/r`` stands for ``exp(2 pi i p/r)`` and is kept
    reduced with ``0 <= turn < 1``.  Arithmetic between two exact values stays
    exact; anything touching a float value becomes float.
    """

    turn: Fraction | None = None
    re: float = 1.0
    im: float = 0.0

    def __post_init__(self):
        if self.turn is not None:
            t = Fraction(self.turn) % 1
            object.__setattr__(self, "turn", t)
            z = _turn_to_complex(t)
            object.__setattr__(self, "re", z.real)
            object.__setattr__(self, "im", z.imag)
        else:
            mod2 = self.re * self.re + self.im * self.im
            if abs(mod2 - 1.0) > FLOAT_UNIT_TOL:
                raise ValueError(f"|z|^2 = {mod2!r} is not 1 within {FLOAT_UNIT_TOL}")

    @classmethod
    def from_turn(cls, turn) -> "UnitComplex":
        if isinstance(turn, str):
            turn = Fraction(turn.strip())
        return cls(turn=Fraction(turn))

    @classmethod
    def from_complex(cls, z: complex, normalize: bool = False) -> "UnitComplex":
        z = complex(z)
        if normalize:
            z = z / abs(z)
        return cls(turn=None, re=z.real, im=z.imag)

    @classmethod
    def one(cls) -> "UnitComplex":
        return cls(turn=Fraction(0))

    @property
    def exact(self) -> bool:
        return self.turn is not None

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    @property
    def angle(self) -> float:
        if self.turn is not None:
            return 2 * math.pi * float(self.turn)
        return math.atan2(self.im, self.re)

    def __mul__(self, other: "UnitComplex") -> "UnitComplex":
        if not isinstance(other, UnitComplex):
            return NotImplemented
        if self.exact and other.exact:
            return UnitComplex(turn=self.turn + other.turn)
        z = complex(self) * complex(other)
        return UnitComplex.from_complex(z, normalize=True)

    def __pow__(self, n: int) -> "UnitComplex":
        n = int(n)
        if self.exact:
            return UnitComplex(turn=self.turn * n)
        return UnitComplex.from_complex(cmath.exp(1j * self.angle * n), normalize=True)

    def conjugate(self) -> "UnitComplex":
        return self ** -1

    inverse = conjugate

    def isclose(self, other: "UnitComplex", tol: float = 1e-12) -> bool:
        if self.exact and other.exact:
            return self.turn == other.turn
        return abs(complex(self) - complex(other)) <= tol

    def __repr__(self) -> str:
        if self.exact:
            return f"UnitComplex(turn={self.turn})"
        return f"UnitComplex({complex(self)!r})"


def _turn_to_complex(t: Fraction) -> complex:
    # quarter turns are returned exactly
    quarters = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}
    if t in quarters:
        return quarters[t]
    return cmath.exp(2j * math.pi * float(t))


def _as_unit(value) -> UnitComplex:
    if isinstance(value, UnitComplex):
        return value
    if isinstance(value, (Fraction, str)):
        return UnitComplex.from_turn(value)
    return UnitComplex.from_complex(complex(value))


# --------------------------------------------------------------------------
# Phase data
# --------------------------------------------------------------------------


class QSpec:
    """Phase data ``q_ij`` for ``1 <= i < j <= k``; ``q_ji`` is ``q_ij^{-1}``.

    ``phases`` maps ``(i, j)`` with ``i < j`` to a :class:`UnitComplex`, a
    :class:`~fractions.Fraction` / ``"p/r"`` turn, or a complex number of modulus
    one.  Missing pairs default to ``1``.
    """

    __slots__ = ("k", "_phases")

    def __init__(self, k: int, phases: Mapping[tuple[int, int], object] | None = None):
        if k < 1:
            raise ValueError("k must be a positive integer")
        self.k = int(k)
        table = [UnitComplex.one()] * (k * (k - 1) // 2)
        for (i, j), value in (phases or {}).items():
            if not (1 <= i <= k and 1 <= j <= k) or i == j:
                raise ValueError(f"invalid phase index ({i}, {j}) for k={k}")
            u = _as_unit(value)
            if i > j:
                i, j, u = j, i, u.inverse()
            table[pair_index(i, j, k)] = u
        self._phases = tuple(table)

    @classmethod
    def uniform(cls, k: int, value) -> "QSpec":
        return cls(k, {p: value for p in pair_list(k)})

    @classmethod
    def trivial(cls, k: int) -> "QSpec":
        return cls(k)

    @property
    def phases(self) -> dict[tuple[int, int], UnitComplex]:
        return dict(zip(pair_list(self.k), self._phases))

    @property
    def exact(self) -> bool:
        return all(u.exact for u in self._phases)

    def __call__(self, i: int, j: int) -> UnitComplex:
        if i == j:
            raise ValueError("q_ii is undefined")
        if i < j:
            return self._phases[pair_index(i, j, self.k)]
        return self._phases[pair_index(j, i, self.k)].inverse()

    def value(self, i: int, j: int) -> complex:
        return complex(self(i, j))

    def power_product(self, exps: Sequence[int]) -> UnitComplex:
        """``prod_{i<j} q_ij^{exps[ij]}`` over the pinned pair order."""
        if len(exps) != len(self._phases):
            raise DimensionMismatch(f"expected {len(self._phases)} pair exponents, got {len(exps)}")
        if self.exact:
            return UnitComplex(turn=sum((u.turn * int(e) for u, e in zip(self._phases, exps)), Fraction(0)))
        angle = sum(u.angle * int(e) for u, e in zip(self._phases, exps))
        return UnitComplex.from_complex(cmath.exp(1j * angle), normalize=True)

    def scalar(self, exps: Sequence[int]) -> complex:
        return complex(self.power_product(exps))

    def __eq__(self, other) -> bool:
        return isinstance(other, QSpec) and self.k == other.k and self._phases == other._phases

    def __hash__(self) -> int:
        return hash((self.k, self._phases))

    def __repr__(self) -> str:
        return f"QSpec(k={self.k}, phases={self.phases})"


# --------------------------------------------------------------------------
# Group elements
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupElement:
    """Normal form ``q^{phase_exp} s_1^{word_exp[0]} ... s_k^{word_exp[k-1]}``."""

    phase_exp: tuple[int, ...]
    word_exp: tuple[int, ...]

    def __post_init__(self):
        pe = tuple(int(x) for x in self.phase_exp)
        we = tuple(int(x) for x in self.word_exp)
        k = len(we)
        if len(pe) != k * (k - 1) // 2:
            raise DimensionMismatch(f"phase_exp has length {len(pe)}, expected {k * (k - 1) // 2} for k={k}")
        _check_bound(pe)
        _check_bound(we)
        object.__setattr__(self, "phase_exp", pe)
        object.__setattr__(self, "word_exp", we)

    @property
    def k(self) -> int:
        return len(self.word_exp)

    @classmethod
    def identity(cls, k: int) -> "GroupElement":
        return cls((0,) * (k * (k - 1) // 2), (0,) * k)

    @classmethod
    def from_word(cls, word_exp: Sequence[int]) -> "GroupElement":
        k = len(word_exp)
        return cls((0,) * (k * (k - 1) // 2), tuple(word_exp))

    @classmethod
    def generator(cls, alpha: int, k: int, power: int = 1) -> "GroupElement":
        """``s_alpha^power`` (``alpha`` is 1-based)."""
        if not 1 <= alpha <= k:
            raise ValueError(f"generator index {alpha} out of range 1..{k}")
        word = [0] * k
        word[alpha - 1] = power
        return cls.from_word(word)

    def is_identity(self) -> bool:
        return not any(self.phase_exp) and not any(self.word_exp)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def __invert__(self) -> "GroupElement":
        return inverse(self)

    def __str__(self) -> str:
        parts = []
        for (i, j), e in zip(pair_list(self.k), self.phase_exp):
            if e:
                parts.append(f"q{i}{j}^{e}" if e != 1 else f"q{i}{j}")
        for a, e in enumerate(self.word_exp, start=1):
            if e:
                parts.append(f"s{a}^{e}" if e != 1 else f"s{a}")
        return " ".join(parts) or "e"


def multiply(a: GroupElement, b: GroupElement, q: QSpec | None = None) -> GroupElement:
    """Normal form of ``a b``.

    With ``a = x^m`` and ``b = x^n`` the product is
    ``prod_{i<j} q_ij^{-n_i m_j} x^{m+n}``.  The phase data ``q`` is not needed
    to form the product; it is accepted only to check ``k``.
    """
    k = a.k
    if b.k != k or (q is not None and q.k != k):
        raise DimensionMismatch("elements (and phase data) must share k")
    m, n = a.word_exp, b.word_exp
    phase = [x + y for x, y in zip(a.phase_exp, b.phase_exp)]
    for idx, (i, j) in enumerate(pair_list(k)):
        phase[idx] -= n[i - 1] * m[j - 1]
    return GroupElement(tuple(phase), tuple(x + y for x, y in zip(m, n)))


def inverse(a: GroupElement) -> GroupElement:
    """``(x^m)^{-1} = prod_{i<j} q_ij^{-m_ij - m_i m_j} x^{-m}``."""
    m = a.word_exp
    phase = tuple(-e - m[i - 1] * m[j - 1] for e, (i, j) in zip(a.phase_exp, pair_list(a.k)))
    return GroupElement(phase, tuple(-x for x in m))


def power(a: GroupElement, n: int) -> GroupElement:
    """``a^n`` for any integer ``n`` (square-and-multiply)."""
    if n < 0:
        return power(inverse(a), -n)
    result = GroupElement.identity(a.k)
    base = a
    while n:
        if n & 1:
            result = multiply(result, base)
        base = multiply(base, base)
        n >>= 1
    return result


def phase_value(a: GroupElement, q: QSpec) -> UnitComplex:
    """The scalar ``prod_{i<j} q_ij^{m_ij}``; exact when every phase is exact."""
    if q.k != a.k:
        raise DimensionMismatch("element and phase data must share k")
    return q.power_product(a.phase_exp)


# --------------------------------------------------------------------------
# Word parser
# --------------------------------------------------------------------------

_TOKEN = r"s(\d+)(?:\^(-?\d+))?"
_TOKEN_RE = re.compile(_TOKEN)
_WORD_RE = re.compile(rf"(?:{_TOKEN}(?: +{_TOKEN})*)?")


def parse_word(text: str, q: QSpec | int) -> GroupElement:
    """Parse ``"s2 s1^-3 s1"``-style text into normal form.

    Tokens are ``s<i>`` or ``s<i>^<z>`` separated by one or more spaces; the
    empty string is the identity.  ``q`` may be a :class:`QSpec` or just ``k``.
    """
    k = q.k if isinstance(q, QSpec) else int(q)
    if not _WORD_RE.fullmatch(text):
        raise ParseError(f"malformed word: {text!r}")
    result = GroupElement.identity(k)
    for tok in text.split():
        mt = _TOKEN_RE.fullmatch(tok)
        alpha = int(mt.group(1))
        if not 1 <= alpha <= k:
            raise ParseError(f"generator index {alpha} out of range 1..{k} in {tok!r}")
        exp = int(mt.group(2)) if mt.group(2) is not None else 1
        result = multiply(result, GroupElement.generator(alpha, k, exp))
    return result


def format_word(a: GroupElement) -> str:
    """Word text for the ``s``-part of ``a`` in ascending order (phase dropped)."""
    return " ".join(f"s{i}^{e}" if e != 1 else f"s{i}" for i, e in enumerate(a.word_exp, start=1) if e)


# --------------------------------------------------------------------------
# Exponent helpers
# --------------------------------------------------------------------------


def split_pm(m: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Componentwise ``(max(m, 0), -min(m, 0))``."""
    return tuple(max(x, 0) for x in m), tuple(max(-x, 0) for x in m)


def indicator(v: Iterable[int], k: int) -> tuple[int, ...]:
    """The 0/1 vector ``e(v)`` of a subset ``v`` of ``{1..k}``."""
    v = set(v)
    if any(not 1 <= a <= k for a in v):
        raise ValueError(f"subset {sorted(v)} not contained in 1..{k}")
    return tuple(1 if a in v else 0 for a in range(1, k + 1))


def support(m: Sequence[int]) -> frozenset[int]:
    """Indices (1-based) of strictly positive entries."""
    return frozenset(a for a, x in enumerate(m, start=1) if x > 0)


def product(elements: Iterable[GroupElement], k: int) -> GroupElement:
    return reduce(multiply, elements, GroupElement.identity(k))
