"""Monomial functional calculus and von Neumann-type norm comparisons.

A finite combination ``f = sum_t a_t g_t`` of group elements is sent to
``sum_t a_t T(g_t)``.  The universal norm of ``f`` is not computable.  It is
replaced by the norm of ``f`` evaluated on a windowed dilation, which bounds
``||phi(f)||`` from above because ``phi(f)`` is a compression of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dilate import DilationResult
from .kernel import KernelContext, eval_kernel
from .optuple import brehmer_check, opnorm
from .qword import GroupElement, QSpec, multiply, parse_word


class DepthExceeded(ValueError):
    """A monomial lies outside the depth the dilation reproduces."""


class PreconditionError(ValueError):
    pass


@dataclass
class MonomialCombination:
    terms: list[tuple[complex, GroupElement]]

    def __post_init__(self):
        self.terms = [(complex(c), g) for c, g in self.terms]
        if len({g.k for _, g in self.terms}) > 1:
            raise ValueError("all monomials must share k")

    @classmethod
    def from_words(cls, pairs: Iterable[tuple[complex, str]], q: QSpec | int) -> "MonomialCombination":
        return cls([(c, parse_word(w, q)) for c, w in pairs])

    def elements(self) -> list[GroupElement]:
        return [g for _, g in self.terms]


def ideal_generator(i: int, j: int, k: int, q: QSpec) -> MonomialCombination:
    """``s_i s_j - q_ij s_j s_i``."""
    si, sj = GroupElement.generator(i, k), GroupElement.generator(j, k)
    return MonomialCombination([(1.0, multiply(si, sj)), (-q.value(i, j), multiply(sj, si))])


def _as_blocks(f) -> list[list[MonomialCombination]]:
    if isinstance(f, MonomialCombination):
        return [[f]]
    blocks = [list(row) for row in f]
    n = len(blocks)
    if n == 0 or any(len(row) != n for row in blocks):
        raise ValueError("matrix-valued combinations must be square")
    return blocks


def apply_phi(ctx: KernelContext, f) -> np.ndarray:
    """``sum_t a_t T(g_t)``; blockwise for a square nested list of combinations."""
    blocks = _as_blocks(f)
    d = ctx.dim

    def one(c: MonomialCombination) -> np.ndarray:
        out = np.zeros((d, d), dtype=complex)
        for a, g in c.terms:
            out += a * eval_kernel(ctx, g)
        return out

    return np.block([[one(c) for c in row] for row in blocks])


def monomial_contractivity(ctx: KernelContext, sample: Iterable[GroupElement], eig_tol: float = 1e-8) -> float:
    """Largest ``||T(g)||`` over ``sample``; refuses tuples failing Brehmer positivity."""
    if not brehmer_check(ctx.tuple, eig_tol).passed:
        raise PreconditionError("Brehmer positivity fails; monomial contractivity is not guaranteed")
    return max((opnorm(eval_kernel(ctx, g)) for g in sample), default=0.0)


def _check_depth(f, depth: Sequence[int]) -> None:
    for row in _as_blocks(f):
        for c in row:
            for g in c.elements():
                if any(abs(x) > b for x, b in zip(g.word_exp, depth)):
                    raise DepthExceeded(f"monomial {g} exceeds dilation depth {tuple(depth)}")


def dilation_evaluate(ctx: KernelContext, f, res: DilationResult) -> np.ndarray:
    """``f`` evaluated on the dilation: ``sum_t a_t q^{m0} U_1^{m_1} ... U_k^{m_k}``."""
    blocks = _as_blocks(f)
    n = res.dim

    def one(c: MonomialCombination) -> np.ndarray:
        out = np.zeros((n, n), dtype=complex)
        for a, g in c.terms:
            out += a * ctx.q.scalar(g.phase_exp) * res.monomial(g.word_exp)
        return out

    return np.block([[one(c) for c in row] for row in blocks])


def vn_compare(ctx: KernelContext, f, res: DilationResult) -> tuple[float, float]:
    """``(||phi(f)||, ||f(U)||)``; the first never exceeds the second beyond rounding."""
    _check_depth(f, res.depth)
    lhs = opnorm(apply_phi(ctx, f))
    rhs = opnorm(dilation_evaluate(ctx, f, res))
    return lhs, rhs


def random_combination(k: int, depth: Sequence[int], rng, max_terms: int = 5) -> MonomialCombination:
    """Random combination of up to ``max_terms`` monomials within ``depth``."""
    npairs = k * (k - 1) // 2
    nterms = int(rng.integers(1, max_terms + 1))
    terms = []
    for _ in range(nterms):
        word = tuple(int(rng.integers(-b, b + 1)) for b in depth)
        phase = tuple(int(x) for x in rng.integers(-2, 3, npairs))
        terms.append((complex(rng.normal(), rng.normal()), GroupElement(phase, word)))
    return MonomialCombination(terms)
