"""The operator-valued kernel on the twisted monomial group.

For ``g = q^{m0} s_1^{m1} ... s_k^{mk}`` the kernel is

    T(g) = q^{m0} prod_{i<j} q_ij^{-m_i^+ m_j^-}
           (T_1^{m_1^-})^* ... (T_k^{m_k^-})^* T_1^{m_1^+} ... T_k^{m_k^+}

with ``T(e) = I``.  Gram matrices over finite windows of the group decide
positivity at window scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._parallel import pmap
from .optuple import OperatorTuple, min_eig, opnorm
from .qword import GroupElement, QSpec, inverse, multiply, pair_list, split_pm

DEFAULT_CAP = 4096


class WindowTooLarge(ValueError):
    """The Gram matrix would exceed the configured size cap."""


def twist_exponents(m: Sequence[int]) -> tuple[int, ...]:
    """Pair exponents ``-m_i^+ m_j^-`` of the normal-ordering phase."""
    mp, mm = split_pm(m)
    return tuple(-mp[i - 1] * mm[j - 1] for i, j in pair_list(len(m)))


class KernelContext:
    """An operator tuple plus a memo of word-part kernel matrices.

    The cache maps a word exponent to the phase-free matrix
    ``(T^{m^-})^* T^{m^+}``; it is insert-only, so duplicate computation
    under threads is harmless.
    """

    def __init__(self, tuple_: OperatorTuple, cache: bool = True):
        self.tuple = tuple_
        self._cache: dict[tuple[int, ...], np.ndarray] | None = {} if cache else None

    @property
    def q(self) -> QSpec:
        return self.tuple.q

    @property
    def k(self) -> int:
        return self.tuple.k

    @property
    def dim(self) -> int:
        return self.tuple.dim

    def word_matrix(self, m: Sequence[int]) -> np.ndarray:
        """``(T_1^{m_1^-})^* ... (T_k^{m_k^-})^* T_1^{m_1^+} ... T_k^{m_k^+}`` (no phase)."""
        m = tuple(int(x) for x in m)
        if self._cache is not None and m in self._cache:
            return self._cache[m]
        mp, mm = split_pm(m)
        t = self.tuple
        # (T_1^a ... )^* ordering: adjoint of T_k^{b_k} ... T_1^{b_1}
        back = np.eye(t.dim, dtype=complex)
        for a, e in zip(t.mats, mm):
            if e:
                back = np.linalg.matrix_power(a, e) @ back
        out = back.conj().T @ t.ordered_product(mp)
        if self._cache is not None:
            out.setflags(write=False)
            self._cache[m] = out
        return out


def eval_kernel(ctx: KernelContext, g: GroupElement) -> np.ndarray:
    """The matrix ``T(g)``."""
    if g.k != ctx.k:
        raise ValueError(f"element has k={g.k}, tuple has k={ctx.k}")
    if g.is_identity():
        return np.eye(ctx.dim, dtype=complex)
    tw = twist_exponents(g.word_exp)
    phase = ctx.q.scalar(tuple(a + b for a, b in zip(g.phase_exp, tw)))
    return phase * ctx.word_matrix(g.word_exp)


def kernel_star_symmetry_residual(ctx: KernelContext, g: GroupElement) -> float:
    """``||T(g^{-1}) - T(g)^*||``."""
    return opnorm(eval_kernel(ctx, inverse(g)) - eval_kernel(ctx, g).conj().T)


def _nonneg(m: Sequence[int], name: str) -> tuple[int, ...]:
    m = tuple(int(x) for x in m)
    if any(x < 0 for x in m):
        raise ValueError(f"{name} must be componentwise nonnegative, got {m}")
    return m


def composition_residual(ctx: KernelContext, n: Sequence[int], m: Sequence[int]) -> float:
    """``||T(x^n) T(x^m) - prod_{i<j} q_ij^{-m_i n_j} T(x^{n+m})||`` for ``n, m >= 0``.

    Moving ``T_i^{m_i}`` left past ``T_j^{n_j}`` (``i < j``) costs ``q_ij^{-m_i n_j}``.
    """
    n, m = _nonneg(n, "n"), _nonneg(m, "m")
    lhs = eval_kernel(ctx, GroupElement.from_word(n)) @ eval_kernel(ctx, GroupElement.from_word(m))
    phase = ctx.q.scalar(tuple(-m[i - 1] * n[j - 1] for i, j in pair_list(ctx.k)))
    rhs = phase * eval_kernel(ctx, GroupElement.from_word(tuple(a + b for a, b in zip(n, m))))
    return opnorm(lhs - rhs)


def doubly_product_form(ctx: KernelContext, g: GroupElement) -> np.ndarray:
    """``q^{m0} T_1(m_1) ... T_k(m_k)`` with ``C(m) = C^m`` or ``(C^*)^{|m|}``."""
    out = ctx.q.scalar(g.phase_exp) * np.eye(ctx.dim, dtype=complex)
    for a, e in zip(ctx.tuple.mats, g.word_exp):
        if e > 0:
            out = out @ np.linalg.matrix_power(a, e)
        elif e < 0:
            out = out @ np.linalg.matrix_power(a.conj().T, -e)
    return out


def doubly_coincidence_residual(ctx: KernelContext, g: GroupElement) -> float:
    """Distance between :func:`eval_kernel` and :func:`doubly_product_form`.

    Zero (up to rounding) whenever the tuple is doubly q-commuting.
    """
    return opnorm(eval_kernel(ctx, g) - doubly_product_form(ctx, g))


# --------------------------------------------------------------------------
# Windows and Gram matrices
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Window:
    """Group elements with ``|m_i| <= L_i``.

    With ``include_phase_coords`` the central exponents also range over
    ``[-phase_L, phase_L]``; otherwise they are zero.
    """

    L: tuple[int, ...]
    include_phase_coords: bool = False
    phase_L: int = 1

    def __post_init__(self):
        L = tuple(int(x) for x in self.L)
        if any(x < 0 for x in L):
            raise ValueError("window bounds must be nonnegative")
        object.__setattr__(self, "L", L)

    @classmethod
    def uniform(cls, k: int, L: int, **kw) -> "Window":
        return cls((L,) * k, **kw)

    @property
    def k(self) -> int:
        return len(self.L)

    def word_points(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(-x, x + 1) for x in self.L)))

    def phase_points(self) -> list[tuple[int, ...]]:
        npairs = self.k * (self.k - 1) // 2
        if not self.include_phase_coords:
            return [(0,) * npairs]
        return list(itertools.product(range(-self.phase_L, self.phase_L + 1), repeat=npairs))

    def elements(self) -> list[GroupElement]:
        """Elements in lexicographic order (phase part outermost)."""
        return [GroupElement(p, m) for p in self.phase_points() for m in self.word_points()]

    def size(self) -> int:
        return len(self.phase_points()) * len(self.word_points())

    def contains(self, g: GroupElement) -> bool:
        if any(abs(x) > b for x, b in zip(g.word_exp, self.L)):
            return False
        if self.include_phase_coords:
            return all(abs(x) <= self.phase_L for x in g.phase_exp)
        return not any(g.phase_exp)


def check_cap(ctx: KernelContext, w: Window, cap: int = DEFAULT_CAP) -> None:
    n = w.size() * ctx.dim
    if n > cap:
        raise WindowTooLarge(f"window needs a {n}x{n} Gram matrix, above the cap {cap}")


def gram_matrix(ctx: KernelContext, w: Window, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Block matrix whose block at row ``t``, column ``s`` is ``T(t^{-1} s)``.

    With ``h`` stacked over the window, ``h^* G h`` is the double sum
    ``sum_{s,t} <T(t^{-1} s) h(s), h(t)>``.  Rows and columns follow
    :meth:`Window.elements`.
    """
    if w.k != ctx.k:
        raise ValueError("window and tuple must share k")
    check_cap(ctx, w, cap)
    els = w.elements()
    d = ctx.dim
    inv = [inverse(t) for t in els]

    def row(i):
        return np.hstack([eval_kernel(ctx, multiply(inv[i], s)) for s in els])

    g = np.vstack(pmap(row, range(len(els))))
    assert g.shape == (len(els) * d, len(els) * d)
    return (g + g.conj().T) / 2


def gram_min_eig(ctx: KernelContext, w: Window, cap: int = DEFAULT_CAP) -> float:
    return min_eig(gram_matrix(ctx, w, cap))


def phase_twist(ctx: KernelContext, w: Window) -> tuple[np.ndarray, np.ndarray]:
    """``(G_full, D (J (x) K) D^*)`` for a window with phase coordinates.

    ``K`` is the phase-free Gram matrix, ``J`` the all-ones matrix over the
    phase points and ``D`` the diagonal of phases ``q^{a}``.  The two agree,
    so ``G_full`` is PSD iff ``K`` is.
    """
    if not w.include_phase_coords:
        raise ValueError("window must include phase coordinates")
    full = gram_matrix(ctx, w)
    base = gram_matrix(ctx, Window(w.L))
    phases = np.array([ctx.q.scalar(p) for p in w.phase_points()])
    nw = len(w.word_points()) * ctx.dim
    dvec = np.repeat(phases, nw)
    twisted = dvec[:, None] * np.kron(np.ones((len(phases), len(phases))), base) * dvec.conj()[None, :]
    return full, twisted


@dataclass
class NegativeWindowReport:
    status: str  # "negative" or "inconclusive"
    window: Window | None
    min_eig: float
    searched: list[tuple[tuple[int, ...], float]]


def find_negative_window(ctx: KernelContext, max_L: int = 2, eig_tol: float = 1e-8,
                         cap: int = DEFAULT_CAP) -> NegativeWindowReport:
    """Search uniform windows ``L = 1, ..., max_L`` for a non-PSD Gram matrix.

    Not finding one within budget is reported as ``inconclusive``.
    """
    searched = []
    best = np.inf
    for L in range(1, max_L + 1):
        w = Window.uniform(ctx.k, L)
        if w.size() * ctx.dim > cap:
            break
        val = gram_min_eig(ctx, w, cap)
        searched.append((w.L, val))
        best = min(best, val)
        if val < -eig_tol:
            return NegativeWindowReport("negative", w, val, searched)
    return NegativeWindowReport("inconclusive", None, float(best), searched)


# --------------------------------------------------------------------------
# Appendix identity
# --------------------------------------------------------------------------


def appendix_identity_residual(ctx: KernelContext, v: Iterable[int], w: Iterable[int]) -> float:
    """Residual of the subset identity behind the diagonal collapse of ``D(p,p)``.

    With ``a = e(w) - e(v)`` and ``u = v | w``::

        (T^{e(w)})^* prod_i (T_i^{a_i^-})^* T_i^{a_i^+} T^{e(v)}
            = prod_{i<j} q_ij^{-e_i(v) a_j} (T^{e(u)})^* T^{e(u)}

    Holds for doubly q-commuting tuples.
    """
    t = ctx.tuple
    v, w = set(v), set(w)
    ev = [1 if x in v else 0 for x in range(1, t.k + 1)]
    ew = [1 if x in w else 0 for x in range(1, t.k + 1)]
    a = [y - x for x, y in zip(ev, ew)]
    pw = t.subset_product(w)
    mid = doubly_product_form(ctx, GroupElement.from_word(a))
    lhs = pw.conj().T @ mid @ t.subset_product(v)
    pu = t.subset_product(v | w)
    phase = ctx.q.scalar(tuple(-ev[i - 1] * a[j - 1] for i, j in pair_list(t.k)))
    return opnorm(lhs - phase * (pu.conj().T @ pu))
