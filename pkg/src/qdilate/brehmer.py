"""Reciprocal transforms and the ``D(p, r)`` operators.

Exponents here range over the full coordinate set: the central pair
coordinates ``m_ij`` first (lexicographic), then ``m_1..m_k``.  A full
exponent is stored as a :class:`~qdilate.qword.GroupElement` read as the
normal form ``q^{m0} s^m``.  The order ``n >= 0`` is componentwise over all
coordinates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._parallel import pmap
from .kernel import KernelContext, eval_kernel
from .qword import GroupElement, pair_list

FullExponent = GroupElement


def flat(p: GroupElement) -> tuple[int, ...]:
    """All coordinates of ``p``: pair exponents then word exponents."""
    return p.phase_exp + p.word_exp


def unflat(x: Sequence[int], k: int) -> GroupElement:
    npairs = k * (k - 1) // 2
    return GroupElement(tuple(x[:npairs]), tuple(x[npairs:]))


def is_nonneg(p: GroupElement) -> bool:
    return all(x >= 0 for x in flat(p))


def omega_support(p: GroupElement) -> tuple[int, ...]:
    """Positions (into :func:`flat`) of strictly positive coordinates."""
    return tuple(i for i, x in enumerate(flat(p)) if x > 0)


def omega_indicator(v: Iterable[int], k: int) -> GroupElement:
    """``e(v)`` for a set ``v`` of flat positions."""
    n = k * (k - 1) // 2 + k
    v = set(v)
    return unflat([1 if i in v else 0 for i in range(n)], k)


def _add(a: GroupElement, b: GroupElement, sign: int = 1) -> GroupElement:
    return unflat([x + sign * y for x, y in zip(flat(a), flat(b))], a.k)


def _subsets(items: Sequence[int]):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def alternating_subset_sum(v0: Iterable) -> int:
    """``sum_{v in v0} (-1)^{|v|}``: 1 for the empty set, else 0."""
    n = len(set(v0))
    return sum((-1) ** len(c) for c in _subsets(range(n)))


def shift_phase(ctx: KernelContext, a: Sequence[int], b: Sequence[int]) -> complex:
    """``prod_{i<j} q_ij^{a_i b_j}`` over word coordinates."""
    return ctx.q.scalar(tuple(a[i - 1] * b[j - 1] for i, j in pair_list(ctx.k)))


# --------------------------------------------------------------------------
# Finite-support functions
# --------------------------------------------------------------------------


@dataclass
class FiniteSupportFunction:
    """A finitely supported map from nonnegative full exponents to ``C^d``."""

    dim: int
    k: int
    entries: dict[GroupElement, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for p, vec in self.entries.items():
            if p.k != self.k:
                raise ValueError("support element has the wrong k")
            if not is_nonneg(p):
                raise ValueError(f"support element {p} is not >= 0")
            vec = np.asarray(vec, dtype=complex).reshape(self.dim)
            clean[p] = vec
        self.entries = clean

    def __call__(self, p: GroupElement) -> np.ndarray:
        return self.entries.get(p, np.zeros(self.dim, dtype=complex))

    def support(self) -> list[GroupElement]:
        return list(self.entries)

    def prune(self, tol: float = 0.0) -> "FiniteSupportFunction":
        return FiniteSupportFunction(self.dim, self.k,
                                     {p: v for p, v in self.entries.items() if np.linalg.norm(v) > tol})

    def distance(self, other: "FiniteSupportFunction") -> float:
        """Max pointwise norm of the difference."""
        keys = set(self.entries) | set(other.entries)
        return max((float(np.linalg.norm(self(p) - other(p))) for p in keys), default=0.0)

    @classmethod
    def random(cls, dim: int, k: int, word_L: int, phase_L: int, rng, density: float = 0.6):
        """Random function on the nonnegative box ``word <= word_L``, ``phase <= phase_L``."""
        entries = {}
        for p in nonneg_box(k, word_L, phase_L):
            if rng.random() < density:
                entries[p] = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return cls(dim, k, entries)


def nonneg_box(k: int, word_L: int, phase_L: int = 0) -> list[GroupElement]:
    """Nonnegative full exponents with word parts ``<= word_L`` and pair parts ``<= phase_L``."""
    npairs = k * (k - 1) // 2
    bounds = [phase_L] * npairs + [word_L] * k
    return [unflat(x, k) for x in itertools.product(*(range(b + 1) for b in bounds))]


def forward_transform(ctx: KernelContext, h: FiniteSupportFunction) -> FiniteSupportFunction:
    """``g(n) = sum_{m >= n} prod_{i<j} q_ij^{(m_i - n_i) n_j} T(x^{m-n}) h(m)``."""
    targets = set()
    for m in h.entries:
        for n in itertools.product(*(range(x + 1) for x in flat(m))):
            targets.add(unflat(n, h.k))
    out = {}
    for n in targets:
        acc = np.zeros(h.dim, dtype=complex)
        for m, vec in h.entries.items():
            diff = _add(m, n, -1)
            if not is_nonneg(diff):
                continue
            ph = shift_phase(ctx, diff.word_exp, n.word_exp)
            acc += ph * (eval_kernel(ctx, diff) @ vec)
        out[n] = acc
    return FiniteSupportFunction(h.dim, h.k, out)


def inverse_transform(ctx: KernelContext, g: FiniteSupportFunction) -> FiniteSupportFunction:
    """``h(n) = sum_{v in Omega} (-1)^{|v|} prod_{i<j} q_ij^{e_i(v) n_j} T(x^{e(v)}) g(n + e(v))``."""
    k = g.k
    nomega = k * (k - 1) // 2 + k
    subsets = [omega_indicator(v, k) for v in _subsets(range(nomega))]
    signs = [(-1) ** sum(flat(e)) for e in subsets]
    mats = [eval_kernel(ctx, e) for e in subsets]
    targets = set()
    for p in g.entries:
        for e in subsets:
            n = _add(p, e, -1)
            if is_nonneg(n):
                targets.add(n)
    out = {}
    for n in targets:
        acc = np.zeros(g.dim, dtype=complex)
        for e, sgn, mat in zip(subsets, signs, mats):
            src = _add(n, e)
            if src in g.entries:
                acc += sgn * shift_phase(ctx, e.word_exp, n.word_exp) * (mat @ g.entries[src])
        out[n] = acc
    return FiniteSupportFunction(g.dim, g.k, out)


# --------------------------------------------------------------------------
# D(p, r)
# --------------------------------------------------------------------------


def D_operator(ctx: KernelContext, p: GroupElement, r: GroupElement) -> np.ndarray:
    """The double subset sum ``D(p, r)``, evaluated term by term.

    ``sum_{v in pi(p), w in pi(r)} (-1)^{|v|+|w|} prod_{i<j} q_ij^{c_ij}
    T(x^{e(w)})^* T(x^{p - e(v) - r + e(w)}) T(x^{e(v)})`` with
    ``c_ij = (p_i - e_i(v) - r_i)(r_j - e_j(w)) + (p_j - e_j(v)) e_i(v)``.
    """
    if not (is_nonneg(p) and is_nonneg(r)):
        raise ValueError("D(p, r) needs p, r >= 0")
    k = ctx.k
    out = np.zeros((ctx.dim, ctx.dim), dtype=complex)
    for v in _subsets(omega_support(p)):
        ev = omega_indicator(v, k)
        tv = eval_kernel(ctx, ev)
        pv = _add(p, ev, -1)
        for w in _subsets(omega_support(r)):
            ew = omega_indicator(w, k)
            rw = _add(r, ew, -1)
            mid = _add(pv, rw, -1)
            c = tuple((pv.word_exp[i - 1] - r.word_exp[i - 1]) * rw.word_exp[j - 1]
                      + pv.word_exp[j - 1] * ev.word_exp[i - 1] for i, j in pair_list(k))
            term = eval_kernel(ctx, ew).conj().T @ eval_kernel(ctx, mid) @ tv
            out += (-1) ** (len(v) + len(w)) * ctx.q.scalar(c) * term
    return out


def diagonal_collapse(ctx: KernelContext, p: GroupElement) -> np.ndarray:
    """``sum_{u in pi(p)} (-1)^{|u|} T(x^{e(u)})^* T(x^{e(u)})``.

    Central coordinates only contribute unimodular scalars to ``T(x^{e(u)})``,
    so a positive central coordinate makes the terms cancel in pairs.
    """
    out = np.zeros((ctx.dim, ctx.dim), dtype=complex)
    for u in _subsets(omega_support(p)):
        t = eval_kernel(ctx, omega_indicator(u, ctx.k))
        out += (-1) ** len(u) * (t.conj().T @ t)
    return out


def d_vanishing_scan(ctx: KernelContext, word_L: int = 2, phase_L: int = 1) -> dict:
    """Exhaustive ``D(p, r)`` over the nonnegative box: off-diagonal norms and diagonal collapse."""
    pts = nonneg_box(ctx.k, word_L, phase_L)

    def row(p):
        off, diag = 0.0, 0.0
        for r in pts:
            d = D_operator(ctx, p, r)
            if r == p:
                diag = max(diag, float(np.linalg.norm(d - diagonal_collapse(ctx, p), 2)))
            else:
                off = max(off, float(np.linalg.norm(d, 2)))
        return off, diag

    res = pmap(row, pts)
    return {
        "points": len(pts),
        "max_offdiag": max(r[0] for r in res),
        "max_diag_collapse": max(r[1] for r in res),
    }


# --------------------------------------------------------------------------
# Quadratic forms
# --------------------------------------------------------------------------


def quadratic_form_902(ctx: KernelContext, h: FiniteSupportFunction) -> complex:
    """``sum_{m,n >= 0} <prod_{i<j} q_ij^{(m_i - n_i) n_j} T(x^{m-n}) h(m), h(n)>``."""
    total = 0j
    for m, hm in h.entries.items():
        for n, hn in h.entries.items():
            diff = _add(m, n, -1)
            ph = shift_phase(ctx, diff.word_exp, n.word_exp)
            total += np.vdot(hn, ph * (eval_kernel(ctx, diff) @ hm))
    return complex(total)


def d_form(ctx: KernelContext, g: FiniteSupportFunction) -> complex:
    """``sum_{p,r >= 0} <D(p, r) g(p), g(r)>``."""
    total = 0j
    for p, gp in g.entries.items():
        for r, gr in g.entries.items():
            total += np.vdot(gr, D_operator(ctx, p, r) @ gp)
    return complex(total)


def form_matrix(ctx: KernelContext, points: Sequence[GroupElement]) -> np.ndarray:
    """Matrix of :func:`quadratic_form_902` over ``points`` (block row ``n``, column ``m``)."""
    rows = []
    for n in points:
        blocks = []
        for m in points:
            diff = _add(m, n, -1)
            blocks.append(shift_phase(ctx, diff.word_exp, n.word_exp) * eval_kernel(ctx, diff))
        rows.append(np.hstack(blocks))
    a = np.vstack(rows)
    return (a + a.conj().T) / 2


def negative_witness(ctx: KernelContext, word_L: int = 1, phase_L: int = 1,
                     eig_tol: float = 1e-8) -> FiniteSupportFunction | None:
    """A ``g`` with negative :func:`d_form`, or ``None`` if the box form is PSD up to ``eig_tol``.

    Takes the bottom eigenvector ``h`` of the form matrix on the nonnegative box
    and returns ``g = forward_transform(h)``.
    """
    pts = nonneg_box(ctx.k, word_L, phase_L)
    a = form_matrix(ctx, pts)
    vals, vecs = np.linalg.eigh(a)
    if vals[0] >= -eig_tol:
        return None
    vec = vecs[:, 0].reshape(len(pts), ctx.dim)
    h = FiniteSupportFunction(ctx.dim, ctx.k, dict(zip(pts, vec)))
    return forward_transform(ctx, h)


@dataclass
class PositivityReport:
    trials: int
    max_discrepancy: float
    min_value: float
    values: list[float]

    def as_dict(self) -> dict:
        return {"trials": self.trials, "max_discrepancy": self.max_discrepancy, "min_value": self.min_value}


def positivity_via_transforms(ctx: KernelContext, word_L: int = 1, phase_L: int = 0, trials: int = 10,
                              seed: int = 0, extra: Sequence[FiniteSupportFunction] = ()) -> PositivityReport:
    """Compare the ``D``-sum of random ``g`` with the form of ``h = inverse_transform(g)``.

    Returns the largest discrepancy between the two evaluations and the
    smallest real value seen.  ``extra`` functions are evaluated as well.
    """
    rng = np.random.default_rng(seed)
    gs = [FiniteSupportFunction.random(ctx.dim, ctx.k, word_L, phase_L, rng) for _ in range(trials)]
    gs.extend(extra)
    disc, vals = 0.0, []
    for g in gs:
        a = d_form(ctx, g)
        b = quadratic_form_902(ctx, inverse_transform(ctx, g))
        disc = max(disc, abs(a - b))
        vals.append(a.real)
    return PositivityReport(len(gs), disc, min(vals, default=0.0), vals)
