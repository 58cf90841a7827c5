"""Windowed dilations built from the kernel Gram matrix.

The Gram matrix over a window is factored as ``G = B^* B``.  Each block of
columns of ``B`` holds the vectors ``delta_g xi``.  Left translation by
``s_alpha`` is an isometry between spans of these vectors; it is completed
to a unitary on the whole factor space.  Compressions of monomials in the
completed unitaries reproduce the kernel for exponents inside the window.
"""

from __future__ import annotations

import csv
import itertools
import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._parallel import pmap
from .kernel import DEFAULT_CAP, KernelContext, Window, eval_kernel, gram_matrix
from .optuple import OperatorTuple, brehmer_check, classify, matrix_from_json, matrix_to_json, opnorm
from .qword import GroupElement, multiply, split_pm


class NonPositiveKernel(ValueError):
    """The kernel is not positive on the window (Brehmer positivity fails)."""


@dataclass
class GNSSpace:
    window: Window
    gram: np.ndarray
    basis: np.ndarray  # rank x (|W| d); column block of g holds delta_g
    rank_tol: float
    index: dict[GroupElement, slice]
    dim_h: int
    reconstruction_residual: float = 0.0

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def block(self, g: GroupElement) -> np.ndarray:
        return self.basis[:, self.index[g]]

    @property
    def embed(self) -> np.ndarray:
        """Columns for the identity element; an isometry from ``C^d``."""
        return self.block(GroupElement.identity(self.window.k))


def build_gns(ctx: KernelContext, w: Window, rank_tol: float = 1e-10, eig_tol: float = 1e-8,
              cap: int = DEFAULT_CAP) -> GNSSpace:
    """Factor the Gram matrix of ``w`` by eigendecomposition.

    Eigenvalues below ``rank_tol * lambda_max`` are dropped.  Raises
    :class:`NonPositiveKernel` if the smallest eigenvalue is below ``-eig_tol``.
    """
    if w.include_phase_coords:
        raise ValueError("dilation windows carry no phase coordinates")
    g = gram_matrix(ctx, w, cap)
    lam, vecs = np.linalg.eigh(g)
    if lam[0] < -eig_tol:
        raise NonPositiveKernel(f"Gram matrix has eigenvalue {lam[0]:.3e} < -{eig_tol:g}")
    lmax = max(lam[-1], 0.0)
    keep = lam > rank_tol * lmax
    # descending eigenvalue order
    lam, vecs = lam[keep][::-1], vecs[:, keep][:, ::-1]
    basis = np.sqrt(lam)[:, None] * vecs.conj().T
    d = ctx.dim
    index = {el: slice(i * d, (i + 1) * d) for i, el in enumerate(w.elements())}
    recon = opnorm(basis.conj().T @ basis - g)
    return GNSSpace(w, g, basis, rank_tol, index, d, recon)


@dataclass
class PartialIsometry:
    alpha: int
    domain: np.ndarray  # orthonormal basis of D_alpha (columns)
    range: np.ndarray  # orthonormal basis of R_alpha, range = M domain
    isometry_residual: float
    map_residual: float
    warning: str | None = None

    @property
    def operator(self) -> np.ndarray:
        return self.range @ self.domain.conj().T


def translation_operator(gns: GNSSpace, ctx: KernelContext, alpha: int) -> PartialIsometry:
    """Left translation by ``s_alpha`` on the span of ``delta_g`` with ``s_alpha g`` in the window.

    ``s_alpha g`` equals ``q^c x^{m + e_alpha}`` for a central ``c``; its
    vector is ``q^c delta_{x^{m+e_alpha}}``.
    """
    k = gns.window.k
    gen = GroupElement.generator(alpha, k)
    dom_cols, img_blocks = [], []
    for g in gns.window.elements():
        sg = multiply(gen, g)
        target = GroupElement.from_word(sg.word_exp)
        if not gns.window.contains(target):
            continue
        dom_cols.append(gns.block(g))
        img_blocks.append(ctx.q.scalar(sg.phase_exp) * gns.block(target))
    a = np.hstack(dom_cols)
    b = np.hstack(img_blocks)
    iso = opnorm(a.conj().T @ a - b.conj().T @ b)
    q_, s, wh = np.linalg.svd(a, full_matrices=False)
    lam_max = np.linalg.norm(gns.gram, 2) if gns.gram.size else 1.0
    thresh = np.sqrt(gns.rank_tol * lam_max)
    keep = s > thresh
    warn = None
    if np.any((s > 0.1 * thresh) & (s < 10 * thresh)):
        warn = f"singular values within a decade of the rank threshold {thresh:.2e}"
        warnings.warn(f"translation {alpha}: {warn}", RuntimeWarning, stacklevel=2)
    dom = q_[:, keep]
    rng_ = b @ wh.conj().T[:, keep] / s[keep]
    op = rng_ @ dom.conj().T
    return PartialIsometry(alpha, dom, rng_, iso, opnorm(op @ a - b), warn)


def _complement(basis: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement, in a fixed convention.

    Eigenvectors of the complementary projector, descending eigenvalue then
    index order, each scaled so its largest-magnitude entry is real positive.
    """
    proj = np.eye(n) - basis @ basis.conj().T
    proj = (proj + proj.conj().T) / 2
    lam, vecs = np.linalg.eigh(proj)
    m = n - basis.shape[1]
    if m <= 0:
        return np.zeros((n, 0), dtype=complex)
    order = sorted(range(n), key=lambda i: (-lam[i], i))[:m]
    out = vecs[:, order]
    for j in range(m):
        col = out[:, j]
        p = int(np.argmax(np.abs(col)))
        out[:, j] = col * (abs(col[p]) / col[p])
    # re-orthonormalise against round-off
    qm, r = np.linalg.qr(out)
    return qm * np.sign(np.real(np.diag(r)))[None, :]


def complete_to_unitary(partial: PartialIsometry, n: int | None = None) -> np.ndarray:
    """A unitary agreeing with the partial isometry on its domain."""
    n = partial.domain.shape[0] if n is None else n
    dperp = _complement(partial.domain, n)
    rperp = _complement(partial.range, n)
    return partial.range @ partial.domain.conj().T + rperp @ dperp.conj().T


@dataclass
class DilationResult:
    unitaries: list[np.ndarray]
    embed: np.ndarray
    depth: tuple[int, ...]
    residuals: dict = field(default_factory=dict)
    gns: GNSSpace | None = None
    partials: list[PartialIsometry] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.embed.shape[0]

    def monomial(self, m: Sequence[int], order: Sequence[int] | None = None) -> np.ndarray:
        """``U_{a_1}^{m_{a_1}} ... U_{a_k}^{m_{a_k}}`` (default ascending order); ``U^{-1} = U^*``."""
        order = range(1, len(m) + 1) if order is None else order
        out = np.eye(self.dim, dtype=complex)
        for a in order:
            e = m[a - 1]
            u = self.unitaries[a - 1]
            if e < 0:
                u, e = u.conj().T, -e
            if e:
                out = out @ np.linalg.matrix_power(u, e)
        return out

    def compression(self, m: Sequence[int], order: Sequence[int] | None = None) -> np.ndarray:
        return self.embed.conj().T @ self.monomial(m, order) @ self.embed


def dilate(t: OperatorTuple, w: Window, rank_tol: float = 1e-10, eig_tol: float = 1e-8,
           seed: int = 0, verify: bool = True) -> DilationResult:
    """Windowed regular q-unitary dilation of ``t``.

    Refuses (with :class:`NonPositiveKernel`) when Brehmer positivity fails.
    """
    br = brehmer_check(t, eig_tol)
    if not br.passed:
        raise NonPositiveKernel(f"Brehmer positivity fails on subset {br.worst_subset} "
                                f"(min eigenvalue {br.min_margin:.3e})")
    ctx = KernelContext(t)
    gns = build_gns(ctx, w, rank_tol, eig_tol)
    partials = pmap(lambda a: translation_operator(gns, ctx, a), range(1, t.k + 1))
    unitaries = [complete_to_unitary(p, gns.dim) for p in partials]
    res = DilationResult(unitaries, gns.embed, w.L, {}, gns, partials)
    if verify:
        res.residuals = verify_dilation(res, ctx, seed=seed)
    return res


def word_kernel(ctx: KernelContext, m: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Normal-ordered product of ``T``'s along ``order``.

    ``prod_{i<j} q_{b_i b_j}^{-m_{b_i}^+ m_{b_j}^-} (T_{b_1}^{m^-})^* ... T_{b_1}^{m^+} ...``
    where ``b`` is ``order``.
    """
    t = ctx.tuple
    mp, mm = split_pm(m)
    phase = 1 + 0j
    for x, y in itertools.combinations(order, 2):
        e = -mp[x - 1] * mm[y - 1]
        if e:
            phase *= complex(t.q(x, y) ** e)
    back = np.eye(t.dim, dtype=complex)
    fwd = np.eye(t.dim, dtype=complex)
    for a in order:
        back = np.linalg.matrix_power(t[a], mm[a - 1]) @ back
        fwd = fwd @ np.linalg.matrix_power(t[a], mp[a - 1])
    return phase * (back.conj().T @ fwd)


def interior_projector(res: DilationResult) -> np.ndarray:
    """Orthogonal projector onto the span of ``delta_g`` with ``|m_l| <= L_l - 1``."""
    gns = res.gns
    cols = [gns.block(g) for g in gns.window.elements()
            if all(abs(x) <= b - 1 for x, b in zip(g.word_exp, gns.window.L))]
    if not cols:
        return np.zeros((gns.dim, gns.dim), dtype=complex)
    a = np.hstack(cols)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    keep = s > np.sqrt(gns.rank_tol * max(np.linalg.norm(gns.gram, 2), 1e-300))
    u = u[:, keep]
    return u @ u.conj().T


def verify_dilation(res: DilationResult, ctx: KernelContext, seed: int = 0) -> dict:
    """Residuals of every identity the windowed dilation should satisfy.

    * ``compression``: ``V^* U_1^{m_1} ... U_k^{m_k} V`` against ``T(x^m)``,
      for all ``|m_i| <= depth_i``; per-``m`` values are in ``table``.
    * ``unitarity`` and ``embedding``: ``||U^* U - I||`` and ``||V^* V - I||``.
    * ``q_relation_interior``: ``||(U_i U_j - q_ij U_j U_i) P||`` with ``P``
      the interior projector.
    * ``permutation``: the compression identity with generators taken in a
      random order.
    * ``extension``: ``||U_a V - V T_a||``, reported for isometric tuples.
    """
    t = ctx.tuple
    k = t.k
    n = res.dim
    table = {}
    ms = list(itertools.product(*(range(-x, x + 1) for x in res.depth)))

    def comp(m):
        return opnorm(res.compression(m) - eval_kernel(ctx, GroupElement.from_word(m)))

    for m, r in zip(ms, pmap(comp, ms)):
        table[m] = r
    unit = max(opnorm(u.conj().T @ u - np.eye(n)) for u in res.unitaries)
    emb = opnorm(res.embed.conj().T @ res.embed - np.eye(t.dim))
    # the interior needs the GNS factor; a reloaded dilation has none
    qrel = None
    if res.gns is not None:
        proj = interior_projector(res)
        qrel = 0.0
        for i, j in itertools.combinations(range(1, k + 1), 2):
            ui, uj = res.unitaries[i - 1], res.unitaries[j - 1]
            qrel = max(qrel, opnorm((ui @ uj - t.q.value(i, j) * (uj @ ui)) @ proj))
    rng = np.random.default_rng(seed)
    order = list(range(1, k + 1))
    while k > 1 and order == sorted(order):
        order = [int(x) + 1 for x in rng.permutation(k)]
    perm = max(opnorm(res.compression(m, order) - word_kernel(ctx, m, order)) for m in ms)
    report = {
        "compression": max(table.values()),
        "unitarity": unit,
        "embedding": emb,
        "q_relation_interior": qrel,
        "permutation": perm,
        "permutation_order": order,
        "gns_dim": n,
        "table": table,
    }
    if res.partials:
        report["translation_isometry"] = max(p.isometry_residual for p in res.partials)
        report["translation_map"] = max(p.map_residual for p in res.partials)
    if classify(t).is_isometric:
        report["extension"] = max(opnorm(u @ res.embed - res.embed @ t[a])
                                  for a, u in enumerate(res.unitaries, start=1))
    return report


def residual_summary(report: dict) -> dict:
    """The scalar entries of a :func:`verify_dilation` report."""
    return {key: v for key, v in report.items() if key != "table"}


def dilation_passes(report: dict, tol: float = 1e-8) -> bool:
    keys = ["compression", "unitarity", "embedding", "q_relation_interior", "permutation"]
    if "extension" in report:
        keys.append("extension")
    return all(report[key] <= tol for key in keys if report.get(key) is not None)


def dilation_to_dict(res: DilationResult) -> dict:
    return {
        "dim": res.dim,
        "depth": list(res.depth),
        "unitaries": [matrix_to_json(u) for u in res.unitaries],
        "embed": matrix_to_json(res.embed),
        "residuals": residual_summary(res.residuals),
    }


def save_dilation(res: DilationResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(dilation_to_dict(res), fh)


def write_residual_csv(report: dict, path) -> None:
    """One row per exponent ``m``: ``m_1, ..., m_k, residual``."""
    table = report["table"]
    k = len(next(iter(table)))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([f"m{i}" for i in range(1, k + 1)] + ["residual"])
        for m, r in table.items():
            wr.writerow(list(m) + [f"{r:.6e}"])


def load_dilation(path) -> DilationResult:
    with open(path) as fh:
        obj = json.load(fh)
    return DilationResult([matrix_from_json(u) for u in obj["unitaries"]], matrix_from_json(obj["embed"]),
                          tuple(obj["depth"]), obj.get("residuals", {}))
