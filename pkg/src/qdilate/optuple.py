"""Finite tuples of q-commuting contraction matrices.

Covers validation, class detection, the Brehmer operators ``S(u)`` and
structured generators built from clock and shift matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import unitary_group

from ._parallel import pmap
from .qword import QSpec, UnitComplex, pair_list

MAX_SUBSET_K = 20


def opnorm(a: np.ndarray) -> float:
    """Operator 2-norm (largest singular value)."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def min_eig(a: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of ``a``."""
    h = (a + a.conj().T) / 2
    return float(np.linalg.eigvalsh(h)[0])


def all_subsets(k: int) -> list[tuple[int, ...]]:
    """Every subset of ``{1..k}`` as a sorted tuple, by size then lexicographic."""
    idx = range(1, k + 1)
    return [c for r in range(k + 1) for c in combinations(idx, r)]


class OperatorTuple:
    """The tuple ``(T_1, ..., T_k)`` with its phase data.

    Parameters
    ----------
    mats : sequence of array_like
        ``k`` square matrices of equal size.
    q : QSpec
        Phase data with ``q.k == len(mats)``.
    tol : float
        Tolerance used by :func:`validate` and :func:`classify`.
    """

    def __init__(self, mats: Sequence, q: QSpec, tol: float = 1e-10):
        arrs = [np.array(m, dtype=complex) for m in mats]
        if not arrs:
            raise ValueError("an operator tuple needs at least one matrix")
        d = arrs[0].shape[0] if arrs[0].ndim == 2 else -1
        for a in arrs:
            if a.ndim != 2 or a.shape != (d, d):
                raise ValueError(f"matrices must be square and of equal size, got shape {a.shape}")
        if q.k != len(arrs):
            raise ValueError(f"phase data has k={q.k} but {len(arrs)} matrices were given")
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        for a in arrs:
            a.setflags(write=False)
        self.mats = tuple(arrs)
        self.q = q
        self.tol = float(tol)

    @property
    def k(self) -> int:
        return len(self.mats)

    @property
    def dim(self) -> int:
        return self.mats[0].shape[0]

    def __getitem__(self, alpha: int) -> np.ndarray:
        """``T_alpha`` with 1-based ``alpha``."""
        return self.mats[alpha - 1]

    def adjoint(self) -> "OperatorTuple":
        """The tuple ``(T_1^*, ..., T_k^*)``; it q-commutes with the same phases."""
        return OperatorTuple([m.conj().T for m in self.mats], self.q, self.tol)

    def ordered_product(self, exps: Sequence[int]) -> np.ndarray:
        """``T_1^{e_1} ... T_k^{e_k}`` for nonnegative ``exps``."""
        out = np.eye(self.dim, dtype=complex)
        for a, e in zip(self.mats, exps):
            if e < 0:
                raise ValueError("ordered_product needs nonnegative exponents")
            if e:
                out = out @ np.linalg.matrix_power(a, e)
        return out

    def subset_product(self, v: Iterable[int]) -> np.ndarray:
        """``T(x^{e(v)})``: product over ``v`` in ascending index order."""
        v = set(v)
        return self.ordered_product([1 if a in v else 0 for a in range(1, self.k + 1)])

    def __repr__(self) -> str:
        return f"OperatorTuple(dim={self.dim}, k={self.k}, tol={self.tol})"


# --------------------------------------------------------------------------
# Validation and classification
# --------------------------------------------------------------------------


@dataclass
class ValidationReport:
    passed: bool
    norm_excess: float
    pair_residuals: dict[tuple[int, int], float] = field(default_factory=dict)
    tol: float = 1e-10

    @property
    def max_commutation_residual(self) -> float:
        return max(self.pair_residuals.values(), default=0.0)

    def as_dict(self) -> dict:
        return {
            "pass": self.passed,
            "norm_excess": self.norm_excess,
            "max_commutation_residual": self.max_commutation_residual,
            "pair_residuals": {f"{i},{j}": r for (i, j), r in self.pair_residuals.items()},
        }


def commutation_residual(t: OperatorTuple, i: int, j: int) -> float:
    """``||T_i T_j - q_ij T_j T_i||``."""
    a, b = t[i], t[j]
    return opnorm(a @ b - t.q.value(i, j) * (b @ a))


def validate(t: OperatorTuple) -> ValidationReport:
    excess = max(opnorm(a) - 1.0 for a in t.mats)
    pairs = {(i, j): commutation_residual(t, i, j) for i, j in pair_list(t.k)}
    ok = excess <= t.tol and all(r <= t.tol for r in pairs.values())
    return ValidationReport(ok, max(excess, 0.0), pairs, t.tol)


@dataclass(frozen=True)
class TupleClass:
    is_isometric: bool
    is_doubly_q_commuting: bool
    norm_sum_ok: bool
    is_normal_family: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def doubly_residual(t: OperatorTuple, i: int, j: int) -> float:
    """``||T_i T_j^* - conj(q_ij) T_j^* T_i||``."""
    a, b = t[i], t[j].conj().T
    return opnorm(a @ b - np.conj(t.q.value(i, j)) * (b @ a))


def classify(t: OperatorTuple) -> TupleClass:
    eye = np.eye(t.dim)
    iso = all(opnorm(a.conj().T @ a - eye) <= t.tol for a in t.mats)
    doubly = all(doubly_residual(t, i, j) <= t.tol for i, j in pair_list(t.k))
    nsum = sum(opnorm(a) ** 2 for a in t.mats) <= 1 + t.tol
    normal = all(opnorm(a @ a.conj().T - a.conj().T @ a) <= t.tol for a in t.mats)
    return TupleClass(iso, doubly, nsum, normal)


# --------------------------------------------------------------------------
# Brehmer operators
# --------------------------------------------------------------------------


def brehmer_operator(t: OperatorTuple, u: Iterable[int]) -> np.ndarray:
    """``S(u) = sum_{v in u} (-1)^{|v|} T(x^{e(v)})^* T(x^{e(v)})``, symmetrized."""
    u = sorted(set(u))
    if any(not 1 <= a <= t.k for a in u):
        raise ValueError(f"subset {u} not contained in 1..{t.k}")
    s = np.zeros((t.dim, t.dim), dtype=complex)
    for r in range(len(u) + 1):
        for v in combinations(u, r):
            p = t.subset_product(v)
            s += (-1) ** r * (p.conj().T @ p)
    return (s + s.conj().T) / 2


def brehmer_product_form(t: OperatorTuple, u: Iterable[int]) -> np.ndarray:
    """``prod_{w in u} (I - T_w^* T_w)`` in ascending order.

    Equals :func:`brehmer_operator` only for doubly q-commuting tuples; that
    precondition is not checked here.
    """
    out = np.eye(t.dim, dtype=complex)
    for a in sorted(set(u)):
        out = out @ (np.eye(t.dim) - t[a].conj().T @ t[a])
    return out


@dataclass
class BrehmerReport:
    passed: bool
    margins: dict[tuple[int, ...], float]
    eig_tol: float

    @property
    def min_margin(self) -> float:
        return min(self.margins.values())

    @property
    def worst_subset(self) -> tuple[int, ...]:
        return min(self.margins, key=self.margins.get)

    def as_dict(self) -> dict:
        return {
            "pass": self.passed,
            "min_margin": self.min_margin,
            "worst_subset": list(self.worst_subset),
            "margins": {",".join(map(str, u)) or "{}": m for u, m in self.margins.items()},
        }


def brehmer_check(t: OperatorTuple, eig_tol: float = 1e-8) -> BrehmerReport:
    """Smallest eigenvalue of ``S(u)`` for every ``u``; passes iff all are ``>= -eig_tol``."""
    if t.k > MAX_SUBSET_K:
        raise ValueError(f"k={t.k} exceeds {MAX_SUBSET_K}: 2^k subsets is too many")
    subsets = all_subsets(t.k)
    vals = pmap(lambda u: min_eig(brehmer_operator(t, u)), subsets)
    margins = dict(zip(subsets, vals))
    return BrehmerReport(all(m >= -eig_tol for m in vals), margins, eig_tol)


# --------------------------------------------------------------------------
# Generators
# --------------------------------------------------------------------------


def shift_matrix(r: int) -> np.ndarray:
    """Cyclic shift ``X e_j = e_{j+1}``."""
    return np.roll(np.eye(r, dtype=complex), 1, axis=0)


def clock_matrix(r: int) -> np.ndarray:
    """``Z = diag(w^j)`` with ``w = exp(2 pi i / r)``."""
    return np.diag(np.exp(2j * np.pi * np.arange(r) / r))


def weyl_operator(a: int, b: int, r: int) -> np.ndarray:
    """``X^a Z^b``."""
    return np.linalg.matrix_power(shift_matrix(r), a % r) @ np.linalg.matrix_power(clock_matrix(r), b % r)


def weyl_turn(ai: int, bi: int, aj: int, bj: int, r: int) -> Fraction:
    """Turn of ``q`` in ``W_i W_j = q W_j W_i`` for ``W = X^a Z^b`` (``X Z = w^{-1} Z X``)."""
    return Fraction((bi * aj - ai * bj) % r, r)


def generate_clock_shift(r: int, scale: tuple[complex, complex] = (1.0, 1.0), tol: float = 1e-10) -> OperatorTuple:
    """The pair ``(a X, b Z)`` on ``C^r``; ``X Z = w^{-1} Z X`` gives ``q_12`` of turn ``(r-1)/r``."""
    if r < 2:
        raise ValueError("r must be at least 2")
    a, b = scale
    if abs(a) > 1 or abs(b) > 1:
        raise ValueError("scale entries must have modulus at most 1")
    q = QSpec(2, {(1, 2): Fraction(r - 1, r)})
    return OperatorTuple([a * shift_matrix(r), b * clock_matrix(r)], q, tol)


def _smallest_divisor(d: int) -> int:
    for p in range(2, d + 1):
        if d % p == 0:
            return p
    return 1


TUPLE_KINDS = ("isometric", "doubly", "norm_sum")


def generate_random(kind: str, d: int, k: int, seed: int, r: int | None = None, tol: float = 1e-10) -> OperatorTuple:
    """Random structured tuple of the requested class.

    Every matrix has the form ``V (X^{a_i} Z^{b_i} (x) A_i) V^*`` with ``C^d =
    C^r (x) C^s``, a random unitary ``V`` and mutually commuting ``A_i``.  Then
    ``q_ij`` is the Weyl phase of the clock-shift factors.

    * ``isometric``: ``A_i`` random diagonal unitaries (the tuple is unitary).
    * ``doubly``: ``A_i`` random diagonal contractions, so the tuple is doubly
      q-commuting but generally not isometric.
    * ``norm_sum``: ``A_i`` polynomials in one random matrix (commuting, not
      normal), rescaled so ``sum ||T_i||^2 <= 1``.

    Generic random matrices never q-commute, so nothing unstructured is offered.
    """
    if kind not in TUPLE_KINDS:
        raise ValueError(f"unknown class {kind!r}; expected one of {TUPLE_KINDS}")
    if d < 1 or k < 1:
        raise ValueError("d and k must be positive")
    if r is None:
        r = _smallest_divisor(d)
    if r < 1 or d % r:
        raise ValueError(f"r={r} must divide d={d}")
    s = d // r
    rng = np.random.default_rng(seed)
    ab = rng.integers(0, r, size=(k, 2)) if r > 1 else np.zeros((k, 2), dtype=int)
    weyl = [weyl_operator(int(a), int(b), r) for a, b in ab]

    if kind == "isometric":
        facs = [np.diag(np.exp(2j * np.pi * rng.random(s))) for _ in range(k)]
    elif kind == "doubly":
        facs = []
        for _ in range(k):
            rad = rng.uniform(0.2, 1.0, s) * rng.uniform(0.5, 1.0)
            facs.append(np.diag(rad * np.exp(2j * np.pi * rng.random(s))))
    else:
        n = rng.normal(size=(s, s)) + 1j * rng.normal(size=(s, s))
        n /= max(opnorm(n), 1e-12)
        facs = []
        for _ in range(k):
            c = rng.normal(size=3) + 1j * rng.normal(size=3)
            facs.append(c[0] * np.eye(s) + c[1] * n + c[2] * (n @ n))

    v = unitary_group.rvs(d, random_state=rng) if d > 1 else np.eye(1, dtype=complex)
    mats = [v @ np.kron(w, f) @ v.conj().T for w, f in zip(weyl, facs)]
    if kind == "norm_sum":
        total = sum(opnorm(m) ** 2 for m in mats)
        target = rng.uniform(0.5, 1.0)
        mats = [m * np.sqrt(target / total) for m in mats]
    q = QSpec(k, {(i, j): weyl_turn(*ab[i - 1], *ab[j - 1], r) if r > 1 else Fraction(0)
                  for i, j in pair_list(k)})
    return OperatorTuple(mats, q, tol)


def nilpotent_pair(tol: float = 1e-10) -> OperatorTuple:
    """The commuting pair ``(N, N)`` with ``N = [[0, 1], [0, 0]]``; fails Brehmer."""
    n = np.array([[0, 1], [0, 0]], dtype=complex)
    return OperatorTuple([n, n], QSpec(2), tol)


# --------------------------------------------------------------------------
# JSON tuple format
# --------------------------------------------------------------------------


def unit_to_json(u: UnitComplex) -> dict:
    if u.exact:
        return {"turn": f"{u.turn.numerator}/{u.turn.denominator}"}
    return {"re": u.re, "im": u.im}


def unit_from_json(obj: dict) -> UnitComplex:
    if "turn" in obj:
        return UnitComplex.from_turn(str(obj["turn"]))
    return UnitComplex.from_complex(complex(obj["re"], obj["im"]))


def matrix_to_json(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a, dtype=complex)]


def matrix_from_json(rows) -> np.ndarray:
    arr = np.array(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def tuple_to_dict(t: OperatorTuple) -> dict:
    qs = []
    for (i, j), u in t.q.phases.items():
        qs.append({"i": i, "j": j, **unit_to_json(u)})
    return {"dim": t.dim, "k": t.k, "q": qs, "matrices": [matrix_to_json(a) for a in t.mats], "tol": t.tol}


def tuple_from_dict(obj: dict) -> OperatorTuple:
    try:
        k = int(obj["k"])
        d = int(obj["dim"])
        phases = {(int(e["i"]), int(e["j"])): unit_from_json(e) for e in obj.get("q", [])}
        mats = [matrix_from_json(m) for m in obj["matrices"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed tuple record: {exc}") from exc
    if len(mats) != k:
        raise ValueError(f"expected {k} matrices, found {len(mats)}")
    if any(m.shape != (d, d) for m in mats):
        raise ValueError(f"matrices must be {d}x{d}")
    return OperatorTuple(mats, QSpec(k, phases), float(obj.get("tol", 1e-10)))


def save_tuple(t: OperatorTuple, path) -> None:
    with open(path, "w") as fh:
        json.dump(tuple_to_dict(t), fh)


def load_tuple(path) -> OperatorTuple:
    with open(path) as fh:
        return tuple_from_dict(json.load(fh))
