"""Built-in operators and their expected classifications.

Symmetric-matrix codomains use rational coordinates: diagonal entries first,
then the upper off-diagonal entries ``w_ab`` (a < b) each stored once, with
the Gram matrix carrying the factor 2 that the duplicated entry contributes to
the Frobenius norm. No square roots appear anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .symbol import Operator

F = Fraction


def _zeros(m: int, n: int) -> list[list[Fraction]]:
    return [[F(0)] * n for _ in range(m)]


def gradient(n: int) -> Operator:
    coeffs = []
    for i in range(n):
        a = _zeros(n, 1)
        a[i][0] = F(1)
        coeffs.append(a)
    return Operator(n=n, dim_v=1, dim_w=n, coeffs=tuple(map(_tup, coeffs)), name=f"gradient_{n}d")


def divergence(n: int) -> Operator:
    coeffs = []
    for i in range(n):
        a = _zeros(1, n)
        a[0][i] = F(1)
        coeffs.append(a)
    return Operator(n=n, dim_v=n, dim_w=1, coeffs=tuple(map(_tup, coeffs)), name=f"divergence_{n}d")


def cauchy_riemann() -> Operator:
    a1 = [[F(1), F(0)], [F(0), F(1)]]
    a2 = [[F(0), F(-1)], [F(1), F(0)]]
    return Operator(n=2, dim_v=2, dim_w=2, coeffs=(_tup(a1), _tup(a2)), name="cauchy_riemann")


def sym_index(n: int) -> list[tuple[int, int]]:
    """Coordinate order of Sym(n): (0,0), ..., (n-1,n-1), then (a,b) for a < b."""
    return [(a, a) for a in range(n)] + list(combinations(range(n), 2))


def symmetrized_gradient(n: int) -> Operator:
    """``u -> (Du + Du^T)/2`` with W = Sym(n) in coordinates :func:`sym_index`."""
    idx = sym_index(n)
    coeffs = []
    for i in range(n):
        a = _zeros(len(idx), n)
        for row, (p, q) in enumerate(idx):
            # entry pq of (e_i (x) v + v (x) e_i)/2
            for j in range(n):
                val = (F(int(p == i and q == j)) + F(int(q == i and p == j))) / 2
                a[row][j] += val
        coeffs.append(a)
    gram = _zeros(len(idx), len(idx))
    for row, (p, q) in enumerate(idx):
        gram[row][row] = F(1) if p == q else F(2)
    return Operator(n=n, dim_v=n, dim_w=len(idx), coeffs=tuple(map(_tup, coeffs)),
                    name=f"sym_gradient_{n}d", gram=_tup(gram), gram_given=True)


def deviatoric_symmetrized_gradient(n: int) -> Operator:
    """Trace-free part of the symmetrized gradient.

    W = trace-free Sym(n) with coordinates ``S_11, ..., S_(n-1)(n-1)`` and the
    off-diagonal ``S_ab`` (a < b); ``S_nn = -(S_11 + ... + S_(n-1)(n-1))``.
    """
    diag = list(range(n - 1))
    off = list(combinations(range(n), 2))
    m = len(diag) + len(off)
    coeffs = []
    for i in range(n):
        a = _zeros(m, n)
        for row, p in enumerate(diag):
            for j in range(n):
                a[row][j] = F(int(p == i and p == j)) - F(int(j == i), n)
        for k, (p, q) in enumerate(off):
            for j in range(n):
                a[len(diag) + k][j] = (F(int(p == i and q == j)) + F(int(q == i and p == j))) / 2
        coeffs.append(a)
    gram = _zeros(m, m)
    for r in range(len(diag)):
        for c in range(len(diag)):
            gram[r][c] = F(2) if r == c else F(1)
    for k in range(len(off)):
        gram[len(diag) + k][len(diag) + k] = F(2)
    return Operator(n=n, dim_v=n, dim_w=m, coeffs=tuple(map(_tup, coeffs)),
                    name=f"dev_sym_gradient_{n}d", gram=_tup(gram), gram_given=True)


def _tup(a):
    return tuple(tuple(r) for r in a)


@dataclass(frozen=True)
class Expected:
    """Known verdicts for a catalog operator, derived by this toolkit and cross-checked in the literature."""

    r_elliptic: str
    c_elliptic: str
    constant_rank: int | None
    mixing: str
    rank_one: str
    kernel_dims: tuple[int, ...] | None = None
    stabilization_degree: int | None = None
    provenance: str = ""


@dataclass(frozen=True)
class CatalogEntry:
    operator: Operator
    expected: Expected | None = field(default=None)


def _entries() -> list[CatalogEntry]:
    derived = "derived by this toolkit; literature cross-reference"
    return [
        CatalogEntry(gradient(2), Expected("elliptic", "elliptic", 1, "holds", "holds", (1, 1, 1, 1, 1), 0,
                                           derived + ": BV")),
        CatalogEntry(gradient(3), Expected("elliptic", "elliptic", 1, "holds", "holds", (1, 1, 1, 1, 1), 0,
                                           derived + ": BV")),
        CatalogEntry(symmetrized_gradient(2), Expected("elliptic", "elliptic", 2, "holds", "holds",
                                                       (2, 3, 3, 3, 3), 1, derived + ": BD, rigid motions")),
        CatalogEntry(symmetrized_gradient(3), Expected("elliptic", "elliptic", 3, "holds", "holds",
                                                       (3, 6, 6, 6, 6), 1, derived + ": BD, rigid motions")),
        CatalogEntry(divergence(2), Expected("not_elliptic", "not_elliptic", 1, "fails", "fails",
                                             (2, 5, 9, 14, 20), None, derived + ": M < N")),
        CatalogEntry(cauchy_riemann(), Expected("elliptic", "not_elliptic", 2, "fails", "fails",
                                                (2, 4, 6, 8, 10), None, derived + ": holomorphic kernel")),
        CatalogEntry(deviatoric_symmetrized_gradient(2), Expected("elliptic", "not_elliptic", 2, "fails", "fails",
                                                                  (2, 4, 6, 8, 10), None,
                                                                  derived + ": conformal Killing operator in 2D")),
        CatalogEntry(deviatoric_symmetrized_gradient(3), Expected("elliptic", "elliptic", 3, "fails", "fails",
                                                                  (3, 7, 10, 10, 10), 2,
                                                                  derived + ": conformal Killing operator in 3D")),
    ]


CATALOG: dict[str, CatalogEntry] = {e.operator.name: e for e in _entries()}


def get(name: str) -> Operator:
    return CATALOG[name].operator
