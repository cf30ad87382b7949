"""Sparse multivariate polynomials with exact coefficients.

Only what the certificates need: ring operations, partial derivatives,
evaluation and determinants of small polynomial matrices.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .exact import GaussQ, format_gauss, format_rational, parse_gauss, parse_rational


class Poly:
    """Polynomial in ``nvars`` variables stored as ``{exponent tuple: coeff}``."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict | None = None):
        self.nvars = nvars
        self.terms = {e: c for e, c in (terms or {}).items() if c != 0}

    @classmethod
    def constant(cls, nvars: int, c) -> "Poly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def linear(cls, coeffs: Sequence) -> "Poly":
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            if c != 0:
                e = [0] * n
                e[i] = 1
                terms[tuple(e)] = c
        return cls(n, terms)

    @classmethod
    def monomial(cls, exps: Sequence[int], c=Fraction(1)) -> "Poly":
        return cls(len(exps), {tuple(exps): c})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return Poly(self.nvars, out)

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return Poly(self.nvars, {e: c * other for e, c in self.terms.items()})
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def diff(self, i: int) -> "Poly":
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                out[tuple(f)] = c * e[i]
        return Poly(self.nvars, out)

    def __call__(self, point: Sequence):
        total = Fraction(0)
        for e, c in self.terms.items():
            t = c
            for x, k in zip(point, e):
                if k:
                    t = t * x**k
            total = total + t
        return total

    def to_json(self) -> list:
        """Sorted ``[[exponents...], "coeff"]`` pairs; deterministic."""
        fmt = format_gauss if any(isinstance(c, GaussQ) for c in self.terms.values()) else format_rational
        return [[list(e), fmt(c)] for e, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, nvars: int, data) -> "Poly":
        """Inverse of :meth:`to_json`; coefficients may be rational or Gaussian."""
        terms = {}
        for exps, coef in data:
            e = tuple(int(x) for x in exps)
            if len(e) != nvars or any(x < 0 for x in e):
                raise ValueError(f"bad exponent vector {exps!r}")
            if e in terms:
                raise ValueError(f"repeated monomial {exps!r}")
            c = parse_gauss(coef) if "i" in str(coef) else parse_rational(coef)
            terms[e] = c
        return cls(nvars, terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(f"x{i + 1}^{k}" if k > 1 else f"x{i + 1}" for i, k in enumerate(e) if k)
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts)


def monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of total degree ``degree`` in lexicographic order."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], left: int, k: int):
        if k == nvars - 1:
            out.append(tuple(prefix + [left]))
            return
        for a in range(left, -1, -1):
            rec(prefix + [a], left - a, k + 1)

    if nvars == 0:
        return [()] if degree == 0 else []
    rec([], degree, 0)
    return out


def det_poly(m: Sequence[Sequence[Poly]]) -> Poly:
    """Determinant by Laplace expansion along rows, memoized on column subsets."""
    k = len(m)
    if k == 0:
        raise ValueError("empty matrix")
    nvars = m[0][0].nvars
    memo: dict[tuple[int, frozenset], Poly] = {}

    def rec(row: int, cols: frozenset) -> Poly:
        if row == k:
            return Poly.constant(nvars, Fraction(1))
        key = (row, cols)
        if key in memo:
            return memo[key]
        total = Poly(nvars)
        for sign_idx, c in enumerate(sorted(cols)):
            entry = m[row][c]
            if entry.is_zero():
                continue
            sub = rec(row + 1, cols - {c})
            if sub.is_zero():
                continue
            term = entry * sub
            total = total + term if sign_idx % 2 == 0 else total - term
        memo[key] = total
        return total

    return rec(0, frozenset(range(len(m[0]))))


def minors(mat: Sequence[Sequence[Poly]], size: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], Poly]]:
    """All ``size`` x ``size`` minors as ``(rows, cols, polynomial)``."""
    n_rows, n_cols = len(mat), len(mat[0]) if mat else 0
    for rows in combinations(range(n_rows), size):
        for cols in combinations(range(n_cols), size):
            sub = [[mat[r][c] for c in cols] for r in rows]
            yield rows, cols, det_poly(sub)


def linear_form_matrix(coeffs: Iterable[Sequence[Sequence]], nvars: int | None = None) -> list[list[Poly]]:
    """Matrix of linear forms ``sum_i x_i C_i`` from coefficient matrices ``C_i``."""
    cs = list(coeffs)
    n = len(cs) if nvars is None else nvars
    rows, cols = len(cs[0]), len(cs[0][0])
    return [[Poly.linear([cs[i][r][c] for i in range(n)]) for c in range(cols)] for r in range(rows)]
