"""Dense exact linear algebra over Q or Q(i).

Matrices are lists of rows; vectors are lists. Entries may be ``Fraction``
or :class:`~bvacert.exact.GaussQ`; the routines only use field operations
and ``== 0``, so both work unchanged.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = list  # list[list[scalar]]

ZERO = Fraction(0)
ONE = Fraction(1)


def zeros(rows: int, cols: int) -> Matrix:
    return [[ZERO] * cols for _ in range(rows)]


def identity(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def transpose(a: Matrix) -> Matrix:
    if not a:
        return []
    return [list(col) for col in zip(*a)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return [[_dot(row, col) for col in bt] for row in a]


def matvec(a: Matrix, x: Sequence) -> list:
    return [_dot(row, x) for row in a]


def _dot(x: Sequence, y: Sequence):
    s = ZERO
    for xi, yi in zip(x, y):
        if xi and yi:
            s = s + xi * yi
    return s


dot = _dot


def add(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def scale(c, a: Matrix) -> Matrix:
    return [[c * x for x in row] for row in a]


def is_zero_matrix(a: Matrix) -> bool:
    return all(x == 0 for row in a for x in row)


def outer(x: Sequence, y: Sequence) -> Matrix:
    return [[xi * yj for yj in y] for xi in x]


def rref(a: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns. The input is not modified."""
    m = [list(row) for row in a]
    if not m:
        return m, []
    n_rows, n_cols = len(m), len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        piv = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        if p != 1:
            m[r] = [x / p for x in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                row_r = m[r]
                m[i] = [x - f * y if y else x for x, y in zip(m[i], row_r)]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: Matrix) -> int:
    if not a or not a[0]:
        return 0
    return len(rref(a)[1])


def nullspace(a: Matrix, n_cols: int | None = None) -> list[list]:
    """Basis of ``{x : a x = 0}``; each basis vector has a 1 at its free column."""
    if not a:
        if n_cols is None:
            raise ValueError("n_cols needed for an empty matrix")
        return [[ONE if i == j else ZERO for i in range(n_cols)] for j in range(n_cols)]
    n = len(a[0])
    r, pivots = rref(a)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        x = [ZERO] * n
        x[f] = ONE
        for row_idx, pc in enumerate(pivots):
            x[pc] = -r[row_idx][f]
        basis.append(x)
    return basis


def row_space_basis(vectors: Sequence[Sequence]) -> list[list]:
    """Canonical (RREF) basis of the span of ``vectors``."""
    vecs = [list(v) for v in vectors]
    if not vecs:
        return []
    r, pivots = rref(vecs)
    return [r[i] for i in range(len(pivots))]


def span_dim(vectors: Sequence[Sequence]) -> int:
    vecs = [list(v) for v in vectors]
    return rank(vecs) if vecs else 0


def in_span(v: Sequence, basis: Sequence[Sequence]) -> bool:
    if not basis:
        return all(x == 0 for x in v)
    return rank([list(b) for b in basis] + [list(v)]) == rank([list(b) for b in basis])


def solve(a: Matrix, b: Sequence) -> list | None:
    """One solution of ``a x = b`` (free variables set to 0), or None."""
    if not a:
        return None if any(x != 0 for x in b) else []
    n = len(a[0])
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    r, pivots = rref(aug)
    if n in pivots:
        return None
    x = [ZERO] * n
    for row_idx, pc in enumerate(pivots):
        x[pc] = r[row_idx][n]
    return x


def annihilator(basis: Sequence[Sequence], dim: int) -> list[list]:
    """Basis of ``{y : <y, u> = 0 for all u in basis}`` (plain bilinear pairing)."""
    if not basis:
        return [[ONE if i == j else ZERO for i in range(dim)] for j in range(dim)]
    return nullspace([list(u) for u in basis])


def intersect(bases: Sequence[Sequence[Sequence]], dim: int) -> list[list]:
    """Basis of the intersection of the spans of several bases."""
    ann: list[list] = []
    for b in bases:
        ann.extend(annihilator(b, dim))
    if not ann:
        return [[ONE if i == j else ZERO for i in range(dim)] for j in range(dim)]
    return row_space_basis(nullspace(ann))


def coordinates(v: Sequence, basis: Sequence[Sequence]) -> list | None:
    """Coefficients c with ``sum c_k basis[k] = v``, or None if v is not in the span."""
    if not basis:
        return [] if all(x == 0 for x in v) else None
    a = transpose([list(b) for b in basis])
    return solve(a, list(v))


def det(a: Matrix):
    """Determinant by Gaussian elimination over the exact field."""
    m = [list(row) for row in a]
    n = len(m)
    d = ONE
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return ZERO
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            d = -d
        p = m[c][c]
        d = d * p
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] / p
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return d


def is_positive_definite(a: Matrix) -> bool:
    """Exact test via leading principal minors (symmetric rational input)."""
    n = len(a)
    if any(a[i][j] != a[j][i] for i in range(n) for j in range(n)):
        return False
    return all(det([row[:k] for row in a[:k]]) > 0 for k in range(1, n + 1))


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(a)]
    r, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in r[:n]]


def to_float(a: Matrix):
    import numpy as np

    return np.array([[float(x) for x in row] for row in a], dtype=float)


def to_complex(a: Matrix):
    import numpy as np

    return np.array([[complex(x) for x in row] for row in a], dtype=complex)
