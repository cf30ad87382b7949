"""First-order constant-coefficient operators ``A = sum_i A_i d_i`` and their symbol calculus.

Coordinates: V = Q^N with the standard inner product; W = Q^M with an inner
product given by a rational Gram matrix (identity unless stated). Covectors
w* in W* are stored as coordinate rows and paired with W by the plain dot
product, so ``<w*, A(xi) v> = w*^T A(xi) v``. The Gram matrix only enters
norms and the identification ``(W_A)* = Gram . W_A``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from . import linalg as la
from .exact import GaussQ, RationalParseError, format_rational, parse_gauss, parse_rational


class OperatorError(ValueError):
    """Invalid operator data. ``code`` distinguishes schema, literal and dimension problems."""

    def __init__(self, message: str, code: str = "schema"):
        super().__init__(message)
        self.code = code


def _frac_vector(values, length: int | None = None, what: str = "vector") -> tuple[Fraction, ...]:
    try:
        out = tuple(parse_rational(v) if isinstance(v, str) else Fraction(v) for v in values)
    except (TypeError, RationalParseError) as exc:
        raise OperatorError(f"{what}: {exc}", code="rational") from exc
    if length is not None and len(out) != length:
        raise OperatorError(f"{what} has length {len(out)}, expected {length}", code="dimension")
    return out


@dataclass(frozen=True)
class SubspaceBasis:
    """Exact basis of a subspace of Q^ambient (or Q(i)^ambient)."""

    ambient: int
    vectors: tuple[tuple, ...]

    def __post_init__(self):
        vecs = tuple(tuple(v) for v in self.vectors)
        object.__setattr__(self, "vectors", vecs)
        for v in vecs:
            if len(v) != self.ambient:
                raise ValueError(f"basis vector of length {len(v)} in ambient dimension {self.ambient}")
        if vecs and la.rank([list(v) for v in vecs]) != len(vecs):
            raise ValueError("basis vectors are linearly dependent")

    @classmethod
    def spanned_by(cls, ambient: int, vectors: Sequence[Sequence]) -> "SubspaceBasis":
        return cls(ambient, tuple(tuple(v) for v in la.row_space_basis(vectors)))

    @classmethod
    def full(cls, ambient: int) -> "SubspaceBasis":
        return cls(ambient, tuple(tuple(r) for r in la.identity(ambient)))

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def contains(self, v: Sequence) -> bool:
        return la.in_span(list(v), [list(b) for b in self.vectors])

    def as_columns(self) -> list[list]:
        """Ambient x dim matrix whose columns are the basis vectors."""
        return la.transpose([list(b) for b in self.vectors]) if self.vectors else [[] for _ in range(self.ambient)]

    def to_json(self) -> list:
        return [[format_rational(x) for x in v] for v in self.vectors]


@dataclass(frozen=True)
class SymbolMatrix:
    """``A(xi) = sum_i xi_i A_i`` evaluated exactly at ``at``."""

    entries: tuple[tuple, ...]
    at: tuple

    def as_list(self) -> list[list]:
        return [list(r) for r in self.entries]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0]) if self.entries else 0

    def apply(self, v: Sequence) -> list:
        return la.matvec(self.as_list(), list(v))

    def rank(self) -> int:
        return la.rank(self.as_list())


@dataclass(frozen=True, eq=False)
class Operator:
    """Validated, immutable first-order operator with exact rational coefficients.

    ``coeffs[i]`` is the M x N matrix of A_i (rows index W, columns index V).
    """

    n: int
    dim_v: int
    dim_w: int
    coeffs: tuple
    name: str = ""
    gram: tuple | None = None
    gram_given: bool = field(default=False)

    def __post_init__(self):
        if not (isinstance(self.n, int) and isinstance(self.dim_v, int) and isinstance(self.dim_w, int)):
            raise OperatorError("n, dimV, dimW must be integers", code="schema")
        if self.n < 1 or self.dim_v < 1 or self.dim_w < 1:
            raise OperatorError("n, dimV, dimW must be >= 1", code="dimension")
        if len(self.coeffs) != self.n:
            raise OperatorError(f"expected {self.n} coefficient matrices, got {len(self.coeffs)}", code="dimension")
        mats = []
        for i, a in enumerate(self.coeffs):
            if len(a) != self.dim_w:
                raise OperatorError(f"A_{i + 1} has {len(a)} rows, expected dimW={self.dim_w}", code="dimension")
            mats.append(tuple(_frac_vector(row, self.dim_v, f"A_{i + 1} row") for row in a))
        object.__setattr__(self, "coeffs", tuple(mats))
        if all(x == 0 for a in mats for row in a for x in row):
            raise OperatorError("the zero operator is not allowed", code="zero_operator")
        if self.gram is None:
            object.__setattr__(self, "gram", tuple(tuple(r) for r in la.identity(self.dim_w)))
        else:
            if len(self.gram) != self.dim_w:
                raise OperatorError("gram must be dimW x dimW", code="dimension")
            g = tuple(_frac_vector(row, self.dim_w, "gram row") for row in self.gram)
            if not la.is_positive_definite([list(r) for r in g]):
                raise OperatorError("gram must be symmetric positive definite", code="gram")
            object.__setattr__(self, "gram", g)
        # populate the W_A cache once, here, so shared instances are never mutated later
        _ = self.wa, self.wa_dual

    # -- identity -------------------------------------------------------------

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "n": self.n,
            "dimV": self.dim_v,
            "dimW": self.dim_w,
            "coeffs": [[[format_rational(x) for x in row] for row in a] for a in self.coeffs],
        }
        if self.gram_given:
            out["gram"] = [[format_rational(x) for x in row] for row in self.gram]
        return out

    @classmethod
    def from_json(cls, data) -> "Operator":
        if not isinstance(data, dict):
            raise OperatorError("operator JSON must be an object", code="schema")
        missing = [k for k in ("n", "dimV", "dimW", "coeffs") if k not in data]
        if missing:
            raise OperatorError(f"missing keys: {missing}", code="schema")
        coeffs = data["coeffs"]
        if not isinstance(coeffs, list) or not all(isinstance(a, list) for a in coeffs):
            raise OperatorError("coeffs must be a list of matrices", code="schema")
        for a in coeffs:
            if not all(isinstance(row, list) for row in a):
                raise OperatorError("each coefficient matrix must be a list of rows", code="schema")
            for row in a:
                for x in row:
                    if not isinstance(x, (str, int)) or isinstance(x, bool):
                        raise OperatorError(f"entry {x!r} is not a rational literal", code="rational")
        gram = data.get("gram")
        if gram is not None and (not isinstance(gram, list) or not all(isinstance(r, list) for r in gram)):
            raise OperatorError("gram must be a matrix", code="schema")
        return cls(
            n=data["n"],
            dim_v=data["dimV"],
            dim_w=data["dimW"],
            coeffs=tuple(tuple(tuple(row) for row in a) for a in coeffs),
            name=str(data.get("name", "")),
            gram=None if gram is None else tuple(tuple(r) for r in gram),
            gram_given=gram is not None,
        )

    @cached_property
    def digest(self) -> str:
        """sha256 of the canonical JSON form (name included)."""
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return (self.n, self.dim_v, self.dim_w, self.coeffs, self.gram, self.name) == (
            other.n, other.dim_v, other.dim_w, other.coeffs, other.gram, other.name)

    def __hash__(self):
        return hash((self.n, self.dim_v, self.dim_w, self.coeffs, self.gram, self.name))

    def __repr__(self):
        return f"Operator({self.name or '?'}: n={self.n}, N={self.dim_v}, M={self.dim_w})"

    # -- cached derived data ----------------------------------------------------

    @cached_property
    def gram_list(self) -> list[list[Fraction]]:
        return [list(r) for r in self.gram]

    @cached_property
    def gram_inverse(self) -> list[list[Fraction]]:
        return la.inverse(self.gram_list)

    @cached_property
    def wa(self) -> SubspaceBasis:
        return wa_space(self)

    @cached_property
    def wa_dual(self) -> SubspaceBasis:
        return wa_dual_space(self)

    @cached_property
    def float_coeffs(self) -> np.ndarray:
        """(n, M, N) float array of the A_i."""
        return np.array([[[float(x) for x in row] for row in a] for a in self.coeffs], dtype=float)

    @cached_property
    def gram_factor(self) -> np.ndarray:
        """Upper-triangular R with Gram = R^T R, so |w|_Gram = |R w|."""
        g = np.array([[float(x) for x in r] for r in self.gram], dtype=float)
        return np.linalg.cholesky(g).T

    @cached_property
    def normalized_coeffs(self) -> np.ndarray:
        """A_i expressed in a Gram-orthonormal frame of W (float)."""
        return np.einsum("ab,ibn->ian", self.gram_factor, self.float_coeffs)


# -- symbol evaluation ----------------------------------------------------------


def _check_len(vec, n: int, what: str):
    if len(vec) != n:
        raise OperatorError(f"{what} has length {len(vec)}, expected {n}", code="dimension")


def eval_symbol(op: Operator, xi: Sequence) -> SymbolMatrix:
    """Exact ``sum_i xi_i A_i`` for a rational direction ``xi``."""
    _check_len(xi, op.n, "xi")
    x = _frac_vector(xi, op.n, "xi")
    out = [[Fraction(0)] * op.dim_v for _ in range(op.dim_w)]
    for xi_i, a in zip(x, op.coeffs):
        if xi_i == 0:
            continue
        for r in range(op.dim_w):
            row = out[r]
            arow = a[r]
            for c in range(op.dim_v):
                if arow[c]:
                    row[c] += xi_i * arow[c]
    return SymbolMatrix(tuple(tuple(r) for r in out), x)


def eval_symbol_complex(op: Operator, xi: Sequence) -> SymbolMatrix:
    """Exact symbol at a Gaussian-rational direction; entries are :class:`GaussQ`."""
    _check_len(xi, op.n, "xi")
    z = tuple(parse_gauss(v) if isinstance(v, str) else GaussQ.coerce(v) for v in xi)
    out = [[GaussQ(0)] * op.dim_v for _ in range(op.dim_w)]
    for z_i, a in zip(z, op.coeffs):
        if not z_i:
            continue
        for r in range(op.dim_w):
            for c in range(op.dim_v):
                if a[r][c]:
                    out[r][c] = out[r][c] + z_i * a[r][c]
    return SymbolMatrix(tuple(tuple(r) for r in out), z)


def pullback_tensor(op: Operator, w_star: Sequence) -> list[list[Fraction]]:
    """n x N matrix ``G[i][j] = <w*, A_i e_j>``; ``g_A(w*)`` as a tensor in R^n (x) V*."""
    _check_len(w_star, op.dim_w, "w*")
    w = _frac_vector(w_star, op.dim_w, "w*")
    return [[la.dot(w, [a[r][j] for r in range(op.dim_w)]) for j in range(op.dim_v)] for a in op.coeffs]


def pullback_matrix(op: Operator) -> list[list[Fraction]]:
    """(n*N) x M matrix of the linear map w* -> vec(g_A(w*)), row index i*N + j."""
    return [[op.coeffs[i][r][j] for r in range(op.dim_w)] for i in range(op.n) for j in range(op.dim_v)]


def wa_space(op: Operator) -> SubspaceBasis:
    """Exact basis of ``W_A``.

    ``A(e_i) = A_i`` and every ``A(xi)`` is a combination of the A_i, so W_A is
    the column span of the block matrix ``[A_1 | ... | A_n]``.
    """
    cols = [[a[r][j] for r in range(op.dim_w)] for a in op.coeffs for j in range(op.dim_v)]
    return SubspaceBasis.spanned_by(op.dim_w, cols)


def wa_dual_space(op: Operator) -> SubspaceBasis:
    """``(W_A)*`` realized inside W* as ``Gram . W_A``."""
    vecs = [la.matvec(op.gram_list, list(b)) for b in op.wa.vectors]
    return SubspaceBasis.spanned_by(op.dim_w, vecs)


def dual_norm(op: Operator, w_star: Sequence) -> float:
    """Norm of a covector dual to the Gram norm on W: ``sqrt(w*^T Gram^{-1} w*)``."""
    w = [Fraction(x) for x in w_star]
    q = la.dot(w, la.matvec(op.gram_inverse, w))
    return float(q) ** 0.5


def gram_norm(op: Operator, w: Sequence[float]) -> float:
    return float(np.linalg.norm(op.gram_factor @ np.asarray(w, dtype=float)))


def restrict_operator(op: Operator, plane: SubspaceBasis, vsub: SubspaceBasis, name: str | None = None) -> Operator:
    """Operator with symbol ``A(xi) v`` for xi in span(plane), v in span(vsub), in those bases.

    Coefficients are ``B_k = A(p_k) . iota_vsub``; the codomain W and its Gram
    matrix are kept.
    """
    if plane.ambient != op.n or plane.dim != 2:
        raise OperatorError("plane must be two independent vectors of R^n", code="dimension")
    if vsub.ambient != op.dim_v or vsub.dim == 0:
        raise OperatorError("vsub must be a nonempty subspace of V", code="dimension")
    iota = vsub.as_columns()
    coeffs = []
    for p in plane.vectors:
        sym = eval_symbol(op, p).as_list()
        coeffs.append(tuple(tuple(r) for r in la.matmul(sym, iota)))
    return Operator(
        n=2,
        dim_v=vsub.dim,
        dim_w=op.dim_w,
        coeffs=tuple(coeffs),
        name=name if name is not None else f"{op.name}|restricted",
        gram=op.gram,
        gram_given=op.gram_given,
    )


def load_operator(path) -> Operator:
    from pathlib import Path

    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise OperatorError(f"{path}: invalid JSON ({exc})", code="schema") from exc
    return Operator.from_json(data)


def save_operator(op: Operator, path) -> None:
    from pathlib import Path

    Path(path).write_text(json.dumps(op.to_json(), indent=2) + "\n")
