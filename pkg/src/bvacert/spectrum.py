"""Rank-one vectors, directional spectrum, the mixing condition and polarization.

Conventions: a covector w* is a coordinate row paired with W by the plain dot
product, ``g_A(w*)`` is the n x N matrix ``<w*, A_i e_j>``, and (W_A)* is
realized as ``Gram . W_A``. All computations here are exact.

For a hyperplane with normal xi, let ``S_xi = span{A(eta) v : eta . xi = 0}``.
A covector w* in (W_A)* annihilates S_xi exactly when ``g_A(w*) = xi (x) v*``
for some v*, so the rank-one vectors with direction xi are the annihilator
of S_xi inside (W_A)*. Sweeping the same normals therefore certifies mixing
and the rank-one property from two independent exact computations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from typing import Sequence

import numpy as np

from . import bnb
from . import linalg as la
from .exact import format_rational, parse_rational
from .poly import Poly, minors
from .symbol import Operator, OperatorError, SubspaceBasis, eval_symbol, pullback_matrix, pullback_tensor

F = Fraction


class PreconditionError(ValueError):
    """The operation's hypotheses are not met by the operator or inputs."""


class PolarizationError(ValueError):
    """No admissible gamma; carries the solvability data."""

    def __init__(self, message: str, rows: list | None = None):
        super().__init__(message)
        self.rows = rows or []


def _fr(v: Sequence) -> list[Fraction]:
    return [parse_rational(x) if isinstance(x, str) else F(x) for x in v]


def _fmt(v: Sequence) -> list[str]:
    return [format_rational(x) for x in v]


# -- triples -----------------------------------------------------------------------


def _fmt_mat(m) -> str:
    return "[" + ", ".join("[" + ", ".join(format_rational(x) for x in row) + "]" for row in m) + "]"


@dataclass(frozen=True)
class RankOneTriple:
    """``g_A(w*) = xi (x) v*`` with w* in (W_A)*."""

    w_star: tuple[Fraction, ...]
    xi: tuple[Fraction, ...]
    v_star: tuple[Fraction, ...]

    def __post_init__(self):
        for name in ("w_star", "xi", "v_star"):
            object.__setattr__(self, name, tuple(_fr(getattr(self, name))))

    def identity_holds(self, op: Operator) -> bool:
        return pullback_tensor(op, self.w_star) == la.outer(self.xi, self.v_star)

    def failures(self, op: Operator) -> list[str]:
        """Human-readable list of violated exact conditions (empty when valid)."""
        out = []
        if (len(self.w_star), len(self.xi), len(self.v_star)) != (op.dim_w, op.n, op.dim_v):
            return ["triple dimensions do not match the operator"]
        if not self.identity_holds(op):
            out.append(f"g_A(w*) = {_fmt_mat(pullback_tensor(op, self.w_star))} != xi (x) v* = "
                       f"{_fmt_mat(la.outer(self.xi, self.v_star))}")
        if not op.wa_dual.contains(self.w_star):
            out.append("w* is not in (W_A)*")
        if all(x == 0 for x in self.w_star):
            out.append("w* is zero")
        return out

    def verify(self, op: Operator) -> bool:
        return not self.failures(op)

    def scaled(self, c) -> "RankOneTriple":
        c = F(c)
        return RankOneTriple(tuple(c * x for x in self.w_star), self.xi, tuple(c * x for x in self.v_star))

    def to_json(self) -> dict:
        return {"w_star": _fmt(self.w_star), "xi": _fmt(self.xi), "v_star": _fmt(self.v_star)}

    @classmethod
    def from_json(cls, d: dict) -> "RankOneTriple":
        return cls(tuple(d["w_star"]), tuple(d["xi"]), tuple(d["v_star"]))


@dataclass(frozen=True)
class Factorization:
    """``g_A(w*) = xi (x) v*``; ``zero`` flags ``g_A(w*) = 0``."""

    xi: tuple[Fraction, ...]
    v_star: tuple[Fraction, ...]
    zero: bool = False


def is_rank_one_vector(op: Operator, w_star: Sequence) -> Factorization | None:
    """Factor ``g_A(w*)`` as ``xi (x) v*`` with the first nonzero entry of xi equal to 1."""
    g = pullback_tensor(op, w_star)
    if la.is_zero_matrix(g):
        return Factorization((), (), zero=True)
    if la.rank(g) != 1:
        return None
    j0 = next(j for j in range(op.dim_v) if any(g[i][j] != 0 for i in range(op.n)))
    i0 = next(i for i in range(op.n) if g[i][j0] != 0)
    xi = tuple(g[i][j0] / g[i0][j0] for i in range(op.n))
    v_star = tuple(g[i0])
    return Factorization(xi, v_star)


def _dual_basis_matrix(op: Operator) -> list[list[Fraction]]:
    """Columns: basis of (W_A)*."""
    return op.wa_dual.as_columns()


def _combine(op: Operator, coeffs: Sequence[Fraction]) -> list[Fraction]:
    basis = op.wa_dual.vectors
    w = [F(0)] * op.dim_w
    for c, b in zip(coeffs, basis):
        if c:
            w = [x + c * y for x, y in zip(w, b)]
    return w


def _transposes(op: Operator) -> list[list[list[Fraction]]]:
    return [la.transpose([list(r) for r in a]) for a in op.coeffs]


def rank_one_from_v(op: Operator, v_star: Sequence) -> list[RankOneTriple]:
    """Rank-one vectors whose V*-factor is ``v*``: a basis of the solution space.

    Unknown ``w* = sum c_k b_k`` over a basis of (W_A)*; conditions
    ``z . A_i^T w* = 0`` for z spanning the orthogonal complement of v*.
    """
    v = _fr(v_star)
    if len(v) != op.dim_v:
        raise OperatorError("v* has the wrong length", code="dimension")
    if all(x == 0 for x in v):
        raise ValueError("v* must be nonzero")
    basis = op.wa_dual.vectors
    zs = la.nullspace([v])
    ats = _transposes(op)
    rows = []
    for at in ats:
        for z in zs:
            # z^T A_i^T b_k for each basis covector b_k
            rows.append([la.dot(z, la.matvec(at, list(b))) for b in basis])
    sols = la.row_space_basis(la.nullspace(rows, n_cols=len(basis))) if rows else la.identity(len(basis))
    vv = la.dot(v, v)
    out = []
    for c in sols:
        w = _combine(op, c)
        xi = [la.dot(la.matvec(at, w), v) / vv for at in ats]
        if all(x == 0 for x in xi):
            continue
        p = next(x for x in xi if x != 0)
        triple = RankOneTriple(tuple(x / p for x in w), tuple(x / p for x in xi), tuple(v))
        if not triple.verify(op):
            raise AssertionError("rank_one_from_v produced an invalid triple")
        out.append(triple)
    return out


def rank_one_from_xi(op: Operator, xi: Sequence) -> list[RankOneTriple]:
    """Rank-one vectors with direction ``xi``: ``xi_j A_i^T w* = xi_i A_j^T w*``."""
    x = _fr(xi)
    if len(x) != op.n:
        raise OperatorError("xi has the wrong length", code="dimension")
    if all(t == 0 for t in x):
        raise ValueError("xi must be nonzero")
    p = next(i for i, t in enumerate(x) if t != 0)
    xn = [t / x[p] for t in x]
    basis = op.wa_dual.vectors
    ats = _transposes(op)
    images = [[la.matvec(at, list(b)) for b in basis] for at in ats]  # images[i][k] = A_i^T b_k
    rows = []
    for i in range(op.n):
        if i == p:
            continue
        for j in range(op.dim_v):
            rows.append([xn[p] * images[i][k][j] - xn[i] * images[p][k][j] for k in range(len(basis))])
    sols = la.row_space_basis(la.nullspace(rows, n_cols=len(basis))) if rows else la.identity(len(basis))
    out = []
    for c in sols:
        w = _combine(op, c)
        v = la.matvec(ats[p], w)
        if all(t == 0 for t in v):
            continue
        triple = RankOneTriple(tuple(w), tuple(xn), tuple(v))
        if not triple.verify(op):
            raise AssertionError("rank_one_from_xi produced an invalid triple")
        out.append(triple)
    return out


def g_injectivity_kernel(op: Operator) -> list[list[Fraction]]:
    """Kernel of ``w* -> g_A(w*)`` restricted to (W_A)* (expected: empty)."""
    pm = pullback_matrix(op)
    cols = [la.matvec(pm, list(b)) for b in op.wa_dual.vectors]
    mat = la.transpose(cols)
    return [_combine(op, c) for c in la.nullspace(mat, n_cols=len(cols))]


# -- candidate sets ----------------------------------------------------------------


def xi_candidates(n: int, seed: int = 0, budget: int | None = None) -> list[list[Fraction]]:
    """Coordinate directions, sign vectors (first entry +1), then pseudorandom rationals."""
    budget = n * n + 50 if budget is None else budget
    out: list[list[Fraction]] = [[F(int(i == j)) for j in range(n)] for i in range(n)]
    for signs in product((1, -1), repeat=n - 1):
        out.append([F(1)] + [F(s) for s in signs])
    rng = random.Random(seed)
    while len(out) < budget:
        out.append([F(rng.randint(-9, 9), rng.randint(1, 7)) for _ in range(n)])
    seen, uniq = set(), []
    for v in out:
        if all(t == 0 for t in v):
            continue
        key = tuple(v)
        if key not in seen:
            seen.add(key)
            uniq.append(v)
    return uniq[:budget]


def v_candidates(N: int, seed: int = 1, budget: int | None = None) -> list[list[Fraction]]:
    """Basis vectors, pairwise sums and differences, then pseudorandom rationals."""
    budget = N * N + 50 if budget is None else budget
    e = [[F(int(i == j)) for j in range(N)] for i in range(N)]
    out = list(e)
    for a, b in combinations(range(N), 2):
        out.append([x + y for x, y in zip(e[a], e[b])])
        out.append([x - y for x, y in zip(e[a], e[b])])
    rng = random.Random(seed)
    while len(out) < budget:
        v = [F(rng.randint(-9, 9), rng.randint(1, 7)) for _ in range(N)]
        if any(v):
            out.append(v)
    return out[:budget]


# -- mixing ------------------------------------------------------------------------


def hyperplane_image(op: Operator, xi: Sequence) -> SubspaceBasis:
    """``S_xi = span{A(eta) v : eta in xi^perp, v in V}`` with a rational basis of xi^perp."""
    etas = la.nullspace([_fr(xi)])
    cols = []
    for eta in etas:
        sym = eval_symbol(op, eta).as_list()
        cols.extend([[sym[r][j] for r in range(op.dim_w)] for j in range(op.dim_v)])
    return SubspaceBasis.spanned_by(op.dim_w, cols)


def pencil_coefficients(op: Operator) -> list[list[list[Fraction]]]:
    """Coefficients ``C_k`` of ``B(nu) = sum_k nu_k C_k``.

    Columns of B(nu) are ``A(eta_ab) e_j`` with ``eta_ab = nu_b e_a - nu_a e_b``
    (a < b), which span nu^perp for every nonzero nu.
    """
    n, N, M = op.n, op.dim_v, op.dim_w
    pairs = list(combinations(range(n), 2))
    mats = [la.zeros(M, len(pairs) * N) for _ in range(n)]
    for p, (a, b) in enumerate(pairs):
        for j in range(N):
            col = p * N + j
            for r in range(M):
                mats[b][r][col] += op.coeffs[a][r][j]
                mats[a][r][col] -= op.coeffs[b][r][j]
    return mats


def _pencil_poly(op: Operator, extra: Sequence[Fraction] | None = None) -> list[list[Poly]]:
    mats = pencil_coefficients(op)
    M = op.dim_w
    cols = len(mats[0][0]) if mats and mats[0] else 0
    out = [[Poly.linear([mats[k][r][c] for k in range(op.n)]) for c in range(cols)] for r in range(M)]
    if extra is not None:
        for r in range(M):
            out[r].append(Poly.constant(op.n, F(extra[r])))
    return out


@dataclass
class MixingCertificate:
    verdict: str  # holds | fails | indeterminate
    certified: bool
    normals: list[list[Fraction]]
    s_bases: list[list[list[Fraction]]]
    intersection: list[list[Fraction]]
    candidates_tried: int
    sampled_dims: list[int] = field(default_factory=list)
    survivor: list[Fraction] | None = None
    symbolic: dict | None = None

    def to_json(self) -> dict:
        return {
            "type": "mixing",
            "verdict": self.verdict,
            "certified": self.certified,
            "normals": [_fmt(v) for v in self.normals],
            "s_bases": [[_fmt(v) for v in b] for b in self.s_bases],
            "intersection": [_fmt(v) for v in self.intersection],
            "candidates_tried": self.candidates_tried,
            "sampled_dims": self.sampled_dims,
            "survivor": None if self.survivor is None else _fmt(self.survivor),
            "symbolic": self.symbolic,
        }


def _first_nonzero_minor(mat: list[list[Poly]], size: int):
    if size > len(mat) or (mat and size > len(mat[0])):
        return None, 0
    count = 0
    for _, _, p in minors(mat, size):
        count += 1
        if not p.is_zero():
            return p, count
    return None, count


def _point_avoiding(poly: Poly, n: int, seed: int) -> list[Fraction]:
    rng = random.Random(seed)
    for _ in range(1000):
        pt = [F(rng.randint(-20, 20), rng.randint(1, 11)) for _ in range(n)]
        if any(pt) and poly(pt) != 0:
            return pt
    raise RuntimeError("could not find a point off a nonzero polynomial")


def check_mixing(op: Operator, seed: int = 0, *, tol: float = 1e-8, budget: int = 10**6,
                 extra_rounds: int = 20) -> MixingCertificate:
    """Exact intersection of S_xi over a structured family of hyperplane normals."""
    cands = xi_candidates(op.n, seed)
    running = [list(b) for b in op.wa.vectors]
    normals: list[list[Fraction]] = []
    s_bases: list[list[list[Fraction]]] = []
    dims: list[int] = []

    def absorb(xi):
        nonlocal running
        s = hyperplane_image(op, xi)
        dims.append(s.dim)
        new = la.intersect([running, [list(v) for v in s.vectors]], op.dim_w) if running else []
        if len(new) < len(running):
            normals.append(list(xi))
            s_bases.append([list(v) for v in s.vectors])
            running = new

    tried = 0
    for xi in cands:
        tried += 1
        absorb(xi)
        if not running:
            return MixingCertificate("holds", True, normals, s_bases, [], tried, dims)

    # symbolic upgrade: does the survivor lie in S_nu for every nonzero nu?
    for rnd in range(extra_rounds + 1):
        w = running[0]
        if len(set(dims)) != 1:
            return MixingCertificate("indeterminate", False, normals, s_bases, running, tried, dims, w,
                                     {"reason": "dim S_nu varies across samples"})
        s = dims[0]
        bad, count = _first_nonzero_minor(_pencil_poly(op, w), s + 1)
        if bad is None:
            break
        if rnd == extra_rounds:
            return MixingCertificate("indeterminate", False, normals, s_bases, running, tried, dims, w,
                                     {"reason": "augmented minor nonzero; extra rounds exhausted"})
        # a point where the minor is nonzero separates w from S_nu: use it as a new normal
        tried += 1
        absorb(_point_avoiding(bad, op.n, seed + rnd))
        if not running:
            return MixingCertificate("holds", True, normals, s_bases, [], tried, dims)

    mats = pencil_coefficients(op)
    fl = np.array([[[float(x) for x in row] for row in m] for m in mats])
    fl = np.einsum("ab,kbc->kac", op.gram_factor, fl)
    problem = bnb.SphereProblem.real_sphere(fl, s)
    res = bnb.search(problem, tol, budget)
    symbolic = {
        "s": s,
        "augmented_minor_size": s + 1,
        "augmented_minors_checked": count,
        "augmented_minors_vanish": True,
        "lower_part": {"k": s, "tol": tol, "budget": budget, "nodes": res.nodes,
                       "lower_bound": res.lower_bound, "lipschitz": problem.lipschitz,
                       "trace": bnb.encode_trace(problem, res.leaves) if res.status == "positive" else None},
    }
    certified = res.status == "positive"
    return MixingCertificate("fails", certified, normals, s_bases, running, tried, dims, running[0], symbolic)


# -- rank-one property -------------------------------------------------------------


@dataclass
class SpectrumSpan:
    triples: list[RankOneTriple]
    span_dim: int
    target_dim: int

    @property
    def complete(self) -> bool:
        return self.span_dim == self.target_dim

    def to_json(self) -> dict:
        return {"type": "spectrum_span", "triples": [t.to_json() for t in self.triples],
                "span_dim": self.span_dim, "target_dim": self.target_dim, "complete": self.complete}


@dataclass
class RankOneResult:
    span: SpectrumSpan
    mixing: MixingCertificate
    consistent: bool

    @property
    def verdict(self) -> str:
        if self.span.complete:
            return "holds"
        if self.mixing.verdict == "fails":
            return "fails"
        return "indeterminate"

    @property
    def certified(self) -> bool:
        """A complete span is a positive certificate; a negative needs certified mixing failure."""
        return self.span.complete or (self.mixing.verdict == "fails" and self.mixing.certified)

    def __iter__(self):
        return iter((self.span, self.mixing, self.consistent))


def spectrum_span(op: Operator, seed: int = 0) -> SpectrumSpan:
    """Sweep rank_one_from_xi then rank_one_from_v; keep triples that enlarge the span."""
    target = op.wa_dual.dim
    kept: list[RankOneTriple] = []
    span: list[list[Fraction]] = []

    def feed(triples):
        nonlocal span
        for t in triples:
            if len(span) == target:
                return
            if not la.in_span(list(t.w_star), span):
                kept.append(t)
                span = la.row_space_basis(span + [list(t.w_star)])

    for xi in xi_candidates(op.n, seed):
        feed(rank_one_from_xi(op, xi))
        if len(span) == target:
            break
    if len(span) < target:
        for v in v_candidates(op.dim_v, seed + 1):
            feed(rank_one_from_v(op, v))
            if len(span) == target:
                break
    return SpectrumSpan(kept, len(span), target)


def check_rank_one_property(op: Operator, seed: int = 0, *, tol: float = 1e-8,
                            budget: int = 10**6) -> RankOneResult:
    """Spectrum span plus mixing; ``consistent`` compares both when determinate."""
    span = spectrum_span(op, seed)
    mixing = check_mixing(op, seed, tol=tol, budget=budget)
    consistent = True
    if mixing.verdict == "holds" and not span.complete:
        consistent = False
    if mixing.verdict == "fails" and span.complete:
        consistent = False
    return RankOneResult(span, mixing, consistent)


@lru_cache(maxsize=64)
def _rank_one_cached(op: Operator) -> RankOneResult:
    return check_rank_one_property(op)


# -- polarization ------------------------------------------------------------------


@dataclass
class PolarizationWitness:
    gamma: Fraction
    w0: tuple[Fraction, ...]
    w1: tuple[Fraction, ...]
    w2: tuple[Fraction, ...]
    pair1: tuple[tuple[Fraction, ...], tuple[Fraction, ...]]
    pair2: tuple[tuple[Fraction, ...], tuple[Fraction, ...]]
    degenerate: bool = False

    def failures(self, op: Operator) -> list[str]:
        (xi, e), (eta, f) = self.pair1, self.pair2
        g = self.gamma
        gf = [g * x for x in f]
        want0 = la.outer(xi, e)
        want1 = la.add(la.outer(xi, gf), la.outer(eta, e))
        want2 = la.outer(eta, gf)
        out = []
        if g == 0:
            out.append("gamma is zero")
        for k, (w, want) in enumerate(((self.w0, want0), (self.w1, want1), (self.w2, want2))):
            got = pullback_tensor(op, w)
            if got != want:
                out.append(f"lambda^{k}: g_A(w{k}) = {_fmt_mat(got)} != {_fmt_mat(want)}")
            if not op.wa_dual.contains(w):
                out.append(f"w{k} is not in (W_A)*")
        return out

    def verify(self, op: Operator) -> bool:
        return not self.failures(op)

    def curve(self, lam) -> list[Fraction]:
        lam = F(lam)
        return [a + lam * b + lam * lam * c for a, b, c in zip(self.w0, self.w1, self.w2)]

    def to_json(self) -> dict:
        return {
            "type": "polarization",
            "gamma": format_rational(self.gamma),
            "w0": _fmt(self.w0), "w1": _fmt(self.w1), "w2": _fmt(self.w2),
            "pair1": [_fmt(self.pair1[0]), _fmt(self.pair1[1])],
            "pair2": [_fmt(self.pair2[0]), _fmt(self.pair2[1])],
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_json(cls, d: dict) -> "PolarizationWitness":
        return cls(parse_rational(d["gamma"]), tuple(_fr(d["w0"])), tuple(_fr(d["w1"])), tuple(_fr(d["w2"])),
                   (tuple(_fr(d["pair1"][0])), tuple(_fr(d["pair1"][1]))),
                   (tuple(_fr(d["pair2"][0])), tuple(_fr(d["pair2"][1]))), bool(d.get("degenerate", False)))


class _PullbackSolver:
    """Solve ``g_A(w*) = T`` for w* in (W_A)*."""

    def __init__(self, op: Operator):
        self.op = op
        pm = pullback_matrix(op)
        self.cols = [la.matvec(pm, list(b)) for b in op.wa_dual.vectors]
        self.mat = la.transpose(self.cols)
        self.coker = la.nullspace(la.transpose(self.mat)) if self.cols else la.identity(len(pm))

    def solve(self, tensor: list[list[Fraction]]) -> list[Fraction] | None:
        target = [x for row in tensor for x in row]
        c = la.solve(self.mat, target)
        return None if c is None else _combine(self.op, c)

    def obstruction(self, tensor: list[list[Fraction]]) -> list[Fraction]:
        target = [x for row in tensor for x in row]
        return [la.dot(p, target) for p in self.coker]


def _parallel(a: Sequence[Fraction], b: Sequence[Fraction]) -> bool:
    return la.rank([list(a), list(b)]) < 2


def polarize(op: Operator, pair1, pair2, *, check_rank_one: bool = True) -> PolarizationWitness:
    """Find gamma != 0 and w0, w1, w2 with ``g_A(w0 + l w1 + l^2 w2) = (xi + l eta) (x) (e + gamma l f)``.

    Matching powers of l: ``g(w0) = xi (x) e``, ``g(w2) = gamma eta (x) f`` and
    ``g(w1) = gamma xi (x) f + eta (x) e``. Solvability of the middle equation
    is ``P(gamma X + Y) = 0`` for P spanning the cokernel of g on (W_A)*, an
    affine condition in gamma. So gamma is rational whenever it exists.
    """
    xi, e = (tuple(_fr(pair1[0])), tuple(_fr(pair1[1])))
    eta, f = (tuple(_fr(pair2[0])), tuple(_fr(pair2[1])))
    if (len(xi), len(e), len(eta), len(f)) != (op.n, op.dim_v, op.n, op.dim_v):
        raise OperatorError("pair dimensions do not match the operator", code="dimension")
    if not any(xi) or not any(e) or not any(eta) or not any(f):
        raise PreconditionError("spectrum pairs must have nonzero entries")
    if check_rank_one and _rank_one_cached(op).verdict != "holds":
        raise PreconditionError("polarize needs an operator with the rank-one property")
    solver = _PullbackSolver(op)
    w0 = solver.solve(la.outer(xi, e))
    w2_unit = solver.solve(la.outer(eta, f))
    if w0 is None:
        raise PreconditionError("pair1 is not in the directional spectrum")
    if w2_unit is None:
        raise PreconditionError("pair2 is not in the directional spectrum")
    x_t = la.outer(xi, f)
    y_t = la.outer(eta, e)
    px, py = solver.obstruction(x_t), solver.obstruction(y_t)
    degenerate = _parallel(xi, eta) or _parallel(e, f)
    rows = [[format_rational(a), format_rational(b)] for a, b in zip(px, py)]
    if all(a == 0 for a in px):
        if any(b != 0 for b in py):
            raise PolarizationError("no gamma makes the linear term solvable", rows)
        gamma = F(1)
    else:
        k = next(i for i, a in enumerate(px) if a != 0)
        gamma = -py[k] / px[k]
        if any(gamma * a + b != 0 for a, b in zip(px, py)):
            raise PolarizationError("the solvability conditions disagree on gamma", rows)
        if gamma == 0:
            raise PolarizationError("the only solvable gamma is zero", rows)
    w1 = solver.solve(la.add(la.scale(gamma, x_t), y_t))
    if w1 is None:  # pragma: no cover - excluded by the cokernel test above
        raise PolarizationError("linear term unsolvable", rows)
    wit = PolarizationWitness(gamma, tuple(w0), tuple(w1), tuple(gamma * x for x in w2_unit),
                              (xi, e), (eta, f), degenerate)
    fails = wit.failures(op)
    if fails:
        raise AssertionError("; ".join(fails))
    return wit


# -- surjectivity ------------------------------------------------------------------


@dataclass
class SurjectivityReport:
    xi_checked: int
    v_checked: int
    xi_violations: list[list[Fraction]]
    v_violations: list[list[Fraction]]

    @property
    def ok(self) -> bool:
        return not self.xi_violations and not self.v_violations

    def to_json(self) -> dict:
        return {"type": "surjectivity", "xi_checked": self.xi_checked, "v_checked": self.v_checked,
                "xi_violations": [_fmt(v) for v in self.xi_violations],
                "v_violations": [_fmt(v) for v in self.v_violations], "ok": self.ok}


def spectrum_surjectivity_probe(op: Operator, xi_samples, v_samples, *, elliptic: bool | None = None
                                ) -> SurjectivityReport:
    """Both projections of the spectrum must be onto for elliptic rank-one operators.

    ``elliptic`` may be passed from an existing certificate; otherwise the
    R-ellipticity check runs.
    """
    if _rank_one_cached(op).verdict != "holds":
        raise PreconditionError("operator does not have the rank-one property")
    if elliptic is None:
        from .certify import check_r_elliptic

        elliptic = check_r_elliptic(op, accuracy=None).verdict == "elliptic"
    if not elliptic:
        raise PreconditionError("operator is not certified R-elliptic")
    xs = [_fr(x) for x in xi_samples]
    vs = [_fr(v) for v in v_samples]
    bad_x = [x for x in xs if any(x) and not rank_one_from_xi(op, x)]
    bad_v = [v for v in vs if any(v) and not rank_one_from_v(op, v)]
    return SurjectivityReport(len(xs), len(vs), bad_x, bad_v)


def random_rational_vectors(count: int, dim: int, seed: int = 0) -> list[list[Fraction]]:
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        v = [F(rng.randint(-12, 12), rng.randint(1, 9)) for _ in range(dim)]
        if any(v):
            out.append(v)
    return out
