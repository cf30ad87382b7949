"""Certified decisions: R- and C-ellipticity, constant rank, polynomial kernels.

Positive ellipticity and rank verdicts rest on :mod:`bvacert.bnb` traces;
negative verdicts need an exact (Gaussian-)rational direction whose symbol
has a verified kernel. Floating point never produces a negative verdict.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import bnb
from . import linalg as la
from .exact import GaussQ, format_gauss, format_rational, parse_gauss, parse_rational, rationalize
from .poly import Poly, linear_form_matrix, minors, monomials
from .symbol import Operator, eval_symbol, eval_symbol_complex

DEFAULT_TOL = 1e-8
DEFAULT_BUDGET = 10**6
DEFAULT_ACCURACY = 1e-6
DEFAULT_REFINE_BUDGET = 50_000
LIPSCHITZ_RULE = "spectral norm of [vec A_1 | ... | vec A_n] in Gram-orthonormal coordinates"
MAX_DEN = 10**6


# -- witnesses -------------------------------------------------------------------


def normalize_first_one(vec: Sequence) -> list:
    """Scale so that the first nonzero entry is 1."""
    pivot = next(x for x in vec if x != 0)
    return [x / pivot for x in vec]


def canonical_complex_direction(xi: Sequence[GaussQ]) -> list[GaussQ]:
    """Phase-normalize (first nonzero entry 1), then pick the conjugate whose
    first non-real entry has positive imaginary part."""
    z = normalize_first_one([GaussQ.coerce(x) for x in xi])
    first = next((x for x in z if x.im != 0), None)
    if first is not None and first.im < 0:
        z = [x.conjugate() for x in z]
    return z


def _ladder_vectors(values: Sequence[float]) -> list[list[Fraction]]:
    """Coordinatewise continued-fraction approximations at matching caps."""
    out: list[list[Fraction]] = []
    cap = 1
    while cap <= MAX_DEN:
        v = [rationalize(x, cap) for x in values]
        if not out or v != out[-1]:
            out.append(v)
        cap *= 2
    return out


class _WitnessFinder:
    """Local polish of a low box center followed by exact rational checks.

    ``kind`` is "R" or "C"; ``k`` is the index of the singular value that
    must vanish (an exact witness is a direction where the rank is < k).
    """

    def __init__(self, op: Operator, problem: bnb.SphereProblem, kind: str, k: int, tol: float):
        self.op, self.problem, self.kind, self.k, self.tol = op, problem, kind, k, tol
        self.tried: set = set()

    def _sigma(self, x: np.ndarray) -> float:
        a = np.einsum("d,dmn->mn", x / np.linalg.norm(x), self.problem.mats)
        sv = np.linalg.svd(a, compute_uv=False)
        return float(sv[self.k - 1]) if self.k <= len(sv) else 0.0

    def _embed(self, face: int, y: np.ndarray) -> np.ndarray:
        f = self.problem.faces[face]
        x = np.zeros(self.problem.dim)
        for j, v in f.fixed:
            x[j] = v
        x[list(f.free)] = y
        return x

    def _exact(self, face: int, y: Sequence[float]):
        f = self.problem.faces[face]
        x = self._embed(face, np.asarray(y, float))
        if self.kind == "R":
            for cand in _ladder_vectors(list(x)):
                key = tuple(cand)
                if key in self.tried or all(c == 0 for c in cand):
                    continue
                self.tried.add(key)
                sym = eval_symbol(self.op, cand).as_list()
                if la.rank(sym) < self.k:
                    return cand
            return None
        n = self.op.n
        for cand in _ladder_vectors(list(x)):
            z = [GaussQ(cand[j], cand[n + j]) for j in range(n)]
            key = tuple(z)
            if key in self.tried or not any(z):
                continue
            self.tried.add(key)
            sym = eval_symbol_complex(self.op, z).as_list()
            if la.rank(sym) < self.k:
                return z
        return None

    def __call__(self, center: np.ndarray, face: int):
        f = self.problem.faces[face]
        chart = f.fixed[0][0]
        if self.kind == "R":
            y0 = center[list(f.free)] / center[chart]
        else:
            n = self.op.n
            xi = center[:n] + 1j * center[n:]
            xi = xi / xi[chart]
            full = np.concatenate([xi.real, xi.imag])
            y0 = full[list(f.free)]
        hit = self._exact(face, y0)
        if hit is not None:
            return hit
        if len(y0) == 0:
            return "float" if self._sigma(self._embed(face, y0)) < self.tol / 2 else None
        obj = lambda y: self._sigma(self._embed(face, y)) ** 2
        res = minimize(obj, y0, method="Nelder-Mead",
                       options={"xatol": 1e-13, "fatol": 1e-30, "maxiter": 4000, "maxfev": 8000})
        hit = self._exact(face, res.x)
        if hit is not None:
            return hit
        if math.sqrt(max(res.fun, 0.0)) < self.tol / 2:
            return "float"
        return None


# -- ellipticity -------------------------------------------------------------------


@dataclass
class EllipticityCertificate:
    kind: str  # "R" or "C"
    verdict: str  # elliptic | not_elliptic | indeterminate
    lower_bound: float
    upper_bound: float
    tol: float
    budget: int
    nodes: int
    lipschitz: float
    accuracy: float | None = None
    witness_direction: list | None = None
    witness_kernel: list | None = None
    float_candidate: list | None = None
    trace: dict | None = None
    lipschitz_rule: str = LIPSCHITZ_RULE

    def to_json(self) -> dict:
        fmt = format_gauss if self.kind == "C" else format_rational
        return {
            "type": "ellipticity",
            "kind": self.kind,
            "verdict": self.verdict,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "tol": self.tol,
            "budget": self.budget,
            "accuracy": self.accuracy,
            "nodes": self.nodes,
            "lipschitz": self.lipschitz,
            "lipschitz_rule": self.lipschitz_rule,
            "witness_direction": None if self.witness_direction is None else [fmt(x) for x in self.witness_direction],
            "witness_kernel": None if self.witness_kernel is None else [fmt(x) for x in self.witness_kernel],
            "float_candidate": self.float_candidate,
            "trace": self.trace,
        }

    @classmethod
    def from_json(cls, d: dict) -> "EllipticityCertificate":
        parse = parse_gauss if d["kind"] == "C" else parse_rational
        return cls(
            kind=d["kind"], verdict=d["verdict"], lower_bound=d["lower_bound"], upper_bound=d["upper_bound"],
            tol=d["tol"], budget=d["budget"], nodes=d["nodes"], lipschitz=d["lipschitz"], accuracy=d.get("accuracy"),
            witness_direction=None if d.get("witness_direction") is None else [parse(x) for x in d["witness_direction"]],
            witness_kernel=None if d.get("witness_kernel") is None else [parse(x) for x in d["witness_kernel"]],
            float_candidate=d.get("float_candidate"), trace=d.get("trace"),
            lipschitz_rule=d.get("lipschitz_rule", LIPSCHITZ_RULE),
        )


def ellipticity_problem(op: Operator, kind: str) -> bnb.SphereProblem:
    mats = op.normalized_coeffs
    if kind == "R":
        return bnb.SphereProblem.real_sphere(mats, op.dim_v)
    if kind == "C":
        return bnb.SphereProblem.complex_sphere(mats.astype(complex), op.dim_v)
    raise ValueError(f"unknown ellipticity kind {kind!r}")


def _check_elliptic(op: Operator, kind: str, tol: float, budget: int, accuracy: float | None,
                    refine_budget: int) -> EllipticityCertificate:
    if not tol > 0:
        raise ValueError("tol must be positive")
    problem = ellipticity_problem(op, kind)
    finder = _WitnessFinder(op, problem, kind, op.dim_v, tol)
    res = bnb.search(problem, tol, budget, accuracy=accuracy, refine_budget=refine_budget, witness_fn=finder)
    cert = EllipticityCertificate(kind=kind, verdict="indeterminate", lower_bound=res.lower_bound,
                                  upper_bound=res.upper_bound, tol=tol, budget=budget, nodes=res.nodes,
                                  lipschitz=problem.lipschitz, accuracy=accuracy)
    if res.status == "positive":
        cert.verdict = "elliptic"
        cert.trace = bnb.encode_trace(problem, res.leaves)
    elif res.status == "witness":
        direction = res.witness
        if kind == "R":
            direction = normalize_first_one(direction)
            kernel = la.nullspace(eval_symbol(op, direction).as_list())[0]
        else:
            direction = canonical_complex_direction(direction)
            kernel = [GaussQ.coerce(x) for x in la.nullspace(eval_symbol_complex(op, direction).as_list())[0]]
        cert.verdict = "not_elliptic"
        cert.lower_bound = 0.0
        cert.upper_bound = 0.0
        cert.witness_direction = direction
        cert.witness_kernel = normalize_first_one(kernel)
    elif res.float_candidate is not None:
        cert.float_candidate = [float(x) for x in res.float_candidate]
    return cert


def check_r_elliptic(op: Operator, tol: float = DEFAULT_TOL, budget: int = DEFAULT_BUDGET, *,
                     accuracy: float | None = DEFAULT_ACCURACY,
                     refine_budget: int = DEFAULT_REFINE_BUDGET) -> EllipticityCertificate:
    """Certify ``min_{|xi|=1} sigma_min(A(xi)) > tol`` or find an exact real kernel."""
    return _check_elliptic(op, "R", tol, budget, accuracy, refine_budget)


def check_c_elliptic(op: Operator, tol: float = DEFAULT_TOL, budget: int = DEFAULT_BUDGET, *,
                     accuracy: float | None = DEFAULT_ACCURACY,
                     refine_budget: int = DEFAULT_REFINE_BUDGET) -> EllipticityCertificate:
    """Same over ``xi = a + ib`` with ``|a|^2 + |b|^2 = 1``."""
    return _check_elliptic(op, "C", tol, budget, accuracy, refine_budget)


# -- constant rank -----------------------------------------------------------------

_PRIMES = (7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97)


def generic_points(n: int, count: int = 5, seed: int = 0) -> list[list[Fraction]]:
    """Pseudorandom rational points with entries in [1, 2] and distinct denominators."""
    rng = random.Random(seed)
    pts = []
    for t in range(count):
        row = []
        for i in range(n):
            p = _PRIMES[(t * n + i) % len(_PRIMES)]
            row.append(1 + Fraction(rng.randint(1, p - 1), p))
        pts.append(row)
    return pts


@dataclass
class RankCertificate:
    verdict: str  # constant_rank | not_constant_rank | indeterminate
    r: int
    sampled_ranks: list[int]
    upper_part: dict
    lower_part: dict
    witness_direction: list | None = None
    witness_rank: int | None = None
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "type": "rank",
            "verdict": self.verdict,
            "r": self.r,
            "seed": self.seed,
            "sampled_ranks": self.sampled_ranks,
            "upper_part": self.upper_part,
            "lower_part": self.lower_part,
            "witness_direction": None if self.witness_direction is None
            else [format_rational(x) for x in self.witness_direction],
            "witness_rank": self.witness_rank,
        }


def symbol_polynomial_matrix(op: Operator) -> list[list[Poly]]:
    """``A(xi)`` as an M x N matrix of linear forms in xi."""
    return linear_form_matrix(op.coeffs, op.n)


def _minor_sizes_vanish(mat: list[list[Poly]], size: int) -> tuple[bool, int]:
    """True when every ``size`` minor is the zero polynomial; also the count checked."""
    if size > len(mat) or size > len(mat[0]):
        return True, 0
    count = 0
    for _, _, p in minors(mat, size):
        count += 1
        if not p.is_zero():
            return False, count
    return True, count


def check_constant_rank(op: Operator, tol: float = DEFAULT_TOL, budget: int = DEFAULT_BUDGET,
                        seed: int = 0) -> RankCertificate:
    """Generic rank r from exact minors, then a certified lower bound on sigma_r."""
    pts = generic_points(op.n, 5, seed)
    sampled = [eval_symbol(op, p).rank() for p in pts]
    r = max(sampled)
    pm = symbol_polynomial_matrix(op)
    checked = 0
    while True:
        ok, cnt = _minor_sizes_vanish(pm, r + 1)
        checked += cnt
        if ok:
            break
        r += 1  # a nonzero (r+1)-minor: the sample was not generic
    upper = {"minor_size": r + 1, "minors_checked": checked, "all_vanish": True,
             "empty": r + 1 > min(op.dim_w, op.dim_v)}
    problem = bnb.SphereProblem.real_sphere(op.normalized_coeffs, r)
    finder = _WitnessFinder(op, problem, "R", r, tol)
    res = bnb.search(problem, tol, budget, witness_fn=finder)
    lower = {"k": r, "tol": tol, "budget": budget, "nodes": res.nodes, "lower_bound": res.lower_bound,
             "lipschitz": problem.lipschitz, "lipschitz_rule": LIPSCHITZ_RULE, "trace": None}
    cert = RankCertificate("indeterminate", r, sampled, upper, lower, seed=seed)
    if res.status == "positive":
        cert.verdict = "constant_rank"
        lower["trace"] = bnb.encode_trace(problem, res.leaves)
    elif res.status == "witness":
        direction = normalize_first_one(res.witness)
        cert.verdict = "not_constant_rank"
        cert.witness_direction = direction
        cert.witness_rank = eval_symbol(op, direction).rank()
        lower["lower_bound"] = 0.0
    return cert


# -- polynomial kernel -------------------------------------------------------------


@dataclass
class PolyKernel:
    degree_scanned: int
    dims: list[int]  # cumulative: dim {p : A p = 0, deg p <= d}
    stabilization_degree: int | None
    basis: list[list[Poly]] = field(repr=False)

    @property
    def stabilized(self) -> bool:
        return self.stabilization_degree is not None

    def to_json(self) -> dict:
        return {
            "type": "poly_kernel",
            "degree_scanned": self.degree_scanned,
            "dims": self.dims,
            "stabilization_degree": self.stabilization_degree if self.stabilized else "not stabilized by d_max",
            "basis": [[c.to_json() for c in p] for p in self.basis],
        }


def apply_to_polynomial(op: Operator, p: Sequence[Poly]) -> list[Poly]:
    """``sum_i A_i d_i p`` for a V-valued polynomial given by its N components."""
    out = [Poly(op.n) for _ in range(op.dim_w)]
    for i, a in enumerate(op.coeffs):
        dp = [comp.diff(i) for comp in p]
        for r in range(op.dim_w):
            for j in range(op.dim_v):
                if a[r][j] and not dp[j].is_zero():
                    out[r] = out[r] + dp[j] * a[r][j]
    return out


def homogeneous_kernel(op: Operator, d: int) -> list[list[Poly]]:
    """Basis of homogeneous degree-d V-valued polynomials annihilated by A."""
    n, N, M = op.n, op.dim_v, op.dim_w
    mons = monomials(n, d)
    cols = [(alpha, j) for alpha in mons for j in range(N)]
    if d == 0:
        basis_vecs = la.identity(len(cols))
    else:
        out_mons = {beta: k for k, beta in enumerate(monomials(n, d - 1))}
        rows = len(out_mons) * M
        mat = la.zeros(rows, len(cols))
        for c, (alpha, j) in enumerate(cols):
            for i in range(n):
                if alpha[i] == 0:
                    continue
                beta = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
                base = out_mons[beta] * M
                for r in range(M):
                    if op.coeffs[i][r][j]:
                        mat[base + r][c] += alpha[i] * op.coeffs[i][r][j]
        basis_vecs = la.row_space_basis(la.nullspace(mat))
    basis = []
    for vec in basis_vecs:
        comps = [Poly(n) for _ in range(N)]
        for (alpha, j), coef in zip(cols, vec):
            if coef != 0:
                comps[j] = comps[j] + Poly.monomial(alpha, coef)
        basis.append(comps)
    return basis


def kernel_polynomials(op: Operator, d_max: int = 4) -> PolyKernel:
    """Polynomial solutions of ``A p = 0`` up to degree ``d_max``, graded by degree.

    A first-order homogeneous operator maps degree-d homogeneous parts to
    degree d-1, so the kernel is the direct sum of the homogeneous kernels.
    Derivatives of kernel elements are kernel elements, so a zero homogeneous
    kernel in degree l+1 forces zero kernels in all higher degrees.
    """
    if d_max < 0:
        raise ValueError("d_max must be >= 0")
    dims: list[int] = []
    basis: list[list[Poly]] = []
    stab = None
    total = 0
    for d in range(d_max + 1):
        hk = homogeneous_kernel(op, d)
        if d >= 1 and not hk and stab is None:
            stab = d - 1
        total += len(hk)
        dims.append(total)
        basis.extend(hk)
    for p in basis:
        if not all(q.is_zero() for q in apply_to_polynomial(op, p)):
            raise AssertionError("kernel basis element fails the polynomial identity")
    return PolyKernel(d_max, dims, stab, basis)
