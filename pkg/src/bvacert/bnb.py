"""Certified branch-and-bound for singular values of a linear matrix pencil on a sphere.

The pencil is ``x -> sum_j x_j C_j`` for x in R^d with fixed complex or real
matrices C_j. The unit sphere is covered by boxes on faces of the cube: each
face fixes some coordinates and leaves ``f`` free coordinates in [-1, 1]; a box
is projected radially onto the sphere. Boxes are split dyadically along their
longest edge (lowest index on ties), so the tree is determined by its shape
alone and can be serialized as one bit per node in preorder.

Lower bounds on a box come from two sound estimates:

* Weyl: ``sigma_k(p) >= sigma_k(c) - L |p - c|`` with ``L >= ||x -> A(x)||``.
* For the smallest singular value of a tall or square pencil, a 2x2 block
  bound on ``H = A^H A`` around the bottom eigenvector of ``H(c)``. It keeps
  the first-order term along the sphere and is much tighter near minima.
"""

from __future__ import annotations

import base64
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

MAX_LEVEL = 48
_EIG_MARGIN = 1e-12


@dataclass(frozen=True)
class Face:
    """Fixed coordinates and the free coordinates ranging over [-1, 1]."""

    fixed: tuple[tuple[int, float], ...]
    free: tuple[int, ...]


@dataclass
class SphereProblem:
    """Minimize ``sigma_k(sum_j x_j C_j)`` over the faces' projection onto the sphere.

    ``k`` counts singular values from the largest (k = N asks for injectivity of
    an M x N pencil).
    """

    mats: np.ndarray
    faces: list[Face]
    k: int
    lipschitz: float = field(init=False)

    def __post_init__(self):
        self.mats = np.asarray(self.mats)
        d, m, n = self.mats.shape
        # columns of vec(C_j); its spectral norm bounds ||A(x)||_F / |x|
        stack = self.mats.reshape(d, m * n).T
        self.lipschitz = float(np.linalg.norm(stack, 2)) * (1 + 1e-9) + 1e-15
        frees = {len(f.free) for f in self.faces}
        if len(frees) != 1:
            raise ValueError("all faces must have the same number of free coordinates")
        self.n_free = frees.pop()
        self.dim = d
        self._free_tab = np.array([f.free for f in self.faces], dtype=int).reshape(len(self.faces), self.n_free)
        fixed = np.zeros((len(self.faces), d))
        for i, f in enumerate(self.faces):
            for j, v in f.fixed:
                fixed[i, j] = v
        self._fixed_tab = fixed
        self._signs = np.array(list(itertools.product((-1.0, 1.0), repeat=self.n_free))) if self.n_free <= 6 else None

    @property
    def second_order(self) -> bool:
        _, m, n = self.mats.shape
        return self.k == n and n <= m

    @classmethod
    def real_sphere(cls, mats: np.ndarray, k: int) -> "SphereProblem":
        """Faces ``x_i = +1``; antipodal symmetry of singular values covers the rest."""
        d = mats.shape[0]
        faces = [Face(((i, 1.0),), tuple(j for j in range(d) if j != i)) for i in range(d)]
        return cls(mats, faces, k)

    @classmethod
    def complex_sphere(cls, mats: np.ndarray, k: int) -> "SphereProblem":
        """Charts ``xi_i = 1`` of C^n = R^2n; singular values are phase invariant.

        ``mats`` holds the n complex coefficient matrices; the real pencil uses
        ``x = (a, b)`` with ``xi = a + i b``.
        """
        n = mats.shape[0]
        big = np.concatenate([mats.astype(complex), 1j * mats.astype(complex)], axis=0)
        faces = []
        for i in range(n):
            free = tuple(j for j in range(2 * n) if j not in (i, n + i))
            faces.append(Face(((i, 1.0), (n + i, 0.0)), free))
        return cls(big, faces, k)


@dataclass
class Boxes:
    """Structure-of-arrays batch of boxes together with their evaluated bounds."""

    face: np.ndarray
    lev: np.ndarray
    idx: np.ndarray
    lb: np.ndarray | None = None
    sig: np.ndarray | None = None
    center: np.ndarray | None = None

    def __len__(self):
        return len(self.face)

    def take(self, sel) -> "Boxes":
        return Boxes(self.face[sel], self.lev[sel], self.idx[sel],
                     None if self.lb is None else self.lb[sel],
                     None if self.sig is None else self.sig[sel],
                     None if self.center is None else self.center[sel])

    @staticmethod
    def concat(parts: Sequence["Boxes"], n_free: int) -> "Boxes":
        parts = [p for p in parts if len(p)]
        if not parts:
            return Boxes(np.zeros(0, int), np.zeros((0, n_free), int), np.zeros((0, n_free), np.int64),
                         np.zeros(0), np.zeros(0), None)
        cat = lambda name: None if getattr(parts[0], name) is None else np.concatenate([getattr(p, name) for p in parts])
        return Boxes(cat("face"), cat("lev"), cat("idx"), cat("lb"), cat("sig"), cat("center"))


def roots(problem: SphereProblem) -> Boxes:
    nf = len(problem.faces)
    return Boxes(np.arange(nf), np.zeros((nf, problem.n_free), int), np.zeros((nf, problem.n_free), np.int64))


def split(boxes: Boxes) -> Boxes:
    """Split every box along its first coarsest coordinate; children interleaved (lo, hi)."""
    b = len(boxes)
    if boxes.lev.shape[1] == 0:
        raise ValueError("boxes without free coordinates cannot be split")
    j = np.argmin(boxes.lev, axis=1)
    rows = np.arange(b)
    lev = np.repeat(boxes.lev, 2, axis=0)
    idx = np.repeat(boxes.idx, 2, axis=0)
    rr = np.repeat(rows, 2) * 2 + np.tile([0, 1], b)
    jj = np.repeat(j, 2)
    lev[rr, jj] += 1
    idx[rr, jj] = idx[rr, jj] * 2 + np.tile([0, 1], b)
    parent_lb = None if boxes.lb is None else np.repeat(boxes.lb, 2)
    return Boxes(np.repeat(boxes.face, 2), lev, idx, parent_lb)


def _geometry(problem: SphereProblem, boxes: Boxes):
    width = 2.0 / np.exp2(boxes.lev)
    mid = -1.0 + (boxes.idx + 0.5) * width
    b = len(boxes)
    y = problem._fixed_tab[boxes.face].copy()
    if problem.n_free:
        cols = problem._free_tab[boxes.face]
        y[np.arange(b)[:, None], cols] = mid
    norm = np.linalg.norm(y, axis=1)
    c = y / norm[:, None]
    half_diag = 0.5 * np.linalg.norm(width, axis=1)
    r = 2.0 * half_diag / norm
    if problem._signs is not None and problem.n_free:
        off = problem._signs[None, :, :] * (0.5 * width)[:, None, :]
        verts = np.repeat(y[:, None, :], len(problem._signs), axis=1)
        verts[np.arange(b)[:, None, None], np.arange(len(problem._signs))[None, :, None], cols[:, None, :]] += off
        verts /= np.linalg.norm(verts, axis=2, keepdims=True)
        rv = np.linalg.norm(verts - c[:, None, :], axis=2).max(axis=1)
        # the vertex hull bound needs every vertex within a quarter circle of c
        ok = rv < math.sqrt(2.0) * (1 - 1e-9)
        r = np.where(ok, np.minimum(r, rv), r)
    r = r * (1 + 1e-10) + 1e-15
    return c, r


def evaluate(problem: SphereProblem, boxes: Boxes) -> Boxes:
    """Fill ``sig`` (value at the projected center), ``lb`` and ``center``."""
    if len(boxes) == 0:
        boxes.lb = np.zeros(0)
        boxes.sig = np.zeros(0)
        boxes.center = np.zeros((0, problem.dim))
        return boxes
    c, r = _geometry(problem, boxes)
    mats = problem.mats
    _, m, n = mats.shape
    a_c = np.einsum("bd,dmn->bmn", c, mats)
    sv = np.linalg.svd(a_c, compute_uv=False)
    smax = sv[:, 0]
    k = problem.k
    sig = sv[:, k - 1] if k <= min(m, n) else np.zeros(len(boxes))
    L = problem.lipschitz
    margin = _EIG_MARGIN * (1.0 + smax**2)
    lb = np.sqrt(np.maximum(sig**2 - margin, 0.0)) - L * r
    if problem.second_order:
        lb = np.maximum(lb, _second_order(a_c, c, r, smax, mats, L, margin))
    lb = np.maximum(lb, 0.0)
    if boxes.lb is not None:
        lb = np.maximum(lb, boxes.lb)
    boxes.lb, boxes.sig, boxes.center = lb, sig, c
    return boxes


def _second_order(a_c, c, r, smax, mats, L, margin):
    n = a_c.shape[2]
    h = np.einsum("bmi,bmj->bij", a_c.conj(), a_c)
    lam, vec = np.linalg.eigh(h)
    u1 = vec[:, :, 0]
    au = np.einsum("bmn,bn->bm", a_c, u1)
    cu = np.einsum("dmn,bn->bdm", mats, u1)
    g = 2.0 * np.real(np.einsum("bm,bdm->bd", au.conj(), cu))
    gc = np.einsum("bd,bd->b", g, c)
    gt = g - gc[:, None] * c
    q = np.real(np.einsum("bdm,bem->bde", cu.conj(), cu))
    q_min = np.linalg.eigvalsh(q)[:, 0]
    k11 = np.real(np.einsum("bm,bm->b", au.conj(), au))
    a = k11 - np.linalg.norm(gt, axis=1) * r + np.minimum(0.0, q_min - 0.5 * gc) * r**2
    if n == 1:
        lower = a
    else:
        eps = 2.0 * smax * L * r + (L * r) ** 2
        d = lam[:, 1] - eps
        lower = 0.5 * (a + d) - np.sqrt((0.5 * (d - a)) ** 2 + eps**2)
    return np.sqrt(np.maximum(lower - margin, 0.0))


@dataclass
class SearchResult:
    status: str  # "positive", "witness", "indeterminate"
    lower_bound: float
    upper_bound: float
    best_point: np.ndarray | None
    leaves: Boxes
    nodes: int
    refine_nodes: int = 0
    witness: object = None
    float_candidate: np.ndarray | None = None


WitnessFn = Callable[[np.ndarray, int], object]


def search(problem: SphereProblem, tol: float, budget: int, *, accuracy: float | None = None,
           refine_budget: int = 20000, witness_fn: WitnessFn | None = None, batch: int = 1 << 15) -> SearchResult:
    """Decide ``min sigma_k > tol`` on the sphere, then optionally tighten the bound.

    ``witness_fn(point, face)`` is called on promising low centers; it returns
    an exact witness object, the string ``"float"`` for a floating-only
    candidate, or None.
    """
    active = evaluate(problem, roots(problem))
    nodes = len(active)
    settled: list[Boxes] = []
    best_sig = math.inf
    best_pt = None
    attempted = math.inf
    while len(active):
        i = int(np.argmin(active.sig))
        if active.sig[i] < best_sig:
            best_sig, best_pt = float(active.sig[i]), active.center[i].copy()
        if witness_fn is not None and best_sig < 0.5 * attempted:
            attempted = best_sig
            for j in np.argsort(active.sig)[:2]:
                w = witness_fn(active.center[j], int(active.face[j]))
                if w is not None and not (isinstance(w, str) and w == "float"):
                    return SearchResult("witness", 0.0, 0.0, active.center[j].copy(),
                                        Boxes.concat(settled + [active], problem.n_free), nodes, witness=w)
                if isinstance(w, str) and w == "float":
                    return SearchResult("indeterminate", 0.0, best_sig, active.center[j].copy(),
                                        Boxes.concat(settled + [active], problem.n_free), nodes,
                                        float_candidate=active.center[j].copy())
        done = active.lb > tol
        settled.append(active.take(done))
        todo = active.take(~done)
        if len(todo) == 0:
            break
        if problem.n_free == 0 or todo.lev.min() >= MAX_LEVEL or nodes + 2 * len(todo) > budget:
            return SearchResult("indeterminate", float(min(todo.lb.min(), _min_lb(settled))), best_sig, best_pt,
                                Boxes.concat(settled + [todo], problem.n_free), nodes)
        children = []
        for s in range(0, len(todo), batch):
            children.append(evaluate(problem, split(todo.take(slice(s, s + batch)))))
        active = Boxes.concat(children, problem.n_free)
        nodes += len(active)
    leaves = Boxes.concat(settled, problem.n_free)
    res = SearchResult("positive", float(leaves.lb.min()), min(best_sig, float(leaves.sig.min())),
                       best_pt, leaves, nodes)
    if accuracy is not None:
        _refine(problem, res, accuracy, refine_budget, batch)
    return res


def _min_lb(parts: Sequence[Boxes]) -> float:
    vals = [p.lb.min() for p in parts if len(p)]
    return float(min(vals)) if vals else math.inf


def _refine(problem: SphereProblem, res: SearchResult, accuracy: float, budget: int, batch: int):
    """Best-first splitting until ``upper - lower <= accuracy`` or the budget is spent."""
    leaves = res.leaves
    used = 0
    if problem.n_free == 0:
        return
    while True:
        ub = min(res.upper_bound, float(leaves.sig.min()))
        res.upper_bound = ub
        low = np.nonzero(leaves.lb < ub - accuracy)[0]
        if len(low) == 0 or used >= budget:
            break
        low = low[np.argsort(leaves.lb[low], kind="stable")][: min(batch, max(1, (budget - used) // 2))]
        low = low[leaves.lev[low].min(axis=1) < MAX_LEVEL]
        if len(low) == 0:
            break
        keep = np.ones(len(leaves), bool)
        keep[low] = False
        kids = evaluate(problem, split(leaves.take(low)))
        used += len(kids)
        leaves = Boxes.concat([leaves.take(keep), kids], problem.n_free)
    res.leaves = leaves
    res.lower_bound = float(leaves.lb.min())
    res.refine_nodes = used
    res.nodes += used


# -- trace serialization ----------------------------------------------------------


def encode_trace(problem: SphereProblem, leaves: Boxes) -> dict:
    """Preorder split bits (1 = split, 0 = leaf) over all faces, base64 packed."""
    keys = {(int(f), tuple(int(x) for x in lv), tuple(int(x) for x in ix))
            for f, lv, ix in zip(leaves.face, leaves.lev, leaves.idx)}
    if len(keys) != len(leaves):
        raise ValueError("duplicate leaves")
    bits: list[int] = []
    nf = problem.n_free
    for face in range(len(problem.faces)):
        stack = [((0,) * nf, (0,) * nf)]
        while stack:
            lev, idx = stack.pop()
            if (face, lev, idx) in keys:
                bits.append(0)
                continue
            if nf == 0 or max(lev, default=0) > MAX_LEVEL:
                raise ValueError("leaves do not form a partition of the faces")
            bits.append(1)
            j = lev.index(min(lev))
            lo_lev = lev[:j] + (lev[j] + 1,) + lev[j + 1:]
            lo = (lo_lev, idx[:j] + (2 * idx[j],) + idx[j + 1:])
            hi = (lo_lev, idx[:j] + (2 * idx[j] + 1,) + idx[j + 1:])
            stack.append(hi)
            stack.append(lo)
    packed = np.packbits(np.array(bits, dtype=np.uint8)).tobytes()
    return {"encoding": "preorder-split-bits", "n_bits": len(bits), "leaves": len(keys),
            "bits": base64.b64encode(packed).decode("ascii")}


def decode_trace(problem: SphereProblem, trace: dict) -> tuple[Boxes, np.ndarray, np.ndarray]:
    """Rebuild the tree from a trace.

    Returns all nodes in preorder, the parent index of each node (-1 for face
    roots) and a leaf mask. Raises ValueError on any malformed trace.
    """
    if trace.get("encoding") != "preorder-split-bits":
        raise ValueError(f"unknown trace encoding {trace.get('encoding')!r}")
    try:
        raw = base64.b64decode(trace["bits"], validate=True)
        n_bits = int(trace["n_bits"])
    except Exception as exc:  # noqa: BLE001 - any decoding failure is a bad trace
        raise ValueError(f"undecodable trace: {exc}") from exc
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    if n_bits < 0 or len(raw) != (n_bits + 7) // 8 or bits[n_bits:].any():
        raise ValueError("trace bit count mismatch")
    bits = bits[:n_bits].tolist()
    pos = 0
    nf = problem.n_free
    faces, levs, idxs, parents, leaf = [], [], [], [], []
    for face in range(len(problem.faces)):
        stack = [((0,) * nf, (0,) * nf, -1)]
        while stack:
            if pos >= n_bits:
                raise ValueError("trace ended early")
            lev, idx, parent = stack.pop()
            b = bits[pos]
            pos += 1
            me = len(faces)
            faces.append(face)
            levs.append(lev)
            idxs.append(idx)
            parents.append(parent)
            leaf.append(b == 0)
            if b == 0:
                continue
            if nf == 0 or min(lev) >= MAX_LEVEL:
                raise ValueError("trace splits beyond the maximum depth")
            j = lev.index(min(lev))
            lo_lev = lev[:j] + (lev[j] + 1,) + lev[j + 1:]
            stack.append((lo_lev, idx[:j] + (2 * idx[j] + 1,) + idx[j + 1:], me))
            stack.append((lo_lev, idx[:j] + (2 * idx[j],) + idx[j + 1:], me))
    if pos != n_bits:
        raise ValueError("trailing bits in trace")
    leaf_arr = np.array(leaf, bool)
    if int(trace.get("leaves", -1)) != int(leaf_arr.sum()):
        raise ValueError("leaf count mismatch")
    nodes = Boxes(np.array(faces, int), np.array(levs, int).reshape(len(faces), nf),
                  np.array(idxs, np.int64).reshape(len(faces), nf))
    return nodes, np.array(parents, int), leaf_arr


def recheck(problem: SphereProblem, trace: dict, batch: int = 1 << 15) -> float:
    """Minimum certified lower bound over the leaves of a serialized trace.

    Every node is re-evaluated and bounds are inherited from parents exactly
    as during the search.
    """
    nodes, parents, leaf = decode_trace(problem, trace)
    lb = np.empty(len(nodes))
    for s in range(0, len(nodes), batch):
        part = Boxes(nodes.face[s:s + batch], nodes.lev[s:s + batch], nodes.idx[s:s + batch])
        lb[s:s + batch] = evaluate(problem, part).lb
    # preorder: parents precede children
    for i in range(len(lb)):
        p = parents[i]
        if p >= 0 and lb[p] > lb[i]:
            lb[i] = lb[p]
    return float(lb[leaf].min())
