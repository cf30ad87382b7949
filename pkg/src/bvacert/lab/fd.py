"""Forward-difference operator, line slicing, translation defects and mollification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np
from scipy.ndimage import convolve1d

from ..spectrum import RankOneTriple
from ..symbol import Operator, dual_norm
from .grid import DiscreteMeasure, GridDomain, GridField, fsum

MAX_LATTICE = 16
UNIT_TOL = 1e-12


class LabError(ValueError):
    pass


# -- operator --------------------------------------------------------------------


def _shift_zero(a: np.ndarray, k: Sequence[int]) -> np.ndarray:
    """``out[c] = a[c + k]`` with zero outside the array."""
    out = np.zeros_like(a)
    src, dst = [], []
    for ki, s in zip(k, a.shape):
        if abs(ki) >= s:
            return out
        if ki >= 0:
            src.append(slice(ki, s))
            dst.append(slice(0, s - ki))
        else:
            src.append(slice(0, s + ki))
            dst.append(slice(-ki, s))
    out[tuple(dst)] = a[tuple(src)]
    return out


def apply_operator_fd(f: GridField, op: Operator, mode: str = "interior") -> DiscreteMeasure:
    """Cell masses ``h^n * sum_i A_i (u(x + h e_i) - u(x)) / h``.

    ``interior``: only masked cells whose forward neighbours are all masked.
    ``extension``: u is extended by zero and every cell of the grid padded by
    one layer contributes, so jumps onto the boundary are counted.
    """
    if f.dim_v != op.dim_v:
        raise LabError(f"field has dimV={f.dim_v}, operator expects {op.dim_v}")
    if f.domain.n != op.n:
        raise LabError(f"field lives in {f.domain.n}D, operator in {op.n}D")
    dom, h = f.domain, f.domain.h
    coeffs = op.float_coeffs
    if mode == "interior":
        u, m = f.values, dom.mask
    elif mode == "extension":
        pad = [(1, 1)] * dom.n
        u = np.pad(f.values, pad + [(0, 0)])
        m = np.pad(dom.mask, pad)
    else:
        raise LabError(f"unknown mode {mode!r}")
    dens = np.zeros(u.shape[:-1] + (op.dim_w,))
    keep = m.copy() if mode == "interior" else np.ones_like(m)
    for i in range(dom.n):
        e = [0] * dom.n
        e[i] = 1
        du = (_shift_zero(u, e + [0]) - u) / h
        dens += du @ coeffs[i].T
        if mode == "interior":
            keep &= _shift_zero(m, e)
    masses = np.where(keep[..., None], dens, 0.0) * dom.cell_volume
    prov = {"field": f.name, "scheme": "forward-difference", "mode": mode, "operator": op.name, "h": h}
    return DiscreteMeasure(masses, op.gram_factor, prov)


def total_variation(f: GridField, op: Operator, mode: str = "interior") -> float:
    return apply_operator_fd(f, op, mode).total_variation()


# -- lattice directions ------------------------------------------------------------


@dataclass(frozen=True)
class LatticeDirection:
    """Integer step ``k`` (primitive, entries bounded by 16) approximating a unit xi."""

    k: tuple[int, ...]
    angle: float

    @property
    def length(self) -> float:
        return math.sqrt(sum(x * x for x in self.k))

    @property
    def unit(self) -> np.ndarray:
        return np.asarray(self.k, float) / self.length


@lru_cache(maxsize=None)
def _lattice_candidates(n: int) -> tuple[np.ndarray, np.ndarray]:
    r = range(-MAX_LATTICE, MAX_LATTICE + 1)
    cand = np.array([k for k in product(r, repeat=n) if any(k) and math.gcd(*k) == 1], dtype=float)
    return cand, np.linalg.norm(cand, axis=1)


def snap_direction(xi: Sequence[float], snap: bool = True) -> LatticeDirection:
    x = np.asarray(xi, dtype=float)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise LabError("direction must be nonzero")
    x = x / nrm
    cand, lens = _lattice_candidates(len(x))
    cos = np.clip(cand @ x / lens, -1.0, 1.0)
    # smallest angle, then shortest step
    best = np.lexsort((lens, -np.round(cos, 15)))[0]
    k = tuple(int(v) for v in cand[best])
    angle = float(np.arccos(cos[best]))
    if not snap and angle > 1e-12:
        raise LabError("direction is not a lattice direction; enable snapping")
    return LatticeDirection(k, angle)


def _pairs(shape: Sequence[int], k: Sequence[int]):
    """Slices ``(src, dst)`` with ``dst = src + k`` inside the grid."""
    src, dst = [], []
    for ki, s in zip(k, shape):
        if ki >= 0:
            src.append(slice(0, max(s - ki, 0)))
            dst.append(slice(ki, s))
        else:
            src.append(slice(-ki, s))
            dst.append(slice(0, max(s + ki, 0)))
    return tuple(src), tuple(dst)


@dataclass
class SliceTV:
    direction: LatticeDirection
    line_labels: np.ndarray
    line_tv: np.ndarray
    line_weight: float
    lhs: float


def slice_tv(f: GridField, xi: Sequence[float], v_star: Sequence[float], snap: bool = True) -> SliceTV:
    """Total variation of ``t -> <v*, u(y + t xi)>`` over the lines of the lattice direction.

    Each lattice line through cell centres represents ``h^(n-1)/|k|`` of
    offset measure on xi-perp; consecutive samples count only when both lie in
    the domain (the slice of the domain).
    """
    x = np.asarray(xi, dtype=float)
    if abs(np.linalg.norm(x) - 1.0) > UNIT_TOL:
        raise LabError("xi must be a unit vector")
    v = np.asarray(v_star, dtype=float)
    if not np.any(v):
        raise LabError("v* must be nonzero")
    d = snap_direction(x, snap)
    dom = f.domain
    g = f.pair(v)
    src, dst = _pairs(dom.shape, d.k)
    both = dom.mask[src] & dom.mask[dst]
    diff = np.abs(g[dst] - g[src])[both]
    # line label: representative cell with the pivot coordinate reduced mod |k_p|
    kk = np.asarray(d.k)
    p = int(np.argmax(np.abs(kk)))
    if kk[p] < 0:
        kk = -kk
    idx = np.stack(np.meshgrid(*[np.arange(s.start, s.stop) for s in src], indexing="ij"), axis=-1)[both]
    t = idx[:, p] // kk[p]
    labels = idx - t[:, None] * kk
    weight = dom.h ** (dom.n - 1) / d.length
    if diff.size:
        uniq, inv = np.unique(labels, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        per_line = np.zeros(len(uniq))
        order = np.argsort(inv, kind="stable")
        bounds = np.searchsorted(inv[order], np.arange(len(uniq) + 1))
        vals = diff[order]
        for j in range(len(uniq)):
            per_line[j] = math.fsum(vals[bounds[j]:bounds[j + 1]].tolist())
    else:
        uniq, per_line = np.zeros((0, dom.n), int), np.zeros(0)
    lhs = fsum(diff) * weight
    return SliceTV(d, uniq, per_line, weight, lhs)


# -- slicing inequality --------------------------------------------------------------


@dataclass
class SliceReport:
    xi: tuple
    v_star: tuple
    w_star: tuple
    xi_norm: float
    lattice: tuple[int, ...]
    snap_angle: float
    lhs: float
    rhs: float
    tv: float
    l1: float
    dual_norm: float
    c_slack: float
    slack: float
    mode: str
    passed: bool = field(default=False)

    @property
    def margin(self) -> float:
        return self.rhs + self.slack - self.lhs

    def to_json(self) -> dict:
        return {
            "type": "slicing",
            "xi": [str(x) for x in self.xi], "v_star": [str(x) for x in self.v_star],
            "w_star": [str(x) for x in self.w_star],
            "xi_norm": self.xi_norm, "scaling": "xi/|xi| with v* multiplied by |xi|",
            "lattice_direction": list(self.lattice), "snap_angle": self.snap_angle,
            "lhs": self.lhs, "rhs": self.rhs, "total_variation": self.tv, "l1": self.l1,
            "dual_norm_w_star": self.dual_norm, "c_slack": self.c_slack, "slack": self.slack,
            "mode": self.mode, "pass": self.passed,
        }


def _unit_data(op: Operator, triple: RankOneTriple):
    fails = triple.failures(op)
    if fails:
        raise LabError("triple rejected: " + "; ".join(fails))
    xi = np.array([float(x) for x in triple.xi])
    nrm = float(np.linalg.norm(xi))
    v = np.array([float(x) for x in triple.v_star]) * nrm
    return xi / nrm, v, nrm


def verify_slicing(f: GridField, op: Operator, triple: RankOneTriple, *, mode: str = "interior",
                   c_slack: float = 10.0) -> SliceReport:
    """Compare the sliced variation along xi with ``|A u|(Omega) |w*|``.

    With ``xi`` of length r the identity ``g_A(w*) = xi (x) v*`` equals
    ``(xi/r) (x) (r v*)``, so slices run along the unit direction with ``r v*``.
    """
    xi_u, v_u, nrm = _unit_data(op, triple)
    st = slice_tv(f, xi_u, v_u)
    tv = total_variation(f, op, mode)
    dn = dual_norm(op, triple.w_star)
    rhs = tv * dn
    l1 = f.l1()
    slack = c_slack * f.domain.h * (tv + l1) + st.direction.angle * rhs
    rep = SliceReport(triple.xi, triple.v_star, triple.w_star, nrm, st.direction.k, st.direction.angle,
                      st.lhs, rhs, tv, l1, dn, c_slack, slack, mode)
    rep.passed = bool(rep.lhs <= rep.rhs + rep.slack)
    return rep


# -- translation -------------------------------------------------------------------


def translation_defect(f: GridField, step: float, xi: Sequence[float], v_star: Sequence[float] | None = None,
                       *, region: str = "domain", snap: bool = True) -> float:
    """``h^n sum_x |<v*, u(x + step xi) - u(x)>|`` with u extended by zero.

    ``region='domain'`` sums over the cells of the domain, ``'whole'`` over all
    of the lattice. ``v_star=None`` uses the Euclidean norm on V instead of a
    pairing. The step must be a whole number of lattice steps ``h |k|``.
    """
    d = snap_direction(xi, snap)
    dom = f.domain
    m_float = step / (dom.h * d.length)
    m = int(round(m_float))
    if m < 1 or abs(m - m_float) > 1e-9 * max(1.0, m_float):
        raise LabError("step must be a positive multiple of the lattice step h*|k|")
    shift = [m * k for k in d.k]
    g = f.values if v_star is None else f.pair(v_star)[..., None]
    ahead = _shift_zero(g, shift + [0])
    diff = np.linalg.norm(ahead - g, axis=-1)
    total = fsum(diff[dom.mask])
    if region == "whole":
        # grid cells outside the domain, then lattice points outside the grid
        total += fsum(np.linalg.norm(ahead, axis=-1)[~dom.mask])
        from_grid = _shift_zero(np.ones(dom.shape, bool), [-s for s in shift])
        total += fsum(np.linalg.norm(g, axis=-1)[dom.mask & ~from_grid])
    elif region != "domain":
        raise LabError(f"unknown region {region!r}")
    return total * dom.cell_volume


@dataclass
class TranslationProbe:
    steps: list[float]
    defects: list[float]
    slope: float
    max_ratio: float
    bound_constant: float
    lattice: tuple[int, ...]
    snap_angle: float
    region: str

    @property
    def passed(self) -> bool:
        return self.slope <= 1.1 * self.bound_constant + 1e-15

    def to_json(self) -> dict:
        return {"type": "translation", "steps": self.steps, "defects": self.defects, "slope": self.slope,
                "max_ratio": self.max_ratio, "bound_constant": self.bound_constant,
                "lattice_direction": list(self.lattice), "snap_angle": self.snap_angle,
                "region": self.region, "pass": self.passed}


def translation_probe(f: GridField, op: Operator, triple: RankOneTriple, steps: Sequence[float] | None = None,
                      *, region: str = "domain") -> TranslationProbe:
    """Fit defect against step and compare with ``|w*| |A u|(R^n)`` (u extended by zero)."""
    xi_u, v_u, _ = _unit_data(op, triple)
    d = snap_direction(xi_u)
    base = f.domain.h * d.length
    if steps is None:
        # geometric ladder up to an eighth of the smallest side
        reach = min(hi - lo for lo, hi in f.domain.extent) / 8
        steps = [base * 2**j for j in range(12) if base * 2**j <= reach + 1e-12] or [base]
    defects = [translation_defect(f, s, xi_u, v_u, region=region) for s in steps]
    s_arr, d_arr = np.asarray(steps), np.asarray(defects)
    slope = float(s_arr @ d_arr / (s_arr @ s_arr))
    bound = total_variation(f, op, "extension") * dual_norm(op, triple.w_star)
    return TranslationProbe(list(map(float, steps)), defects, slope, float(np.max(d_arr / s_arr)), bound,
                            d.k, d.angle, region)


# -- mollification --------------------------------------------------------------------


def _cubic_bspline(t: np.ndarray) -> np.ndarray:
    a = np.abs(t)
    return np.where(a < 1, 2 / 3 - a**2 + a**3 / 2, np.where(a < 2, (2 - a) ** 3 / 6, 0.0))


def kernel_weights(eps: float, h: float) -> np.ndarray:
    """1D weights of the B-spline bump with support radius eps, summing to 1."""
    r = int(math.floor(eps / h + 1e-12))
    j = np.arange(-r, r + 1)
    w = _cubic_bspline(2.0 * j * h / eps)
    return w / w.sum()


def mollify(f: GridField, eps: float, *, boundary: str = "renormalize") -> GridField:
    """Tensor-product cubic B-spline convolution restricted to the domain.

    ``renormalize`` divides by the kernel mass inside the domain, so constants
    are reproduced; ``zero`` convolves the zero extension.
    """
    dom = f.domain
    if eps < 2 * dom.h - 1e-15:
        raise LabError("eps must be at least 2h")
    w = kernel_weights(eps, dom.h)
    u = f.values.copy()
    m = dom.mask.astype(float)
    for ax in range(dom.n):
        u = convolve1d(u, w, axis=ax, mode="constant", cval=0.0)
        if boundary == "renormalize":
            m = convolve1d(m, w, axis=ax, mode="constant", cval=0.0)
    if boundary == "renormalize":
        u = np.divide(u, m[..., None], out=np.zeros_like(u), where=m[..., None] > 0)
    elif boundary != "zero":
        raise LabError(f"unknown boundary mode {boundary!r}")
    return GridField(dom, u, f"{f.name}*eps={eps:g}")


def mollifier_modulus(f: GridField, eps: float) -> float:
    """Upper bound on ``||u * phi - u||_1`` from axis translation defects.

    The kernel is a product, so a shift y splits into axis steps and
    ``||u(.+y) - u|| <= sum_i ||u(.+y_i e_i) - u||``.
    """
    dom = f.domain
    w = kernel_weights(eps, dom.h)
    r = (len(w) - 1) // 2
    total = 0.0
    for i in range(dom.n):
        e = [0.0] * dom.n
        e[i] = 1.0
        for j in range(1, r + 1):
            dj = translation_defect(f, j * dom.h, e, None, region="whole")
            neg = [-x for x in e]
            dj_neg = translation_defect(f, j * dom.h, neg, None, region="whole")
            total += w[r + j] * dj + w[r - j] * dj_neg
    return total

