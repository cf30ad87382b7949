"""Moment seminorm built from the polynomial kernel, and an empirical Poincare constant."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..certify import PolyKernel
from ..poly import Poly
from ..symbol import Operator
from .fd import total_variation
from .grid import GridDomain, GridField, fsum

DEFAULT_BUMPS = 8


def inner_box(dom: GridDomain) -> tuple[tuple[float, float], ...]:
    """Concentric sub-box with half the side lengths of the bounding box."""
    out = []
    for lo, hi in dom.extent:
        c, r = (lo + hi) / 2, (hi - lo) / 4
        out.append((c - r, c + r))
    return tuple(out)


def _box_mask(dom: GridDomain, box) -> np.ndarray:
    m = dom.mask.copy()
    for i, (lo, hi) in enumerate(box):
        x = dom.centers(i)
        m &= (x > lo) & (x < hi)
    return m


def _dist_to_box(dom: GridDomain, box) -> np.ndarray:
    sq = np.zeros(dom.shape)
    for i, (lo, hi) in enumerate(box):
        x = dom.centers(i)
        sq = sq + np.maximum(np.maximum(lo - x, x - hi), 0.0) ** 2
    return np.sqrt(sq)


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity transition: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def bump_functions(dom: GridDomain, omega, count: int) -> list[np.ndarray]:
    """``psi^k`` = 1 on omega, 0 beyond distance ``r_k`` from omega, ``r_k = min(1/k, 0.9 gap)``.

    ``gap`` is the distance from omega to the boundary of the bounding box, so
    every bump has compact support in the box; the radii decrease in k.
    """
    gap = min(min(lo - a, b - hi) for (a, b), (lo, hi) in zip(dom.extent, omega))
    dist = _dist_to_box(dom, omega)
    out = []
    for k in range(1, count + 1):
        r = min(1.0 / k, 0.9 * gap)
        out.append(_smooth_step(1.0 - dist / r) * dom.mask)
    return out


def _eval_poly(p: Poly, coords: Sequence[np.ndarray]) -> np.ndarray:
    out = np.zeros(coords[0].shape)
    for exps, c in p.terms.items():
        term = np.full(coords[0].shape, float(c))
        for x, e in zip(coords, exps):
            if e:
                term = term * x**e
        out = out + term
    return out


def orthonormal_kernel(dom: GridDomain, kernel: PolyKernel, omega) -> list[np.ndarray]:
    """Kernel basis sampled on the grid, orthonormal in ``L^2(omega; V)``."""
    if not kernel.basis:
        return []
    coords = dom.coords()
    samples = np.stack([np.stack([_eval_poly(c, coords) for c in p], axis=-1) for p in kernel.basis])
    w = _box_mask(dom, omega)
    mat = samples[:, w, :].reshape(len(samples), -1).T * math.sqrt(dom.cell_volume)
    q, r = np.linalg.qr(mat)
    diag = np.abs(np.diag(r))
    keep = diag > 1e-10 * diag.max()
    if not keep.all():
        raise ValueError("kernel basis is degenerate on omega; refine the grid")
    # b = samples^T R^{-1}, evaluated everywhere
    coef = np.linalg.inv(r)
    return list(np.einsum("k...,kj->j...", samples, coef))


@dataclass
class MomentSeminorm:
    """``rho(w) = sum_{i,k} 2^-k c_ik^-1 |int psi^k b_i . w|`` with ``c_ik = max(1, |<w, psi^k b_i>|)``."""

    domain: GridDomain
    omega: tuple
    basis: list[np.ndarray]
    bumps: list[np.ndarray]

    @classmethod
    def build(cls, dom: GridDomain, kernel: PolyKernel, bump_count: int = DEFAULT_BUMPS, omega=None):
        if not 1 <= bump_count <= DEFAULT_BUMPS:
            raise ValueError("bump count must lie in 1..8")
        omega = tuple(omega or inner_box(dom))
        basis = orthonormal_kernel(dom, kernel, omega)
        if not basis:
            warnings.warn("empty kernel basis: the moment seminorm vanishes identically", stacklevel=2)
        return cls(dom, omega, basis, bump_functions(dom, omega, bump_count))

    def moments(self, f: GridField) -> np.ndarray:
        """``I[i, k] = int psi^k <b_i, w>``."""
        out = np.zeros((len(self.basis), len(self.bumps)))
        for i, b in enumerate(self.basis):
            dens = np.einsum("...v,...v->...", b, f.values)
            for k, psi in enumerate(self.bumps):
                out[i, k] = fsum(psi * dens) * self.domain.cell_volume
        return out

    def __call__(self, f: GridField) -> float:
        if f.domain.shape != self.domain.shape:
            raise ValueError("field and seminorm live on different grids")
        mom = self.moments(f)
        terms = []
        for i in range(mom.shape[0]):
            for k in range(mom.shape[1]):
                c = max(1.0, abs(mom[i, k]))  # abs keeps every term <= 1 and rho even
                terms.append(abs(mom[i, k]) / (2 ** (k + 1) * c))
        return math.fsum(terms)


def moment_seminorm(f: GridField, kernel: PolyKernel, bump_count: int = DEFAULT_BUMPS, omega=None) -> float:
    return MomentSeminorm.build(f.domain, kernel, bump_count, omega)(f)


@dataclass
class PoincareProbe:
    constant: float
    constant_1star: float
    ratios: list[float]
    ratios_1star: list[float]
    skipped: list[int]
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"type": "poincare", "constant": self.constant, "constant_1star": self.constant_1star,
                "ratios": self.ratios, "ratios_1star": self.ratios_1star, "skipped": self.skipped,
                "warnings": self.warnings}


def poincare_probe(fields: Sequence[GridField], op: Operator, kernel: PolyKernel,
                   bump_count: int = DEFAULT_BUMPS) -> PoincareProbe:
    """Max over fields of ``||v||_1 / (rho(v) + |Av|)`` and the ``L^{n/(n-1)}`` variant on omega."""
    if not fields:
        raise ValueError("need at least one field")
    dom = fields[0].domain
    if any(f.domain.shape != dom.shape or f.domain.h != dom.h for f in fields):
        raise ValueError("all fields must share a domain")
    rho = MomentSeminorm.build(dom, kernel, bump_count)
    inner = _box_mask(dom, rho.omega)
    p = dom.n / (dom.n - 1)
    ratios, ratios_star, skipped, notes = [], [], [], []
    for idx, f in enumerate(fields):
        den = rho(f) + total_variation(f, op)
        if den < 1e-14:
            skipped.append(idx)
            notes.append(f"field {idx} skipped: denominator {den:.3g} below 1e-14")
            continue
        mag = np.linalg.norm(f.values, axis=-1)
        ratios.append(f.l1() / den)
        lp = fsum(mag[inner] ** p * dom.cell_volume) ** (1 / p)
        ratios_star.append(lp / den)
    for msg in notes:
        warnings.warn(msg, stacklevel=2)
    return PoincareProbe(max(ratios, default=math.nan), max(ratios_star, default=math.nan),
                         ratios, ratios_star, skipped, notes)
