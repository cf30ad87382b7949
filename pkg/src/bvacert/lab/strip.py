"""Strip estimate below the graph of a Lipschitz function."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..spectrum import RankOneTriple
from ..symbol import Operator
from .fd import LabError, total_variation
from .grid import GridField, fsum


@dataclass
class StripReport:
    alpha0: float
    alpha: float
    lipschitz: float
    rho1: float
    lhs: float
    surface_term: float
    variation_term: float
    c_slack: float
    slack: float
    passed: bool

    @property
    def rhs(self) -> float:
        return self.surface_term + self.variation_term

    def to_json(self) -> dict:
        return {"type": "boundary_strip", "alpha0": self.alpha0, "alpha": self.alpha,
                "lipschitz": self.lipschitz, "rho1": self.rho1, "lhs": self.lhs, "rhs": self.rhs,
                "surface_term": self.surface_term, "variation_term": self.variation_term,
                "c_slack": self.c_slack, "slack": self.slack, "pass": self.passed}


def boundary_strip_estimate(f: GridField, op: Operator, triple: RankOneTriple, alpha0: float, alpha: float,
                            *, c_slack: float = 10.0) -> StripReport:
    """Bound the mass of ``<v*, u>`` between the graphs shifted down by alpha and alpha0.

    lhs = int over ``{a - alpha0 < x_n < a - alpha}`` of ``|<v*, u>|``, using the
    exact vertical overlap of every cell with the strip. The right side is
    ``(alpha0 - alpha)/rho1`` times the surface integral of ``|<v*, u>|`` on the
    lower shifted graph plus ``(alpha0 - alpha)`` times the vertical variation
    inside the strip, column by column. The triple must have xi parallel to e_n.
    """
    dom = f.domain
    if dom.kind != "graph":
        raise LabError("the strip estimate needs a graph domain")
    fails = triple.failures(op)
    if fails:
        raise LabError("triple rejected: " + "; ".join(fails))
    xi = [float(x) for x in triple.xi]
    if any(xi[:-1]) or xi[-1] == 0:
        raise LabError("xi must be parallel to e_n")
    if not 0 < alpha < alpha0:
        raise LabError("need 0 < alpha < alpha0")
    h, a, bottom = dom.h, dom.graph, dom.lo[-1]
    if alpha <= h / 2:
        raise LabError("alpha must exceed h/2 so the upper strip cells lie in the domain")
    if (a - alpha0).min() - h <= bottom:
        raise LabError("strip leaves the domain through the bottom of the box")
    v = np.array([float(x) for x in triple.v_star]) * xi[-1]
    g = f.pair(v)
    nz = dom.shape[-1]
    z = dom.axis(dom.n - 1)
    lo_cell, hi_cell = z - h / 2, z + h / 2
    top, low = (a - alpha)[..., None], (a - alpha0)[..., None]
    overlap = np.clip(np.minimum(hi_cell, top) - np.maximum(lo_cell, low), 0.0, None)
    if np.any((overlap > 0) & ~dom.mask):
        raise LabError("strip not contained in the domain")
    col = h ** (dom.n - 1)
    lhs = fsum(overlap * np.abs(g)) * col

    j0 = np.floor((a - alpha0 - bottom) / h).astype(int)
    j1 = np.floor((a - alpha - bottom) / h).astype(int)
    j1 = np.minimum(j1, nz - 1)
    vals_low = np.take_along_axis(g, j0[..., None], axis=-1)[..., 0]
    if dom.n > 1 and a.size > 1:
        grads = np.gradient(a, h) if a.ndim > 1 else [np.gradient(a, h)]
        stretch = np.sqrt(1.0 + sum(gr**2 for gr in grads))
    else:
        stretch = np.ones_like(a)
    lip = float(dom.lipschitz)
    rho1 = 1.0 / math.sqrt(1.0 + lip**2)
    width = alpha0 - alpha
    surface = width / rho1 * fsum(np.abs(vals_low) * stretch) * col
    jumps = np.abs(np.diff(g, axis=-1))
    j = np.arange(nz - 1)
    inside = (j >= j0[..., None]) & (j < j1[..., None])
    variation = width * fsum(jumps * inside) * col

    slack = c_slack * h * (total_variation(f, op) + f.l1())
    lhs_ok = lhs <= surface + variation + slack
    return StripReport(alpha0, alpha, lip, rho1, lhs, surface, variation, c_slack, slack, bool(lhs_ok))
