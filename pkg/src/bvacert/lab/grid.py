"""Cell-centred grids, masked domains and V-valued fields."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np


def fsum(a) -> float:
    """Compensated sum of an array (order-independent up to rounding of the inputs)."""
    return math.fsum(np.asarray(a, dtype=float).ravel().tolist())


@dataclass
class GridDomain:
    """Cells of side h; ``mask`` marks the cells whose centres lie in the domain.

    Graph domains carry ``graph`` = a(x') sampled at the base cell centres
    (shape ``shape[:-1]``) and are ``{lo_n < x_n < a(x')}``.
    """

    n: int
    h: float
    lo: tuple[float, ...]
    shape: tuple[int, ...]
    mask: np.ndarray
    kind: str = "box"
    graph: np.ndarray | None = None
    lipschitz: float | None = None

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError("only 2D and 3D grids are supported")
        if not self.h > 0:
            raise ValueError("h must be positive")
        self.lo = tuple(float(x) for x in self.lo)
        self.shape = tuple(int(s) for s in self.shape)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.shape:
            raise ValueError("mask shape does not match the grid")
        if self.kind == "graph":
            if self.graph is None:
                raise ValueError("graph domains need the sampled graph")
            self.graph = np.asarray(self.graph, dtype=float)
            if self.graph.shape != self.shape[:-1]:
                raise ValueError("graph samples must live on the base grid")
            if not self.graph.min() > self.lo[-1]:
                raise ValueError("the graph must lie strictly above the bottom of the box")
            expect = self.centers(self.n - 1) < self.graph[..., None]
            if not np.array_equal(expect, self.mask):
                raise ValueError("mask inconsistent with the graph")
            if self.lipschitz is None:
                self.lipschitz = graph_lipschitz(self.graph, self.h)
        elif self.kind != "box":
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @property
    def extent(self) -> tuple[tuple[float, float], ...]:
        return tuple((lo, lo + s * self.h) for lo, s in zip(self.lo, self.shape))

    def axis(self, i: int) -> np.ndarray:
        return self.lo[i] + (np.arange(self.shape[i]) + 0.5) * self.h

    def centers(self, i: int) -> np.ndarray:
        """Coordinate i of every cell centre, broadcast to the full grid shape."""
        shp = [1] * self.n
        shp[i] = self.shape[i]
        return np.broadcast_to(self.axis(i).reshape(shp), self.shape)

    def coords(self) -> list[np.ndarray]:
        return [self.centers(i) for i in range(self.n)]

    @classmethod
    def box(cls, n: int, h: float, extent: Sequence[tuple[float, float]] | None = None) -> "GridDomain":
        extent = extent or [(0.0, 1.0)] * n
        shape = tuple(int(round((b - a) / h)) for a, b in extent)
        for (a, b), s in zip(extent, shape):
            if abs(a + s * h - b) > 1e-9 * max(1.0, abs(b)):
                raise ValueError("extent must be a whole number of cells")
        return cls(n, h, tuple(a for a, _ in extent), shape, np.ones(shape, bool))

    @classmethod
    def graph_domain(cls, a: Callable[..., np.ndarray], h: float, base: Sequence[tuple[float, float]],
                     height: tuple[float, float]) -> "GridDomain":
        """``{(x', x_n) : x' in base, height[0] < x_n < a(x')}`` inside ``base x height``."""
        n = len(base) + 1
        tmp = cls.box(n, h, list(base) + [height])
        xs = [tmp.axis(i) for i in range(n - 1)]
        grids = np.meshgrid(*xs, indexing="ij")
        samples = np.asarray(a(*grids), dtype=float)
        if samples.max() >= height[1]:
            raise ValueError("the graph leaves the bounding box")
        mask = tmp.centers(n - 1) < samples[..., None]
        return cls(n, h, tmp.lo, tmp.shape, mask, "graph", samples)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "h": self.h, "lo": list(self.lo), "shape": list(self.shape)}
        if self.kind == "graph":
            out["graph"] = self.graph.ravel().tolist()
            out["lipschitz"] = self.lipschitz
        elif not self.mask.all():
            out["mask"] = np.flatnonzero(~self.mask.ravel()).tolist()
        return out

    @classmethod
    def from_json(cls, d: dict) -> "GridDomain":
        n, shape = int(d["n"]), tuple(int(s) for s in d["shape"])
        h, lo = float(d["h"]), tuple(float(x) for x in d["lo"])
        if d.get("kind", "box") == "graph":
            g = np.asarray(d["graph"], dtype=float).reshape(shape[:-1])
            ax = lo[-1] + (np.arange(shape[-1]) + 0.5) * h
            mask = ax < g[..., None]
            return cls(n, h, lo, shape, mask, "graph", g, d.get("lipschitz"))
        mask = np.ones(shape, bool)
        if "mask" in d:
            mask.ravel()[np.asarray(d["mask"], dtype=int)] = False
        return cls(n, h, lo, shape, mask)


def graph_lipschitz(a: np.ndarray, h: float) -> float:
    """Largest finite-difference slope of the sampled graph."""
    slopes = [0.0]
    for i in range(a.ndim):
        if a.shape[i] > 1:
            slopes.append(float(np.abs(np.diff(a, axis=i)).max() / h))
    return max(slopes)


@dataclass
class GridField:
    """V-valued samples at cell centres; forced to zero outside the mask."""

    domain: GridDomain
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape == self.domain.shape:
            v = v[..., None]
        if v.shape[:-1] != self.domain.shape:
            raise ValueError("field values do not match the grid")
        if not np.isfinite(v).all():
            raise ValueError("field values must be finite")
        self.values = np.where(self.domain.mask[..., None], v, 0.0)

    @property
    def dim_v(self) -> int:
        return self.values.shape[-1]

    def l1(self) -> float:
        return fsum(np.linalg.norm(self.values, axis=-1)) * self.domain.cell_volume

    def pair(self, v_star: Sequence[float]) -> np.ndarray:
        """Scalar field ``<v*, u>``."""
        v = np.asarray(v_star, dtype=float)
        if v.shape != (self.dim_v,):
            raise ValueError("v* has the wrong length")
        return self.values @ v

    def __add__(self, other: "GridField") -> "GridField":
        return GridField(self.domain, self.values + other.values)

    def scaled(self, c: float) -> "GridField":
        return GridField(self.domain, c * self.values)

    @classmethod
    def from_function(cls, domain: GridDomain, fn: Callable[..., Sequence[np.ndarray]], name: str = "") -> "GridField":
        comps = fn(*domain.coords())
        arr = np.stack([np.broadcast_to(np.asarray(c, dtype=float), domain.shape) for c in comps], axis=-1)
        return cls(domain, arr, name)


@dataclass
class DiscreteMeasure:
    """W-valued cell masses on a (possibly padded) grid."""

    masses: np.ndarray
    gram_factor: np.ndarray
    provenance: dict = field(default_factory=dict)

    def densities_norm(self) -> np.ndarray:
        return np.linalg.norm(self.masses @ self.gram_factor.T, axis=-1)

    def total_variation(self) -> float:
        return fsum(self.densities_norm())


# -- field files -----------------------------------------------------------------


def save_field(f: GridField, path) -> None:
    """Raw float64 (``.bin``) or CSV (one row per cell) plus a ``<path>.json`` sidecar."""
    path = Path(path)
    flat = f.values.reshape(-1, f.dim_v)
    if path.suffix == ".csv":
        np.savetxt(path, flat, delimiter=",", fmt="%.17g")
    else:
        flat.astype("<f8").tofile(path)
    meta = f.domain.to_json()
    meta["dimV"] = f.dim_v
    meta["name"] = f.name
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=1))


def load_field(path) -> GridField:
    path = Path(path)
    side = Path(str(path) + ".json")
    if not side.exists():
        raise FileNotFoundError(f"missing sidecar {side}")
    meta = json.loads(side.read_text())
    dom = GridDomain.from_json(meta)
    dim_v = int(meta["dimV"])
    if path.suffix == ".csv":
        flat = np.loadtxt(path, delimiter=",", ndmin=2)
    else:
        flat = np.fromfile(path, dtype="<f8")
    expected = int(np.prod(dom.shape)) * dim_v
    if flat.size != expected:
        raise ValueError(f"{path}: expected {expected} values, found {flat.size}")
    return GridField(dom, flat.reshape(*dom.shape, dim_v), meta.get("name", ""))
