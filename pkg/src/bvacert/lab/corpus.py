"""Reference fields used by the lab harness and the tests."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .fd import mollify
from .grid import GridDomain, GridField

# component weights, so vector fields are not multiples of one profile
_WEIGHTS = (1.0, 0.5, -0.75)


def _weights(dim_v: int) -> list[float]:
    return [_WEIGHTS[j % 3] for j in range(dim_v)]


def indicator_square(dom: GridDomain, dim_v: int = 1, lo: float = 0.25, hi: float = 0.75) -> GridField:
    inside = np.ones(dom.shape, bool)
    for x in dom.coords():
        inside &= (x > lo) & (x < hi)
    return GridField(dom, np.stack([w * inside for w in _weights(dim_v)], axis=-1), "square")


def half_plane(dom: GridDomain, dim_v: int = 1, cut: float = 0.5) -> GridField:
    side = dom.centers(0) < cut
    return GridField(dom, np.stack([w * side for w in _weights(dim_v)], axis=-1), "half_plane")


def _bump(r2: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(r2 < 1, np.exp(1 - 1 / np.where(r2 < 1, 1 - r2, 1.0)), 0.0)


def smooth_bump(dom: GridDomain, dim_v: int = 1, radius: float = 0.3) -> GridField:
    comps = []
    for j in range(dim_v):
        centre = [0.5 + 0.05 * ((i + j) % 2 - 0.5) for i in range(dom.n)]
        r2 = sum((x - c) ** 2 for x, c in zip(dom.coords(), centre)) / radius**2
        comps.append(_WEIGHTS[j % 3] * _bump(r2))
    return GridField(dom, np.stack(comps, axis=-1), "bump")


def affine(dom: GridDomain, dim_v: int = 1) -> GridField:
    xs = dom.coords()
    comps = [sum((1 + ((i + 2 * j) % 3)) * 0.5 * x for i, x in enumerate(xs)) - 0.25 * j for j in range(dim_v)]
    return GridField(dom, np.stack(comps, axis=-1), "affine")


def rotation_ball(dom: GridDomain, dim_v: int = 1, radius: float = 0.35) -> GridField:
    """``(x_2, x_1, ...)`` about the centre times a smooth cutoff of the ball."""
    xs = [x - 0.5 for x in dom.coords()]
    cut = _bump(sum(x**2 for x in xs) / radius**2)
    comps = [xs[(j + 1) % dom.n] * cut for j in range(dim_v)]
    return GridField(dom, np.stack(comps, axis=-1), "rotation_ball")


def smoothed_square(dom: GridDomain, dim_v: int = 1, eps: float = 1 / 8) -> GridField:
    f = mollify(indicator_square(dom, dim_v), eps)
    f.name = "smoothed_square"
    return f


CORPUS: dict[str, Callable[[GridDomain, int], GridField]] = {
    "square": indicator_square,
    "half_plane": half_plane,
    "bump": smooth_bump,
    "affine": affine,
    "rotation_ball": rotation_ball,
    "smoothed_square": smoothed_square,
}

SMOOTH = ("bump", "affine", "rotation_ball", "smoothed_square")


def corpus(dom: GridDomain, dim_v: int) -> list[GridField]:
    return [make(dom, dim_v) for make in CORPUS.values()]
