"""Single-field mutations of JSON documents for integrity tests."""

from __future__ import annotations

import copy
import random
from fractions import Fraction

SKIP = ("volatile", "digest")


def leaf_paths(doc, prefix=()):
    if isinstance(doc, dict):
        for k in sorted(doc):
            if not prefix and k in SKIP:
                continue
            yield from leaf_paths(doc[k], prefix + (k,))
    elif isinstance(doc, list) and doc:
        for i, x in enumerate(doc):
            yield from leaf_paths(x, prefix + (i,))
    else:
        yield prefix


def _get(doc, path):
    for p in path:
        doc = doc[p]
    return doc


def _mutate_value(x, rng: random.Random):
    if isinstance(x, bool):
        return not x
    if x is None:
        return 0
    if isinstance(x, int):
        return x + rng.choice((-1, 1, 2))
    if isinstance(x, float):
        return x * 1.5 + 1e-3 if x else 0.5
    if isinstance(x, str):
        try:
            return str(Fraction(x) + Fraction(1, 7))
        except (ValueError, ZeroDivisionError):
            return x + "_x"
    if isinstance(x, list):
        return [0]
    if isinstance(x, dict):
        return {"x": 0}
    raise TypeError(type(x))


def mutations(doc: dict, count: int, seed: int = 0):
    """Yield ``(path, mutated_doc)`` for ``count`` random leaves."""
    rng = random.Random(seed)
    paths = list(leaf_paths(doc))
    for _ in range(count):
        path = rng.choice(paths)
        new = copy.deepcopy(doc)
        parent = _get(new, path[:-1])
        parent[path[-1]] = _mutate_value(parent[path[-1]], rng)
        yield path, new
