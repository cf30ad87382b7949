import random
from fractions import Fraction

import pytest

from bvacert import catalog


def rand_frac(rng: random.Random, lo: int = -5, hi: int = 5, den: int = 7) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, den))


def rand_vec(rng: random.Random, n: int) -> list[Fraction]:
    return [rand_frac(rng) for _ in range(n)]


@pytest.fixture(scope="session")
def grad2():
    return catalog.get("gradient_2d")


@pytest.fixture(scope="session")
def sym2():
    return catalog.get("sym_gradient_2d")


@pytest.fixture(scope="session")
def cr():
    return catalog.get("cauchy_riemann")


@pytest.fixture(scope="session")
def div2():
    return catalog.get("divergence_2d")
