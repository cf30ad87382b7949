from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from bvacert.exact import (GaussQ, RationalParseError, format_gauss, format_rational, parse_gauss,
                           parse_rational, primitive_integer_vector, rationalize, rationalize_ladder)

rationals = st.fractions(max_denominator=10**4).filter(lambda x: abs(x) < 10**6)
gauss = st.builds(GaussQ, rationals, rationals)


@pytest.mark.parametrize("text,want", [("3", F(3)), ("-4/6", F(-2, 3)), ("+5/2", F(5, 2)), ("0", F(0))])
def test_parse_rational(text, want):
    assert parse_rational(text) == want


@pytest.mark.parametrize("bad", ["1/0", "0.5", "1e3", "", "a", "1//2", True, 0.5, None, "1/-2"])
def test_parse_rational_rejects(bad):
    with pytest.raises(RationalParseError):
        parse_rational(bad)


@given(rationals)
def test_rational_round_trip(x):
    assert parse_rational(format_rational(x)) == x


@given(gauss)
def test_gauss_round_trip(z):
    assert parse_gauss(format_gauss(z)) == z


@pytest.mark.parametrize("text,want", [("i", GaussQ(0, 1)), ("-i", GaussQ(0, -1)), ("1-i", GaussQ(1, -1)),
                                       ("2/3+5/7*i", GaussQ(F(2, 3), F(5, 7))), ("3*i", GaussQ(0, 3)),
                                       ("-1/2", GaussQ(F(-1, 2)))])
def test_parse_gauss(text, want):
    assert parse_gauss(text) == want


@given(gauss, gauss)
def test_gauss_field_ops_match_complex(a, b):
    ca, cb = complex(a), complex(b)
    for got, want in ((a + b, ca + cb), (a - b, ca - cb), (a * b, ca * cb)):
        assert abs(complex(got) - want) <= 1e-9 * (1 + abs(want))
    if b:
        assert (a / b) * b == a
    assert (a * a.conjugate()).im == 0 and (a * a.conjugate()).re == a.norm2()


def test_gauss_i_squared():
    i = GaussQ(0, 1)
    assert i * i == GaussQ(-1) == -1
    assert GaussQ(F(1, 2)) == F(1, 2)


@given(st.floats(-1e3, 1e3, allow_nan=False))
def test_rationalize_close(x):
    q = rationalize(x)
    assert q.denominator <= 10**6 and abs(float(q) - x) <= 1e-6


def test_rationalize_ladder_recovers_simple_fraction():
    ladder = rationalize_ladder(1 / 3 + 1e-15)
    assert F(1, 3) in ladder
    assert [q.denominator for q in ladder] == sorted(q.denominator for q in ladder)


def test_primitive_integer_vector():
    assert primitive_integer_vector([F(1, 2), F(-3, 4), F(0)]) == (2, -3, 0)
    assert primitive_integer_vector([F(0), F(0)]) == (0, 0)
