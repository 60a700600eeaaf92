from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from facalc import levels, novikov
from facalc.errors import FacalcError, VariantMismatch
from facalc.levels import INFINITY, rat
from facalc.novikov import (
    NovikovScalar,
    format_scalar,
    monomial,
    nov_add,
    nov_level,
    nov_mul,
    nov_neg,
    nov_truncate,
    one,
    parse_scalar,
    scalar,
    zero,
)

coeffs = st.fractions(max_denominator=6).filter(lambda q: q != 0)
energies = st.fractions(max_denominator=4)
expos = st.integers(min_value=-3, max_value=3)
terms = st.lists(st.tuples(coeffs, energies, expos), max_size=4)
scalars = terms.map(lambda ts: scalar(ts, "nov"))


def schoolbook_mul(x: NovikovScalar, y: NovikovScalar) -> NovikovScalar:
    """Independent oracle: accumulate products in a dict keyed by monomial."""
    acc = {}
    for cx, lx, nx in x.terms:
        for cy, ly, ny in y.terms:
            key = (lx + ly, nx + ny)
            acc[key] = acc.get(key, Fraction(0)) + cx * cy
    return scalar([(c, lam, n) for (lam, n), c in acc.items() if c], "nov")


@given(x=scalars, y=scalars)
def test_mul_matches_schoolbook_oracle(x, y):
    assert nov_mul(x, y) == schoolbook_mul(x, y)


def test_mul_examples():
    x = monomial(3, 0, 0)
    y = monomial(2, Fraction(1, 2), 1)
    assert nov_mul(x, y) == monomial(6, Fraction(1, 2), 1)
    assert nov_mul(one(), y) == y
    assert nov_mul(monomial(1, 1, 1), monomial(1, 1, -1)) == monomial(1, 2, 0)


@given(x=scalars, y=scalars, z=scalars)
@settings(max_examples=60)
def test_ring_axioms(x, y, z):
    assert nov_add(x, y) == nov_add(y, x)
    assert nov_add(nov_add(x, y), z) == nov_add(x, nov_add(y, z))
    assert nov_mul(x, y) == nov_mul(y, x)
    assert nov_mul(nov_mul(x, y), z) == nov_mul(x, nov_mul(y, z))
    assert nov_mul(x, nov_add(y, z)) == nov_add(nov_mul(x, y), nov_mul(x, z))
    assert nov_add(x, nov_neg(x)).is_zero()
    assert nov_add(x, zero()) == x


def test_add_examples():
    t = monomial(1, Fraction(1, 2), 1)
    assert nov_add(t, nov_neg(t)).is_zero()
    assert nov_add(monomial(2, 0, 0), monomial(3, 0, 0)) == monomial(5, 0, 0)


def test_truncate():
    assert nov_truncate(monomial(1, Fraction(3, 2), 1), rat(1)).is_zero()
    x = scalar([(2, Fraction(1, 2), 0), (1, 2, 0)], "nov")
    assert nov_truncate(x, rat(1)) == monomial(2, Fraction(1, 2), 0)
    assert nov_truncate(nov_truncate(x, rat(1)), rat(1)) == nov_truncate(x, rat(1))


nonneg_terms = st.lists(
    st.tuples(coeffs, energies.map(abs), expos), max_size=4
)
nonneg_scalars = nonneg_terms.map(lambda ts: scalar(ts, "nov0"))


@given(x=nonneg_scalars, y=nonneg_scalars)
@settings(max_examples=60)
def test_truncation_is_ring_congruence(x, y):
    # Holds over the nonnegative-energy subring, where the cutoff part is an
    # ideal; with negative energies a discarded factor can be pulled back
    # below the cutoff by the other factor, so no such congruence exists.
    cutoff = rat(1)
    lhs = nov_truncate(nov_mul(x, y), cutoff)
    rhs = nov_truncate(nov_mul(nov_truncate(x, cutoff), nov_truncate(y, cutoff)), cutoff)
    assert lhs == rhs


def test_truncation_congruence_fails_with_negative_energies():
    x = monomial(1, -1, 0)
    y = monomial(1, Fraction(3, 2), 0)
    cutoff = rat(1)
    assert nov_truncate(nov_mul(x, y), cutoff) == monomial(1, Fraction(1, 2), 0)
    assert nov_mul(nov_truncate(x, cutoff), nov_truncate(y, cutoff)).is_zero()


def test_level():
    assert nov_level(zero(), "rat") == INFINITY
    x = scalar([(2, Fraction(1, 2), 1), (1, 3, 0)], "nov")
    assert nov_level(x, "rat") == rat(Fraction(1, 2))
    assert nov_level(nov_mul(monomial(1, 1, 0), monomial(1, 1, 0)), "rat") == rat(2)


def test_level_multiplicative_exhaustive():
    pool = [
        zero(),
        one(),
        monomial(1, 1, 0),
        monomial(-2, Fraction(1, 2), 1),
        scalar([(1, 0, 0), (-1, 1, 1)], "nov"),
        scalar([(1, -1, 0), (1, 2, 0)], "nov"),
    ]
    for x in pool:
        for y in pool:
            lhs = nov_level(nov_mul(x, y), "rat")
            rhs = levels.level_add(nov_level(x, "rat"), nov_level(y, "rat"))
            assert levels.level_leq(rhs, lhs)


def test_parse_format_roundtrip():
    for text in ["0", "1*T^{0}*e^{0}", "3/2*T^{-1/2}*e^{2}+-1*T^{1}*e^{0}"]:
        assert format_scalar(parse_scalar(text, "nov")) == text
    with pytest.raises(FacalcError):
        parse_scalar("T^{1}", "nov")
    with pytest.raises(FacalcError):
        parse_scalar("1*T^{0.5}*e^{0}", "nov")


def test_variant_rules():
    with pytest.raises(FacalcError):
        monomial(1, -1, 0, "nov0")
    with pytest.raises(FacalcError):
        monomial(1, 1, 0, "q")
    with pytest.raises(VariantMismatch):
        nov_add(one("nov"), one("q"))
    # Plain rationals sit at level zero.
    assert nov_level(one("q"), "discrete") == levels.discrete(0)
    assert nov_level(zero("q"), "discrete") == INFINITY
