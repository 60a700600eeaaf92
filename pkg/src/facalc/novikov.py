"""Exact arithmetic in truncated universal Novikov rings over the rationals.

A scalar is a finite sum of monomials ``a * T^lambda * e^n`` with rational
coefficient ``a``, rational energy ``lambda`` and integer exponent ``n``.
``T`` has degree 0 and carries the energy filtration; ``e`` is invertible of
degree 2, so every scalar is concentrated in even degrees and the ring is
strictly commutative.

Three variants are supported:

* ``nov``  -- arbitrary rational energies (filtered over the ``rat`` instance),
* ``nov0`` -- energies >= 0 (the subring, filtered over ``ratplus`` or ``rat``),
* ``q``    -- plain rationals: T and e do not occur (energy 0, exponent 0),
  with the unit filtration (level 0 for nonzero scalars).

Completed infinite series are represented only through truncation: every
stored scalar is finite, and working modulo an energy cutoff models one stage
of the completion limit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Tuple

from . import levels
from .errors import FacalcError, VariantMismatch
from .levels import INFINITY, Level

NOV = "nov"
NOV0 = "nov0"
PLAIN = "q"
VARIANTS = (NOV, NOV0, PLAIN)

Term = Tuple[Fraction, Fraction, int]  # (coefficient, energy, exponent)


def _validate_term(variant: str, coeff: Fraction, energy: Fraction, expo: int) -> None:
    if variant == NOV0 and energy < 0:
        raise FacalcError(f"variant 'nov0' requires energy >= 0, got {energy}")
    if variant == PLAIN and (energy != 0 or expo != 0):
        raise FacalcError("variant 'q' admits only T^0 e^0 terms")


@dataclass(frozen=True)
class NovikovScalar:
    """A normalized finite sum of monomials, sorted by (energy, exponent)."""

    terms: Tuple[Term, ...]
    variant: str

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        return f"NovikovScalar({format_scalar(self)!r}, {self.variant})"


def scalar(terms: Iterable[tuple] = (), variant: str = NOV) -> NovikovScalar:
    """Build a scalar from raw (coeff, energy, expo) triples, normalizing."""
    if variant not in VARIANTS:
        raise FacalcError(f"unknown coefficient variant {variant!r}")
    merged: dict = {}
    for c, lam, n in terms:
        c = Fraction(c)
        lam = Fraction(lam)
        n = int(n)
        _validate_term(variant, c, lam, n)
        key = (lam, n)
        merged[key] = merged.get(key, Fraction(0)) + c
    normal = tuple(
        (c, lam, n) for (lam, n), c in sorted(merged.items()) if c != 0
    )
    return NovikovScalar(normal, variant)


def zero(variant: str = NOV) -> NovikovScalar:
    return scalar((), variant)


def one(variant: str = NOV) -> NovikovScalar:
    return scalar([(1, 0, 0)], variant)


def monomial(coeff, energy=0, expo: int = 0, variant: str = NOV) -> NovikovScalar:
    return scalar([(coeff, energy, expo)], variant)


def _check_variant(x: NovikovScalar, y: NovikovScalar) -> str:
    if x.variant != y.variant:
        raise VariantMismatch(f"variants {x.variant!r} and {y.variant!r}")
    return x.variant


def nov_add(x: NovikovScalar, y: NovikovScalar) -> NovikovScalar:
    variant = _check_variant(x, y)
    return scalar(list(x.terms) + list(y.terms), variant)


def nov_neg(x: NovikovScalar) -> NovikovScalar:
    return NovikovScalar(tuple((-c, lam, n) for c, lam, n in x.terms), x.variant)


def nov_sub(x: NovikovScalar, y: NovikovScalar) -> NovikovScalar:
    return nov_add(x, nov_neg(y))


def nov_mul(x: NovikovScalar, y: NovikovScalar) -> NovikovScalar:
    variant = _check_variant(x, y)
    prods = [
        (cx * cy, lx + ly, nx + ny)
        for cx, lx, nx in x.terms
        for cy, ly, ny in y.terms
    ]
    return scalar(prods, variant)


def nov_rat_mul(q, x: NovikovScalar) -> NovikovScalar:
    q = Fraction(q)
    return scalar([(q * c, lam, n) for c, lam, n in x.terms], x.variant)


def term_level(energy: Fraction, instance: str) -> Level:
    return levels.make_level(instance, energy)


def nov_level(x: NovikovScalar, instance: str) -> Level:
    """The largest l with x in F^l: the minimum energy, or INFINITY for 0."""
    if x.is_zero():
        return INFINITY
    lowest = min(lam for _, lam, _ in x.terms)
    return term_level(lowest, instance)


def nov_truncate(x: NovikovScalar, cutoff: Level) -> NovikovScalar:
    """Drop the part of x lying in F^cutoff (all terms of energy >= cutoff)."""
    kept = [
        (c, lam, n)
        for c, lam, n in x.terms
        if not levels.level_leq(cutoff, term_level(lam, cutoff.instance))
    ]
    return NovikovScalar(tuple(kept), x.variant)


def degrees(x: NovikovScalar) -> set:
    """Degrees 2n of the homogeneous pieces of x."""
    return {2 * n for _, _, n in x.terms}


def by_expo(x: NovikovScalar) -> dict:
    """Split x into homogeneous pieces keyed by the e-exponent."""
    out: dict = {}
    for c, lam, n in x.terms:
        out.setdefault(n, []).append((c, lam, n))
    return {n: NovikovScalar(tuple(ts), x.variant) for n, ts in out.items()}


# Textual monomial syntax: "a*T^{p/q}*e^{n}", sums joined by "+", "0" for zero.

_MONOMIAL_RE = re.compile(
    r"^(?P<coeff>-?\d+(?:/\d+)?)"
    r"(?:\*T\^\{(?P<energy>-?\d+(?:/\d+)?)\})?"
    r"(?:\*e\^\{(?P<expo>-?\d+)\})?$"
)


def parse_scalar(text: str, variant: str = NOV) -> NovikovScalar:
    text = text.strip()
    if text == "0":
        return zero(variant)
    terms = []
    for part in text.split("+"):
        part = part.strip()
        m = _MONOMIAL_RE.match(part)
        if m is None:
            raise FacalcError(f"cannot parse scalar monomial {part!r}")
        coeff = Fraction(m.group("coeff"))
        energy = Fraction(m.group("energy") or 0)
        expo = int(m.group("expo") or 0)
        terms.append((coeff, energy, expo))
    return scalar(terms, variant)


def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_scalar(x: NovikovScalar) -> str:
    if x.is_zero():
        return "0"
    return "+".join(
        f"{_frac_str(c)}*T^{{{_frac_str(lam)}}}*e^{{{n}}}" for c, lam, n in x.terms
    )
