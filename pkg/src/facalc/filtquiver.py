"""Graded filtered quivers with finite free hom modules, and the sign engine.

A quiver is a set of named objects with, for each ordered pair, a finite list
of hom generators.  Each generator carries a (shifted) integer degree and a
base filtration level; hom elements are finite sums of generators with
Novikov scalar coefficients.

Maps act on the right, ``(x)f``, and are extended linearly over the
coefficient ring.  Every sign in the package is produced by ``koszul_sign``,
which commutes operators past elements one transposition at a time with the
rule tau(x (x) y) = (-1)^{deg x * deg y} y (x) x.  Coefficients sit in even
degrees, so only the generator degrees enter parities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

from . import levels, novikov
from .errors import DegreeMismatch, FacalcError, LevelViolation, ObjectMismatch
from .levels import INFINITY, Level
from .novikov import NovikovScalar


@dataclass(frozen=True)
class HomGenerator:
    """A basis element of a hom module.  ``sdeg`` is the stored degree."""

    gid: str
    src: str
    dst: str
    sdeg: int
    base_level: Level

    def __post_init__(self):
        if self.base_level.is_infinite():
            raise FacalcError(f"generator {self.gid!r} cannot have infinite base level")


class FiltQuiver:
    """Objects plus per-pair generator lists; generator ids are unique."""

    def __init__(self, name: str, objects: Iterable[str], gens: Iterable[HomGenerator]):
        self.name = name
        self.objects: Tuple[str, ...] = tuple(objects)
        if len(set(self.objects)) != len(self.objects):
            raise FacalcError(f"duplicate object names in quiver {name!r}")
        obj_set = set(self.objects)
        self.gens: Tuple[HomGenerator, ...] = tuple(gens)
        self._by_id: Dict[str, HomGenerator] = {}
        self._by_pair: Dict[Tuple[str, str], List[HomGenerator]] = {}
        for g in self.gens:
            if g.src not in obj_set or g.dst not in obj_set:
                raise ObjectMismatch(f"generator {g.gid!r} uses undeclared objects")
            if g.gid in self._by_id:
                raise FacalcError(f"duplicate generator id {g.gid!r} in quiver {name!r}")
            self._by_id[g.gid] = g
            self._by_pair.setdefault((g.src, g.dst), []).append(g)

    def gen(self, gid: str) -> HomGenerator:
        try:
            return self._by_id[gid]
        except KeyError:
            raise FacalcError(f"no generator {gid!r} in quiver {self.name!r}") from None

    def gens_between(self, src: str, dst: str) -> List[HomGenerator]:
        return list(self._by_pair.get((src, dst), []))

    def gens_from(self, src: str) -> List[HomGenerator]:
        return [g for g in self.gens if g.src == src]

    def __repr__(self) -> str:
        return f"FiltQuiver({self.name!r}, {len(self.objects)} objects, {len(self.gens)} gens)"


class HomElement:
    """A normalized finite sum of (generator, scalar) with fixed endpoints."""

    __slots__ = ("src", "dst", "terms")

    def __init__(self, src: str, dst: str, terms: Iterable[Tuple[HomGenerator, NovikovScalar]] = ()):
        merged: Dict[str, Tuple[HomGenerator, NovikovScalar]] = {}
        for g, c in terms:
            if g.src != src or g.dst != dst:
                raise ObjectMismatch(
                    f"term {g.gid!r}: ({g.src},{g.dst}) does not match hom ({src},{dst})"
                )
            if g.gid in merged:
                merged[g.gid] = (g, novikov.nov_add(merged[g.gid][1], c))
            else:
                merged[g.gid] = (g, c)
        self.src = src
        self.dst = dst
        self.terms: Tuple[Tuple[HomGenerator, NovikovScalar], ...] = tuple(
            (g, c) for gid, (g, c) in sorted(merged.items()) if not c.is_zero()
        )

    @staticmethod
    def zero(src: str, dst: str) -> "HomElement":
        return HomElement(src, dst)

    @staticmethod
    def from_gen(g: HomGenerator, coeff: NovikovScalar) -> "HomElement":
        return HomElement(g.src, g.dst, [(g, coeff)])

    def is_zero(self) -> bool:
        return not self.terms

    def add(self, other: "HomElement") -> "HomElement":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if (self.src, self.dst) != (other.src, other.dst):
            raise ObjectMismatch("adding hom elements with different endpoints")
        return HomElement(self.src, self.dst, list(self.terms) + list(other.terms))

    def neg(self) -> "HomElement":
        return HomElement(self.src, self.dst, [(g, novikov.nov_neg(c)) for g, c in self.terms])

    def scale(self, s: NovikovScalar) -> "HomElement":
        return HomElement(self.src, self.dst, [(g, novikov.nov_mul(c, s)) for g, c in self.terms])

    def rat_scale(self, q) -> "HomElement":
        return HomElement(self.src, self.dst, [(g, novikov.nov_rat_mul(q, c)) for g, c in self.terms])

    def level(self, instance: str) -> Level:
        """min over terms of base_level(g) + energy level of the coefficient."""
        best = INFINITY
        for g, c in self.terms:
            lvl = levels.level_add(g.base_level, novikov.nov_level(c, instance))
            best = levels.level_min(best, lvl)
        return best

    def degree_pieces(self) -> Dict[int, "HomElement"]:
        """Split into homogeneous layers: degree = sdeg(g) + 2 * exponent."""
        out: Dict[int, List[Tuple[HomGenerator, NovikovScalar]]] = {}
        for g, c in self.terms:
            for n, piece in novikov.by_expo(c).items():
                out.setdefault(g.sdeg + 2 * n, []).append((g, piece))
        return {d: HomElement(self.src, self.dst, ts) for d, ts in sorted(out.items())}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HomElement)
            and self.src == other.src
            and self.dst == other.dst
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.src, self.dst, self.terms))

    def __repr__(self) -> str:
        if self.is_zero():
            return f"HomElement(0: {self.src}->{self.dst})"
        body = " + ".join(f"({novikov.format_scalar(c)})*{g.gid}" for g, c in self.terms)
        return f"HomElement({body})"


def koszul_sign(op_degs: List[int], arg_degs: List[int]) -> int:
    """Sign of applying the operator tensor op_1 (x) ... (x) op_n to
    arguments x_1 (x) ... (x) x_n on the right.

    Computed literally: starting from x_1 ... x_n op_1 ... op_n, each op_i is
    moved leftwards one transposition at a time until it sits right after its
    argument x_i; swapping past an item of degree d costs (-1)^{deg(op)*d}.
    """
    if len(op_degs) != len(arg_degs):
        raise FacalcError("operator and argument counts differ")
    n = len(op_degs)
    # Items: (kind, index, degree); start with all args then all ops.
    sequence = [("x", i, arg_degs[i]) for i in range(n)] + [
        ("f", i, op_degs[i]) for i in range(n)
    ]
    sign = 1
    for i in range(n):
        pos = sequence.index(("f", i, op_degs[i]))
        target = sequence.index(("x", i, arg_degs[i])) + 1
        while pos > target:
            passed = sequence[pos - 1]
            sign *= -1 if (op_degs[i] % 2) and (passed[2] % 2) else 1
            sequence[pos - 1], sequence[pos] = sequence[pos], sequence[pos - 1]
            pos -= 1
    return sign


class GradedMap:
    """A right-acting graded filtered map, given per-generator.

    Membership in F^lvl of the degree-deg inner hom means: for every
    generator g, degree((g)f) = sdeg(g) + deg and level((g)f) >= base_level(g)
    + lvl.  Violations raise at construction.
    """

    def __init__(
        self,
        deg: int,
        lvl: Level,
        src_quiver: FiltQuiver,
        dst_quiver: FiltQuiver,
        obj_map: Dict[str, str],
        action: Dict[str, HomElement],
        instance: str,
        check: bool = True,
    ):
        self.deg = deg
        self.lvl = lvl
        self.src_quiver = src_quiver
        self.dst_quiver = dst_quiver
        self.obj_map = dict(obj_map)
        self.action = dict(action)
        self.instance = instance
        if check:
            self._validate()

    def _validate(self) -> None:
        for obj in self.src_quiver.objects:
            if obj not in self.obj_map:
                raise ObjectMismatch(f"object map misses {obj!r}")
        for gid, out in self.action.items():
            g = self.src_quiver.gen(gid)
            if not out.is_zero():
                want = (self.obj_map[g.src], self.obj_map[g.dst])
                if (out.src, out.dst) != want:
                    raise ObjectMismatch(f"action of {gid!r} lands in wrong hom")
                for d in out.degree_pieces():
                    if d != g.sdeg + self.deg:
                        raise DegreeMismatch(
                            f"action of {gid!r} has degree {d}, expected {g.sdeg + self.deg}"
                        )
                need = levels.level_add(g.base_level, self.lvl)
                if not levels.level_leq(need, out.level(self.instance)):
                    raise LevelViolation(f"action of {gid!r} violates level bound")

    def apply(self, x: HomElement) -> HomElement:
        """Linear extension of the per-generator action."""
        out = HomElement.zero(self.obj_map[x.src], self.obj_map[x.dst])
        for g, c in x.terms:
            img = self.action.get(g.gid)
            if img is None or img.is_zero():
                continue
            out = out.add(img.scale(c))
        return out


def identity_map(quiver: FiltQuiver, instance: str, variant: str = novikov.NOV) -> GradedMap:
    action = {g.gid: HomElement.from_gen(g, novikov.one(variant)) for g in quiver.gens}
    return GradedMap(
        0,
        levels.zero(instance),
        quiver,
        quiver,
        {x: x for x in quiver.objects},
        action,
        instance,
    )


def compose_maps(f: GradedMap, g: GradedMap) -> GradedMap:
    """(x)(f * g) = ((x)f)g, with the composed degree and level."""
    if f.dst_quiver is not g.src_quiver and f.dst_quiver.name != g.src_quiver.name:
        raise ObjectMismatch("graded maps are not composable")
    action = {gid: g.apply(out) for gid, out in f.action.items()}
    return GradedMap(
        f.deg + g.deg,
        levels.level_add(f.lvl, g.lvl),
        f.src_quiver,
        g.dst_quiver,
        {x: g.obj_map[y] for x, y in f.obj_map.items()},
        action,
        f.instance,
        check=False,
    )
