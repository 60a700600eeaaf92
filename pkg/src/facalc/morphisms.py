"""Cofunctors and coderivations into completed tensor cocategories.

Both kinds of morphism are stored by their components: for each word length
k a sparse table sending basis words to single letters of the target quiver
(k = 0 components are indexed by source object and encode curvature-like
values on empty words).  Reconstruction of the full action follows the
component calculus:

* a cofunctor f acts by summing, over all splits of a word into k possibly
  empty blocks, the concatenation of the letters f_k(block);
* an (f,g)-coderivation r acts through exactly one r-letter: split into
  three zones, apply f on the left zone, one component of r in the middle,
  g on the right, and concatenate.

All infinite sums are bounded by level accounting: every empty block filled
by a curvature component raises the level by at least the component's
minimal level, so sums are cut off soundly at the window's energy cutoff.
If curvature of level <= 0 is present the sum cannot be bounded and
ConvergenceUndecided is raised instead of silently truncating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from . import levels, novikov, tcoalg
from .errors import (
    ConvergenceUndecided,
    DegreeMismatch,
    FacalcError,
    LevelViolation,
    ObjectMismatch,
)
from .filtquiver import FiltQuiver, HomElement, HomGenerator, koszul_sign
from .levels import INFINITY, Level
from .novikov import NovikovScalar
from .tcoalg import (
    Flag,
    TensorElement,
    TruncWindow,
    Word,
    basis_words,
    join_flags,
    seq_splits,
    truncate_element,
    word_blocks,
)

# Component tables: {k: {key: HomElement}} with key = tuple of generator ids
# for k >= 1 and the source object name for k = 0.
CompKey = Union[str, Tuple[str, ...]]
Components = Dict[int, Dict[CompKey, HomElement]]


def comp_key(w: Word) -> CompKey:
    return w.at if len(w) == 0 else tuple(g.gid for g in w.gens)


def normalize_components(comps: Components) -> Components:
    out: Components = {}
    for k, table in comps.items():
        kept = {key: v for key, v in table.items() if not v.is_zero()}
        if kept:
            out[int(k)] = kept
    return out


def hom_truncate(h: HomElement, window: TruncWindow) -> HomElement:
    """Reduce a hom element modulo F^cutoff (termwise, hence canonical)."""
    kept = []
    for g, c in h.terms:
        threshold = levels.dominate(g.base_level, window.cutoff)
        kept.append((g, novikov.nov_truncate(c, threshold)))
    return HomElement(h.src, h.dst, kept)


def _validate_table(
    comps: Components,
    src_quiver: FiltQuiver,
    endpoint_map: Callable[[str, str], Tuple[str, str]],
    deg: int,
    lvl: Level,
    instance: str,
    what: str,
) -> None:
    for k, table in comps.items():
        for key, value in table.items():
            if value.is_zero():
                continue
            if k == 0:
                src = dst = key
                sdeg = 0
                base = levels.zero(instance)
            else:
                gens = [src_quiver.gen(gid) for gid in key]
                w = Word.from_gens(gens)
                src, dst = w.src, w.dst
                sdeg = w.sdeg
                base = w.base_level(instance)
            want = endpoint_map(src, dst)
            if (value.src, value.dst) != want:
                raise ObjectMismatch(
                    f"{what}: component at {key!r} lands in {(value.src, value.dst)}, expected {want}"
                )
            for d in value.degree_pieces():
                if d != sdeg + deg:
                    raise DegreeMismatch(
                        f"{what}: component at {key!r} has degree {d}, expected {sdeg + deg}"
                    )
            need = levels.level_add(base, lvl)
            if not levels.level_leq(need, value.level(instance)):
                raise LevelViolation(f"{what}: component at {key!r} violates level {need}")


class Cofunctor:
    """A degree-0, level-0 morphism into a completed tensor cocategory."""

    deg = 0

    def __init__(
        self,
        name: str,
        src: FiltQuiver,
        dst: FiltQuiver,
        obj_map: Dict[str, str],
        comps: Components,
        instance: str,
        variant: str,
        convergence_bound: int = 16,
        complete_upto: Optional[int] = None,
        compute: Optional[Callable[[Word], HomElement]] = None,
    ):
        self.name = name
        self.src = src
        self.dst = dst
        self.obj_map = dict(obj_map)
        self.comps = normalize_components(comps)
        self.instance = instance
        self.variant = variant
        self.convergence_bound = convergence_bound
        self.complete_upto = complete_upto
        self.compute = compute
        self._cache: Dict[CompKey, HomElement] = {}

    def comp_value(self, w: Word) -> HomElement:
        k = len(w)
        key = comp_key(w)
        value = self.comps.get(k, {}).get(key)
        if value is not None:
            return value
        if self.compute is not None and (self.complete_upto is None or k > self.complete_upto):
            cached = self._cache.get((k, key))
            if cached is None:
                cached = self.compute(w)
                self._cache[(k, key)] = cached
            return cached
        if self.compute is None and self.complete_upto is not None and k > self.complete_upto:
            raise FacalcError(
                f"cofunctor {self.name!r}: component at length {k} beyond extraction bound"
            )
        return HomElement.zero(self.obj_map[w.src], self.obj_map[w.dst])

    def f0_values(self) -> Dict[str, HomElement]:
        if not hasattr(self, "_f0"):
            self._f0 = {
                obj: v for obj, v in self.comps.get(0, {}).items() if not v.is_zero()
            }
        return self._f0

    def is_strict(self) -> bool:
        return not self.f0_values()

    def f0_min_level(self) -> Level:
        best = INFINITY
        for v in self.f0_values().values():
            best = levels.level_min(best, v.level(self.instance))
        return best

    def __repr__(self) -> str:
        return f"Cofunctor({self.name!r}: {self.src.name}->{self.dst.name})"


class Coderivation:
    """An (f,g)-coderivation of a fixed degree and level, by components."""

    def __init__(
        self,
        name: str,
        f: Cofunctor,
        g: Cofunctor,
        deg: int,
        lvl: Level,
        comps: Components,
        complete_upto: Optional[int] = None,
        compute: Optional[Callable[[Word], HomElement]] = None,
    ):
        if (f.src.name, f.dst.name) != (g.src.name, g.dst.name):
            raise ObjectMismatch("coderivation endpoints live between different quivers")
        self.name = name
        self.f = f
        self.g = g
        self.deg = deg
        self.lvl = lvl
        self.comps = normalize_components(comps)
        self.instance = f.instance
        self.variant = f.variant
        self.complete_upto = complete_upto
        self.compute = compute
        self._cache: Dict[CompKey, HomElement] = {}

    @property
    def src(self) -> FiltQuiver:
        return self.f.src

    @property
    def dst(self) -> FiltQuiver:
        return self.f.dst

    def comp_value(self, w: Word) -> HomElement:
        k = len(w)
        key = comp_key(w)
        value = self.comps.get(k, {}).get(key)
        if value is not None:
            return value
        if self.compute is not None and (self.complete_upto is None or k > self.complete_upto):
            cached = self._cache.get((k, key))
            if cached is None:
                cached = self.compute(w)
                self._cache[(k, key)] = cached
            return cached
        if self.compute is None and self.complete_upto is not None and k > self.complete_upto:
            raise FacalcError(
                f"coderivation {self.name!r}: component at length {k} beyond extraction bound"
            )
        return HomElement.zero(self.f.obj_map[w.src], self.g.obj_map[w.dst])

    def is_zero_map(self) -> bool:
        return not any(self.comps.values())

    def __repr__(self) -> str:
        return f"Coderivation({self.name!r}: {self.f.name}->{self.g.name}, deg {self.deg})"


def cofunctor_from_components(
    name: str,
    src: FiltQuiver,
    dst: FiltQuiver,
    obj_map: Dict[str, str],
    comps: Components,
    window: TruncWindow,
    variant: str,
    convergence_bound: int = 16,
) -> Cofunctor:
    """Validate degree/level/object constraints and the curvature condition."""
    f = Cofunctor(name, src, dst, obj_map, comps, window.instance, variant, convergence_bound)
    _validate_table(
        f.comps,
        src,
        lambda a, b: (obj_map[a], obj_map[b]),
        0,
        levels.zero(window.instance),
        window.instance,
        f"cofunctor {name!r}",
    )
    f0 = f.f0_values()
    if f0:
        result = tensor_convergent(f0, window, convergence_bound)
        if result.kind != "true":
            raise ConvergenceUndecided(
                f"cofunctor {name!r}: curvature not tensor convergent within bound"
            )
    return f


def coderivation_from_components(
    name: str,
    f: Cofunctor,
    g: Cofunctor,
    deg: int,
    lvl: Level,
    comps: Components,
    complete_upto: Optional[int] = None,
) -> Coderivation:
    r = Coderivation(name, f, g, deg, lvl, comps, complete_upto)
    _validate_table(
        r.comps,
        f.src,
        lambda a, b: (f.obj_map[a], g.obj_map[b]),
        deg,
        lvl,
        f.instance,
        f"coderivation {name!r}",
    )
    return r


def identity_cofunctor(quiver: FiltQuiver, instance: str, variant: str) -> Cofunctor:
    comps: Components = {
        1: {
            (g.gid,): HomElement.from_gen(g, novikov.one(variant))
            for g in quiver.gens
        }
    }
    return Cofunctor(
        f"id_{quiver.name}", quiver, quiver, {x: x for x in quiver.objects}, comps, instance, variant
    )


# ---------------------------------------------------------------------------
# The block evaluation engine

@dataclass(frozen=True)
class Slot:
    """One factor of a composite operator acting on word splits.

    A ``family`` slot consumes any number of consecutive blocks, mapping each
    to one letter via the owner's components (a cofunctor); a ``single`` slot
    consumes exactly one block (a coderivation component).
    """

    kind: str  # "family" | "single"
    owner: Union[Cofunctor, Coderivation]


def cofunctor_slots(f: Cofunctor) -> List[Slot]:
    return [Slot("family", f)]


def coderivation_slots(r: Coderivation) -> List[Slot]:
    return [Slot("family", r.f), Slot("single", r), Slot("family", r.g)]


def _curvature_floor(slots: Sequence[Slot]) -> Tuple[bool, Level]:
    """(any curved family present, minimal curvature level among them)."""
    best = INFINITY
    curved = False
    for s in slots:
        if s.kind == "family" and not s.owner.is_strict():
            curved = True
            best = levels.level_min(best, s.owner.f0_min_level())
    return curved, best


def _empty_cap(term_lvl: Level, floor: Level, cutoff: Level) -> int:
    """Smallest m with term_lvl + m*floor >= cutoff; drops are sound beyond."""
    if levels.level_leq(cutoff, term_lvl):
        return 0
    if floor.is_infinite():
        return 1
    if not levels.level_leq(levels.zero(floor.instance), floor) or floor.value == 0:
        raise ConvergenceUndecided("curvature of level <= 0: sum cannot be bounded")
    diff = cutoff.value - term_lvl.value
    return max(0, math.ceil(diff / floor.value))


def slot_value(
    x: TensorElement,
    slots: Sequence[Slot],
    window: TruncWindow,
    length_truncate: bool = True,
) -> Tuple[TensorElement, Flag]:
    """Apply the composite operator described by ``slots`` to x.

    Signs are produced by the transposition oracle on block degrees: family
    letters have operator degree 0, single slots the coderivation's degree.
    """
    inst = window.instance
    singles = [i for i, s in enumerate(slots) if s.kind == "single"]
    n_singles = len(singles)
    first = slots[0].owner
    last = slots[-1].owner
    src_map = first.obj_map if isinstance(first, Cofunctor) else first.f.obj_map
    dst_map = last.obj_map if isinstance(last, Cofunctor) else last.g.obj_map
    out = TensorElement.zero(src_map[x.src], dst_map[x.dst])
    any_curved, floor = _curvature_floor(slots)

    for w, c in x.terms:
        term_lvl = tcoalg.term_level(w, c, inst)
        cap = _empty_cap(term_lvl, floor, window.cutoff) if any_curved else 0
        pieces = _term_value(w, c, slots, n_singles, cap, any_curved, inst, out.src, out.dst)
        out = out.add(pieces)

    if length_truncate:
        return truncate_element(out, window)
    return out, Flag.SOUND


def _term_value(
    w: Word,
    c: NovikovScalar,
    slots: Sequence[Slot],
    n_singles: int,
    cap: int,
    any_curved: bool,
    instance: str,
    out_src: str,
    out_dst: str,
) -> TensorElement:
    terms: List[Tuple[Word, NovikovScalar]] = []
    n = len(w)
    single_owners = [s.owner for s in slots if s.kind == "single"]
    single_degs = [o.deg for o in single_owners]
    family_owners = [s.owner for s in slots if s.kind == "family"]

    def assignments(k: int):
        """Positions of single-slot blocks among k blocks, in slot order."""
        if n_singles == 0:
            yield ()
            return
        yield from combinations(range(k), n_singles)

    # A split with e empty blocks can carry at most one empty per single
    # slot plus (cap - 1) curvature insertions; prune before building any
    # block words.
    family_empty_cap = max(cap - 1, 0) if any_curved else 0
    max_empties = n_singles + family_empty_cap
    max_k = n + max_empties
    for k in range(n_singles, max_k + 1):
        if k == 0:
            # Empty split: pure counit/augmentation passage.
            if n == 0:
                terms.append((Word(out_src), c))
            continue
        for cuts in seq_splits(n, k, allow_empty=True):
            bounds = (0,) + cuts + (n,)
            empties = sum(1 for a, b in zip(bounds, bounds[1:]) if a == b)
            if empties > max_empties:
                continue
            blocks = word_blocks(w, cuts)
            for positions in assignments(k):
                config = _assemble(
                    blocks, positions, single_owners, single_degs,
                    family_owners, cap, c,
                )
                if config is not None:
                    terms.extend(config)
    return TensorElement(out_src, out_dst, terms)


def _assemble(
    blocks: Tuple[Word, ...],
    positions: Tuple[int, ...],
    single_owners: List["Coderivation"],
    single_degs: List[int],
    family_owners: List["Cofunctor"],
    cap: int,
    coeff: NovikovScalar,
) -> Optional[List[Tuple[Word, NovikovScalar]]]:
    letters = []
    op_degs = []
    empties = 0
    next_single = 0
    for j, block in enumerate(blocks):
        if next_single < len(positions) and positions[next_single] == j:
            owner = single_owners[next_single]
            op_degs.append(single_degs[next_single])
            next_single += 1
        else:
            # Blocks between the t-th and (t+1)-st single belong to the
            # (t+1)-st family zone.
            owner = family_owners[next_single]
            op_degs.append(0)
            if len(block) == 0:
                if owner.is_strict():
                    return None
                empties += 1
                if empties >= cap:
                    return None
        letter = owner.comp_value(block)
        if letter.is_zero():
            return None
        letters.append(letter)

    sign = koszul_sign(op_degs, [b.sdeg for b in blocks])
    start = coeff if sign == 1 else novikov.nov_neg(coeff)
    expanded: List[Tuple[Tuple[HomGenerator, ...], NovikovScalar]] = [((), start)]
    for letter in letters:
        nxt = []
        for gens, cc in expanded:
            for g2, c2 in letter.terms:
                nxt.append((gens + (g2,), novikov.nov_mul(cc, c2)))
        expanded = nxt
    return [(Word.from_gens(gens), cc) for gens, cc in expanded]


# ---------------------------------------------------------------------------
# Public evaluation operations

def evaluate_cofunctor(f: Cofunctor, x: TensorElement, window: TruncWindow) -> Tuple[TensorElement, Flag]:
    return slot_value(x, cofunctor_slots(f), window)


def evaluate_coderivation(r: Coderivation, x: TensorElement, window: TruncWindow) -> Tuple[TensorElement, Flag]:
    return slot_value(x, coderivation_slots(r), window)


def _extract_components(
    value_on_word: Callable[[Word], HomElement],
    src_quiver: FiltQuiver,
    max_len: int,
) -> Components:
    comps: Components = {}
    for w in basis_words(src_quiver, max_len):
        v = value_on_word(w)
        if v.is_zero():
            continue
        comps.setdefault(len(w), {})[comp_key(w)] = v
    return comps


def compose_cofunctors(f: Cofunctor, g: Cofunctor, window: TruncWindow) -> Cofunctor:
    """Components of f then g: feed the full value of f through g's letters."""
    if f.dst.name != g.src.name:
        raise ObjectMismatch(f"cannot compose {f.name!r} with {g.name!r}")

    def component(w: Word) -> HomElement:
        value, _ = slot_value(
            TensorElement.from_word(w, novikov.one(f.variant)),
            cofunctor_slots(f),
            window,
            length_truncate=False,
        )
        target = HomElement.zero(g.obj_map[f.obj_map[w.src]], g.obj_map[f.obj_map[w.dst]])
        for u, c in value.terms:
            target = target.add(g.comp_value(u).scale(c))
        return hom_truncate(target, window)

    comps = _extract_components(component, f.src, window.max_len)
    h = Cofunctor(
        f"{f.name}*{g.name}",
        f.src,
        g.dst,
        {x: g.obj_map[y] for x, y in f.obj_map.items()},
        comps,
        window.instance,
        f.variant,
        convergence_bound=max(f.convergence_bound, g.convergence_bound),
        complete_upto=window.max_len,
        compute=component,
    )
    f0 = h.f0_values()
    if f0:
        result = tensor_convergent(f0, window, h.convergence_bound)
        if result.kind != "true":
            raise ConvergenceUndecided(f"composite {h.name!r}: curvature not tensor convergent")
    return h


def push_coderivation(r: Coderivation, h: Cofunctor, window: TruncWindow) -> Coderivation:
    """The coderivation r pushed along h, between f.h and g.h."""
    if r.dst.name != h.src.name:
        raise ObjectMismatch("push: coderivation does not land in the source of h")

    def component(w: Word) -> HomElement:
        value, _ = slot_value(
            TensorElement.from_word(w, novikov.one(r.variant)),
            coderivation_slots(r),
            window,
            length_truncate=False,
        )
        target = HomElement.zero(
            h.obj_map[r.f.obj_map[w.src]], h.obj_map[r.g.obj_map[w.dst]]
        )
        for u, c in value.terms:
            target = target.add(h.comp_value(u).scale(c))
        return hom_truncate(target, window)

    comps = _extract_components(component, r.src, window.max_len)
    return Coderivation(
        f"{r.name}*{h.name}",
        compose_cofunctors(r.f, h, window),
        compose_cofunctors(r.g, h, window),
        r.deg,
        r.lvl,
        comps,
        complete_upto=window.max_len,
        compute=component,
    )


def pull_coderivation(e: Cofunctor, r: Coderivation, window: TruncWindow) -> Coderivation:
    """The coderivation r pulled back along e, between e.f and e.g."""
    if e.dst.name != r.src.name:
        raise ObjectMismatch("pull: cofunctor does not land in the source of r")

    def component(w: Word) -> HomElement:
        value, _ = slot_value(
            TensorElement.from_word(w, novikov.one(e.variant)),
            cofunctor_slots(e),
            window,
            length_truncate=False,
        )
        target = HomElement.zero(
            r.f.obj_map[e.obj_map[w.src]], r.g.obj_map[e.obj_map[w.dst]]
        )
        for u, c in value.terms:
            target = target.add(r.comp_value(u).scale(c))
        return hom_truncate(target, window)

    comps = _extract_components(component, e.src, window.max_len)
    return Coderivation(
        f"{e.name}*{r.name}",
        compose_cofunctors(e, r.f, window),
        compose_cofunctors(e, r.g, window),
        r.deg,
        r.lvl,
        comps,
        complete_upto=window.max_len,
        compute=component,
    )


def chain_slots(chain: Sequence[Coderivation], boundary: Cofunctor) -> List[Slot]:
    if not chain:
        return cofunctor_slots(boundary)
    slots: List[Slot] = []
    for i, r in enumerate(chain):
        if i > 0 and chain[i - 1].g.name != r.f.name:
            raise ObjectMismatch("coderivation chain is not composable")
        slots.append(Slot("family", r.f))
        slots.append(Slot("single", r))
    slots.append(Slot("family", chain[-1].g))
    return slots


def chain_eval(
    a: TensorElement,
    chain: Sequence[Coderivation],
    window: TruncWindow,
    boundary: Optional[Cofunctor] = None,
    length_truncate: bool = True,
) -> Tuple[TensorElement, Flag]:
    """Evaluate a chain of coderivations against a source element: split a
    into alternating zones, apply the endpoint cofunctors on even zones and
    one component of each chain entry on odd zones, then concatenate."""
    if not chain and boundary is None:
        raise FacalcError("empty chains need an explicit boundary cofunctor")
    slots = chain_slots(chain, boundary if boundary is not None else chain[0].f)
    return slot_value(a, slots, window, length_truncate=length_truncate)


# ---------------------------------------------------------------------------
# Tensor convergence and the augmentation defect

@dataclass(frozen=True)
class ConvergenceResult:
    kind: str  # "true" | "false" | "undecided"
    order: Optional[int] = None


def tensor_convergent(
    phi0: Dict[str, HomElement],
    window: TruncWindow,
    bound: int,
    certificate: bool = False,
) -> ConvergenceResult:
    """Search for N <= bound with the N-th tensor power of every value in
    F^cutoff.  Exhausting the bound yields "undecided"; "false" is returned
    only for an explicitly requested, verifiable periodicity certificate
    (a single level-<=0 monomial loop, whose power pattern literally
    repeats and never gains level)."""
    inst = window.instance
    worst: Optional[int] = None
    for obj, value in phi0.items():
        if value.is_zero():
            continue
        if value.src != value.dst:
            raise ObjectMismatch("curvature values must be endomorphism-like")
        if certificate and _nonconvergence_certificate(value, inst):
            return ConvergenceResult("false")
        power = TensorElement.from_hom(value)
        base = TensorElement.from_hom(value)
        found = None
        for n in range(1, bound + 1):
            if levels.level_leq(window.cutoff, power.level(inst)):
                found = n
                break
            power = tcoalg.mu_concat(power, base)
        if found is None:
            return ConvergenceResult("undecided")
        worst = found if worst is None else max(worst, found)
    return ConvergenceResult("true", worst or 1)


def _nonconvergence_certificate(value: HomElement, instance: str) -> bool:
    # One generator loop, one monomial, level <= 0: the n-th power is the
    # single monomial c^n T^{n*lam} on the repeated word, never above a
    # positive cutoff.
    if len(value.terms) != 1:
        return False
    g, c = value.terms[0]
    if len(c.terms) != 1:
        return False
    lvl = value.level(instance)
    return levels.level_leq(lvl, levels.zero(instance))


def augmentation_defect(f: Cofunctor, window: TruncWindow) -> Tuple[Dict[str, TensorElement], Flag]:
    """y = sum over n >= 1 of the n-th tensor power of the curvature."""
    out: Dict[str, TensorElement] = {}
    flag = Flag.SOUND
    inst = window.instance
    for obj, value in f.f0_values().items():
        l0 = value.level(inst)
        cap = _empty_cap(levels.zero(inst), l0, window.cutoff)
        acc = TensorElement.zero(value.src, value.dst)
        power = TensorElement.from_hom(value)
        base = TensorElement.from_hom(value)
        for n in range(1, max(cap, 1) + 1):
            acc = acc.add(power)
            power = tcoalg.mu_concat(power, base)
        acc, fl = truncate_element(acc, window)
        flag = join_flags(flag, fl)
        out[obj] = acc
    return out, flag


def defect_to_f0(
    y: Dict[str, TensorElement], window: TruncWindow
) -> Tuple[Dict[str, HomElement], Flag]:
    """Invert the defect series: alternating sum of concatenation powers."""
    out: Dict[str, HomElement] = {}
    flag = Flag.SOUND
    for obj, elem in y.items():
        acc = TensorElement.zero(elem.src, elem.dst)
        power = elem
        for m in range(1, window.max_len + 1):
            acc = acc.add(power if m % 2 == 1 else power.neg())
            power, fl = truncate_element(tcoalg.mu_concat(power, elem), window)
            flag = join_flags(flag, fl)
            if power.is_zero():
                break
        acc, fl = truncate_element(acc, window)
        flag = join_flags(flag, fl)
        out[obj] = hom_truncate(acc.pr1_hom(), window)
    return out, flag


# ---------------------------------------------------------------------------
# Consistency checks

def leibniz_residual(
    r: Coderivation, w: Word, window: TruncWindow
) -> Dict[Tuple[Word, Word], NovikovScalar]:
    """Difference of r.Delta and Delta.(f (x) r + r (x) g) on a basis word.

    Zero (modulo the window) for every genuine coderivation.
    """
    one = novikov.one(r.variant)
    lhs_elem, _ = slot_value(TensorElement.from_word(w, one), coderivation_slots(r), window)
    lhs = tcoalg.cut_delta(lhs_elem)

    rhs: Dict[Tuple[Word, Word], NovikovScalar] = {}

    def accumulate(left: TensorElement, right: TensorElement, scale: NovikovScalar, sign: int):
        for w1, c1 in left.terms:
            for w2, c2 in right.terms:
                c = novikov.nov_mul(novikov.nov_mul(c1, c2), scale)
                if sign < 0:
                    c = novikov.nov_neg(c)
                key = (w1, w2)
                rhs[key] = novikov.nov_add(rhs[key], c) if key in rhs else c

    for (u, v), c in tcoalg.cut_delta(TensorElement.from_word(w, one)).items():
        fu, _ = slot_value(TensorElement.from_word(u, one), cofunctor_slots(r.f), window)
        rv, _ = slot_value(TensorElement.from_word(v, one), coderivation_slots(r), window)
        accumulate(fu, rv, c, 1)
        ru, _ = slot_value(TensorElement.from_word(u, one), coderivation_slots(r), window)
        gv, _ = slot_value(TensorElement.from_word(v, one), cofunctor_slots(r.g), window)
        # In r (x) g the r factor crosses the second block.
        sign = koszul_sign([r.deg, 0], [u.sdeg, v.sdeg])
        accumulate(ru, gv, c, sign)

    residual: Dict[Tuple[Word, Word], NovikovScalar] = dict(lhs)
    for key, c in rhs.items():
        residual[key] = novikov.nov_sub(residual[key], c) if key in residual else novikov.nov_neg(c)

    # Compare inside the window only: pairs of total length <= N, scalar
    # parts below the cutoff (both sides agree above it by construction).
    inst = window.instance
    out: Dict[Tuple[Word, Word], NovikovScalar] = {}
    for (w1, w2), c in residual.items():
        if len(w1) + len(w2) > window.max_len:
            continue
        base = levels.level_add(w1.base_level(inst), w2.base_level(inst))
        c = novikov.nov_truncate(c, levels.dominate(base, window.cutoff))
        if not c.is_zero():
            out[(w1, w2)] = c
    return out
