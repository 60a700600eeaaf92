"""Tensor cocategories with the cut comultiplication, and truncation windows.

Elements are finite linear combinations of composable generator words over a
filtered quiver.  The comultiplication cuts a word at every position
(including both empty ends); the reduced variant keeps both sides non-empty;
``mu_concat`` concatenates.  Completions are modeled by truncation windows: a
maximal word length N and an energy cutoff E.  Every truncation reports
whether it was SOUND (everything discarded provably lies above E, so the
truncated statement certifies the completed one at that cutoff) or LOSSY.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from . import levels, novikov
from .errors import FacalcError, ObjectMismatch
from .filtquiver import FiltQuiver, GradedMap, HomElement, HomGenerator, koszul_sign
from .levels import INFINITY, Level
from .novikov import NovikovScalar


class Word:
    """A composable list of generators; the empty word sits at one object.

    Hashing and equality go through the object name and the generator id
    sequence, which identify a basis word within a fixed quiver.
    """

    __slots__ = ("at", "gens", "_sdeg", "_gids", "_hash")

    def __init__(self, at: str, gens: Tuple[HomGenerator, ...] = ()):
        prev = at
        sdeg = 0
        for g in gens:
            if g.src != prev:
                raise ObjectMismatch(
                    f"word is not composable at {g.gid!r}: expected src {prev!r}"
                )
            prev = g.dst
            sdeg += g.sdeg
        self.at = at
        self.gens = tuple(gens)
        self._sdeg = sdeg
        self._gids = tuple(g.gid for g in self.gens)
        self._hash = hash((at, self._gids))

    @staticmethod
    def from_gens(gens: Sequence[HomGenerator]) -> "Word":
        if not gens:
            raise FacalcError("empty words need an explicit object; use Word(at)")
        return Word(gens[0].src, tuple(gens))

    @property
    def src(self) -> str:
        return self.at

    @property
    def dst(self) -> str:
        return self.gens[-1].dst if self.gens else self.at

    def __len__(self) -> int:
        return len(self.gens)

    @property
    def sdeg(self) -> int:
        return self._sdeg

    def __eq__(self, other) -> bool:
        # The hash ignores generator payloads, so equality must compare the
        # generators themselves: distinct quivers may reuse names.
        return (
            isinstance(other, Word)
            and self._hash == other._hash
            and self.at == other.at
            and self.gens == other.gens
        )

    def __hash__(self) -> int:
        return self._hash

    def base_level(self, instance: str) -> Level:
        out = levels.zero(instance)
        for g in self.gens:
            out = levels.level_add(out, g.base_level)
        return out

    def sort_key(self):
        return (len(self.gens), self._gids, self.at)

    def __repr__(self) -> str:
        if not self.gens:
            return f"Word([]@{self.at})"
        return "Word(" + ".".join(self._gids) + ")"


class TensorElement:
    """A normalized linear combination of words with common endpoints."""

    __slots__ = ("src", "dst", "terms")

    def __init__(self, src: str, dst: str, terms: Iterable[Tuple[Word, NovikovScalar]] = ()):
        merged: Dict[Word, NovikovScalar] = {}
        for w, c in terms:
            if w.src != src or w.dst != dst:
                raise ObjectMismatch(f"word {w!r} does not run {src!r} -> {dst!r}")
            if w in merged:
                merged[w] = novikov.nov_add(merged[w], c)
            else:
                merged[w] = c
        self.src = src
        self.dst = dst
        self.terms: Tuple[Tuple[Word, NovikovScalar], ...] = tuple(
            (w, c) for w, c in sorted(merged.items(), key=lambda t: t[0].sort_key()) if not c.is_zero()
        )

    @staticmethod
    def zero(src: str, dst: str) -> "TensorElement":
        return TensorElement(src, dst)

    @staticmethod
    def from_word(w: Word, coeff: NovikovScalar) -> "TensorElement":
        return TensorElement(w.src, w.dst, [(w, coeff)])

    @staticmethod
    def from_hom(h: HomElement) -> "TensorElement":
        return TensorElement(
            h.src, h.dst, [(Word.from_gens([g]), c) for g, c in h.terms]
        )

    def is_zero(self) -> bool:
        return not self.terms

    def add(self, other: "TensorElement") -> "TensorElement":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if (self.src, self.dst) != (other.src, other.dst):
            raise ObjectMismatch("adding tensor elements with different endpoints")
        return TensorElement(self.src, self.dst, list(self.terms) + list(other.terms))

    def neg(self) -> "TensorElement":
        return TensorElement(self.src, self.dst, [(w, novikov.nov_neg(c)) for w, c in self.terms])

    def sub(self, other: "TensorElement") -> "TensorElement":
        return self.add(other.neg())

    def scale(self, s: NovikovScalar) -> "TensorElement":
        return TensorElement(self.src, self.dst, [(w, novikov.nov_mul(c, s)) for w, c in self.terms])

    def rat_scale(self, q) -> "TensorElement":
        return TensorElement(self.src, self.dst, [(w, novikov.nov_rat_mul(q, c)) for w, c in self.terms])

    def pr_length(self, k: int) -> "TensorElement":
        return TensorElement(self.src, self.dst, [(w, c) for w, c in self.terms if len(w) == k])

    def pr1_hom(self) -> HomElement:
        """Project to word length 1, viewed as a hom element."""
        return HomElement(
            self.src, self.dst, [(w.gens[0], c) for w, c in self.terms if len(w) == 1]
        )

    def max_len(self) -> int:
        return max((len(w) for w, _ in self.terms), default=0)

    def level(self, instance: str) -> Level:
        best = INFINITY
        for w, c in self.terms:
            lvl = levels.level_add(w.base_level(instance), novikov.nov_level(c, instance))
            best = levels.level_min(best, lvl)
        return best

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TensorElement)
            and self.src == other.src
            and self.dst == other.dst
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.src, self.dst, self.terms))

    def __repr__(self) -> str:
        if self.is_zero():
            return f"TensorElement(0: {self.src}->{self.dst})"
        body = " + ".join(f"({novikov.format_scalar(c)})*{w!r}" for w, c in self.terms)
        return f"TensorElement({body})"


def counit_scalar(x: TensorElement, variant: str) -> NovikovScalar:
    """The coefficient of the empty word (zero unless src == dst)."""
    for w, c in x.terms:
        if len(w) == 0:
            return c
    return novikov.zero(variant)


def augmentation_eta(obj: str, variant: str, coeff: Optional[NovikovScalar] = None) -> TensorElement:
    c = coeff if coeff is not None else novikov.one(variant)
    return TensorElement.from_word(Word(obj), c)


# ---------------------------------------------------------------------------
# Splits

@lru_cache(maxsize=4096)
def _seq_splits_cached(n: int, k: int, allow_empty: bool) -> Tuple[Tuple[int, ...], ...]:
    if k < 1 or (not allow_empty and k > n):
        return ()
    out: List[Tuple[int, ...]] = []

    def rec(prefix: List[int], remaining: int, start: int):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        hi = n - (0 if allow_empty else remaining)
        for cut in range(start, hi + 1):
            prefix.append(cut)
            rec(prefix, remaining - 1, cut + (0 if allow_empty else 1))
            prefix.pop()

    rec([], k - 1, 0 if allow_empty else 1)
    return tuple(out)


def seq_splits(n: int, k: int, allow_empty: bool) -> Iterator[Tuple[int, ...]]:
    """Cut points 0 <= i_1 <= ... <= i_{k-1} <= n splitting a length-n list
    into k consecutive blocks; with allow_empty=False all blocks are
    non-empty (strictly increasing interior cut points)."""
    return iter(_seq_splits_cached(n, k, allow_empty))


@lru_cache(maxsize=65536)
def word_blocks(w: Word, cuts: Tuple[int, ...]) -> Tuple[Word, ...]:
    """The blocks of w determined by interior cut points."""
    bounds = (0,) + cuts + (len(w.gens),)
    blocks = []
    for a, b in zip(bounds, bounds[1:]):
        if a == b:
            at = w.gens[a - 1].dst if a > 0 else w.at
            blocks.append(Word(at))
        else:
            blocks.append(Word.from_gens(w.gens[a:b]))
    return tuple(blocks)


def delta_k(x: TensorElement, k: int) -> Dict[Tuple[Word, ...], NovikovScalar]:
    """The k-fold cut comultiplication; Delta^(1) is the identity."""
    if k < 1:
        raise FacalcError("delta_k needs k >= 1")
    out: Dict[Tuple[Word, ...], NovikovScalar] = {}
    for w, c in x.terms:
        for cuts in seq_splits(len(w), k, allow_empty=True):
            key = word_blocks(w, cuts)
            out[key] = novikov.nov_add(out[key], c) if key in out else c
    return {key: c for key, c in out.items() if not c.is_zero()}


def cut_delta(x: TensorElement) -> Dict[Tuple[Word, Word], NovikovScalar]:
    return delta_k(x, 2)


def reduced_delta_k(x: TensorElement, k: int) -> Dict[Tuple[Word, ...], NovikovScalar]:
    """Iterated reduced comultiplication: all blocks non-empty; the k=1
    iterate is the identity restricted to positive lengths."""
    if k < 1:
        raise FacalcError("reduced_delta_k needs k >= 1")
    out: Dict[Tuple[Word, ...], NovikovScalar] = {}
    for w, c in x.terms:
        if len(w) == 0:
            continue
        for cuts in seq_splits(len(w), k, allow_empty=False):
            key = word_blocks(w, cuts)
            out[key] = novikov.nov_add(out[key], c) if key in out else c
    return {key: c for key, c in out.items() if not c.is_zero()}


def reduced_delta(x: TensorElement) -> Dict[Tuple[Word, Word], NovikovScalar]:
    return reduced_delta_k(x, 2)


def mu_concat(x: TensorElement, y: TensorElement, window: Optional["TruncWindow"] = None) -> TensorElement:
    """Concatenation product; sign-free since it has degree 0."""
    if x.dst != y.src:
        raise ObjectMismatch(f"cannot concatenate: {x.dst!r} != {y.src!r}")
    terms = []
    for w1, c1 in x.terms:
        for w2, c2 in y.terms:
            w = Word(w1.at, w1.gens + w2.gens)
            terms.append((w, novikov.nov_mul(c1, c2)))
    out = TensorElement(x.src, y.dst, terms)
    if window is not None:
        out, _ = truncate_element(out, window)
    return out


# ---------------------------------------------------------------------------
# Truncation windows

class Flag(enum.IntEnum):
    SOUND = 0
    LOSSY = 1

    def __str__(self) -> str:  # report-friendly
        return self.name


def join_flags(*flags: Flag) -> Flag:
    return Flag(max(int(f) for f in flags)) if flags else Flag.SOUND


@dataclass(frozen=True)
class TruncWindow:
    """Work modulo F^cutoff, keeping words of length <= max_len."""

    max_len: int
    cutoff: Level

    def __post_init__(self):
        if self.max_len < 0:
            raise FacalcError("window max_len must be >= 0")
        if self.cutoff.instance not in (levels.RAT, levels.RATPLUS, levels.DISCRETE):
            raise FacalcError("window cutoff must belong to a level instance")
        if levels.level_leq(self.cutoff, levels.zero(self.cutoff.instance)):
            raise FacalcError("window cutoff must be positive")

    @property
    def instance(self) -> str:
        return self.cutoff.instance


def term_level(w: Word, c: NovikovScalar, instance: str) -> Level:
    return levels.level_add(w.base_level(instance), novikov.nov_level(c, instance))


def truncate_element(x: TensorElement, window: TruncWindow) -> Tuple[TensorElement, Flag]:
    """Drop terms beyond the window.  SOUND when every term dropped for
    length alone already sat above the cutoff."""
    kept = []
    flag = Flag.SOUND
    inst = window.instance
    for w, c in x.terms:
        c_red = novikov.nov_truncate(c, dominate_base(window.cutoff, w, inst))
        if c_red.is_zero():
            continue
        if len(w) > window.max_len:
            if not levels.level_leq(window.cutoff, term_level(w, c_red, inst)):
                flag = Flag.LOSSY
            continue
        kept.append((w, c_red))
    return TensorElement(x.src, x.dst, kept), flag


def dominate_base(cutoff: Level, w: Word, instance: str) -> Level:
    """Energy threshold for coefficients of w: scalar parts with energy level
    >= this already lie in F^cutoff once the word's base level is added."""
    base = w.base_level(instance)
    return levels.dominate(base, cutoff)


# ---------------------------------------------------------------------------
# Tensor products of maps acting on words

def tensor_maps(maps: Sequence[GradedMap], x: TensorElement) -> TensorElement:
    """Apply f_1 (x) ... (x) f_n letterwise to words of length n.

    (x_1 ... x_n)(f_1 (x) ... (x) f_n) carries the Koszul sign of moving each
    f_j leftwards past x_i, i < j.
    """
    if not maps:
        raise FacalcError("tensor_maps needs at least one map")
    obj = maps[0].obj_map
    out = TensorElement.zero(obj[x.src], obj[x.dst])
    for w, c in x.terms:
        if len(w) != len(maps):
            raise ObjectMismatch(f"word length {len(w)} != {len(maps)} maps")
        sign = koszul_sign([m.deg for m in maps], [g.sdeg for g in w.gens])
        pieces = [m.apply(HomElement.from_gen(g, novikov.one(c.variant))) for m, g in zip(maps, w.gens)]
        expanded = [(Word(obj[w.at]), c if sign == 1 else novikov.nov_neg(c))]
        for piece in pieces:
            nxt = []
            for prefix, pc in expanded:
                for g2, c2 in piece.terms:
                    nxt.append((Word(prefix.at, prefix.gens + (g2,)), novikov.nov_mul(pc, c2)))
            expanded = nxt
        out = out.add(TensorElement(out.src, out.dst, expanded))
    return out


# ---------------------------------------------------------------------------
# Basis enumeration

def basis_words(
    quiver: FiltQuiver,
    max_len: int,
    src: Optional[str] = None,
    dst: Optional[str] = None,
    include_empty: bool = True,
) -> List[Word]:
    """All composable generator words of length <= max_len, sorted."""
    words: List[Word] = []
    if include_empty:
        for obj in quiver.objects:
            if src is not None and obj != src:
                continue
            if dst is not None and obj != dst:
                continue
            words.append(Word(obj))
    frontier: List[Tuple[str, Tuple[HomGenerator, ...]]] = [
        (obj, ()) for obj in (quiver.objects if src is None else [src])
    ]
    for _ in range(max_len):
        nxt = []
        for start, gens in frontier:
            tail = gens[-1].dst if gens else start
            for g in quiver.gens_from(tail):
                seq = gens + (g,)
                nxt.append((start, seq))
                if dst is None or g.dst == dst:
                    words.append(Word(start, seq))
        frontier = nxt
    return sorted(words, key=Word.sort_key)


# ---------------------------------------------------------------------------
# Box products (pairs of words with the middle-four interchange sign)

def box_sign(left_pars: Sequence[int], right_pars: Sequence[int]) -> int:
    """Sign of unshuffling blocks: sum over i < j of right_i * left_j."""
    sign = 1
    for i in range(len(right_pars)):
        for j in range(i + 1, len(left_pars)):
            if (right_pars[i] % 2) and (left_pars[j] % 2):
                sign = -sign
    return sign


def pair_reduced_delta_k(
    w1: Word, w2: Word, k: int
) -> Iterator[Tuple[Tuple[Tuple[Word, Word], ...], int]]:
    """Reduced k-fold splits of w1 [box] w2: each paired block non-empty,
    with the interchange sign from block degrees."""
    for cuts1 in seq_splits(len(w1), k, allow_empty=True):
        blocks1 = word_blocks(w1, cuts1)
        for cuts2 in seq_splits(len(w2), k, allow_empty=True):
            blocks2 = word_blocks(w2, cuts2)
            if any(len(b1) + len(b2) == 0 for b1, b2 in zip(blocks1, blocks2)):
                continue
            sign = box_sign([b.sdeg for b in blocks1], [b.sdeg for b in blocks2])
            yield tuple(zip(blocks1, blocks2)), sign
