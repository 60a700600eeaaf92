"""Loading, validating and canonically printing structure files.

A structure file is strict JSON declaring, in order of dependency: the level
monoid instance, the coefficient ring variant, a truncation window, quivers,
codifferential components per quiver, cofunctors, coderivations, named
elements, an optional coderivation-quiver section, an optional solver
section, and per-command task defaults.

Canonical form: keys sorted, entries sorted by name, rationals printed in
lowest terms with positive denominator, every scalar in full monomial
syntax.  ``dump_model`` always emits canonical form, so load -> print ->
load is the identity on normalized files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional

from . import levels, novikov
from .ainfty import AInfCategory, CoderQuiver, ainf_category, shift_degree
from .errors import ConvergenceUndecided, FacalcError, ParseError, ResolveError
from .filtquiver import FiltQuiver, HomElement, HomGenerator
from .levels import Level
from .morphisms import (
    Coderivation,
    Cofunctor,
    Components,
    coderivation_from_components,
    cofunctor_from_components,
)
from .novikov import NovikovScalar
from .tcoalg import TensorElement, TruncWindow, Word

ALLOWED_PAIRS = {
    ("rat", "nov"),
    ("rat", "nov0"),
    ("ratplus", "nov0"),
    ("rat", "q"),
    ("ratplus", "q"),
    ("discrete", "q"),
}


@dataclass
class PsiSpec:
    source: FiltQuiver
    obj_map: Dict[str, str]  # factor object -> functor name
    gen_map: Dict[str, str]  # factor generator -> coderivation name


@dataclass
class Model:
    monoid: str
    variant: str
    window: TruncWindow
    quivers: Dict[str, FiltQuiver] = field(default_factory=dict)
    cats: Dict[str, AInfCategory] = field(default_factory=dict)
    functors: Dict[str, Cofunctor] = field(default_factory=dict)
    coderivations: Dict[str, Coderivation] = field(default_factory=dict)
    elements: Dict[str, TensorElement] = field(default_factory=dict)
    coder_quiver: Optional[CoderQuiver] = None
    psi: Optional[PsiSpec] = None
    tasks: Dict[str, dict] = field(default_factory=dict)


def _fail(loc: str, msg: str) -> ParseError:
    return ParseError(loc, msg)


def _expect(cond: bool, loc: str, msg: str) -> None:
    if not cond:
        raise _fail(loc, msg)


def parse_level(obj, loc: str) -> Level:
    _expect(isinstance(obj, dict) and len(obj) == 1, loc, "level must be a one-key object")
    (key, val), = obj.items()
    try:
        if key == "rat":
            return levels.rat(Fraction(val))
        if key == "ratplus":
            return levels.ratplus(Fraction(val))
        if key == "discrete":
            return levels.discrete(val if val == "inf" else int(val))
        if key == "infinity":
            _expect(val is True, loc, "infinity level must be true")
            return levels.INFINITY
    except (ValueError, ZeroDivisionError, FacalcError) as exc:
        raise _fail(loc, f"bad level value: {exc}") from None
    raise _fail(loc, f"unknown level kind {key!r}")


def level_to_json(lvl: Level):
    if lvl.instance == "inf":
        return {"infinity": True}
    if lvl.instance == "discrete":
        return {"discrete": "inf" if lvl.value is None else "0"}
    return {lvl.instance: _frac(lvl.value)}


def _frac(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_scalar_at(text, variant: str, loc: str) -> NovikovScalar:
    _expect(isinstance(text, str), loc, "scalar must be a string")
    try:
        return novikov.parse_scalar(text, variant)
    except FacalcError as exc:
        raise _fail(loc, str(exc)) from None


def _parse_hom_value(obj, quiver: FiltQuiver, variant: str, loc: str) -> HomElement:
    _expect(isinstance(obj, list), loc, "value must be a list of [generator, scalar] pairs")
    terms = []
    src = dst = None
    for i, pair in enumerate(obj):
        ploc = f"{loc}[{i}]"
        _expect(isinstance(pair, list) and len(pair) == 2, ploc, "expected [generator, scalar]")
        gid, scal = pair
        try:
            g = quiver.gen(gid)
        except FacalcError:
            raise ResolveError(f"{ploc}: unknown generator {gid!r} in quiver {quiver.name!r}") from None
        if src is None:
            src, dst = g.src, g.dst
        terms.append((g, parse_scalar_at(scal, variant, ploc)))
    _expect(src is not None, loc, "empty value list; use [] only for zero with known endpoints")
    return HomElement(src, dst, terms)


def _parse_component_entry(entry, quiver: FiltQuiver, target: FiltQuiver, variant: str, loc: str):
    _expect(isinstance(entry, dict), loc, "component must be an object")
    has_word = "word" in entry
    has_at = "at" in entry
    _expect(has_word != has_at, loc, "give exactly one of 'word' or 'at'")
    if has_at:
        obj = entry["at"]
        _expect(obj in quiver.objects, loc, f"unknown object {obj!r}")
        key, k = obj, 0
    else:
        gids = entry["word"]
        _expect(isinstance(gids, list) and gids, loc, "'word' must be a non-empty list")
        try:
            gens = [quiver.gen(g) for g in gids]
        except FacalcError as exc:
            raise ResolveError(f"{loc}: {exc}") from None
        Word.from_gens(gens)  # composability check
        key, k = tuple(gids), len(gids)
    value = _parse_hom_value(entry.get("value"), target, variant, f"{loc}.value")
    return k, key, value


def _parse_components(
    entries, quiver: FiltQuiver, target: FiltQuiver, variant: str, loc: str
) -> Components:
    _expect(isinstance(entries, list), loc, "components must be a list")
    comps: Components = {}
    for i, entry in enumerate(entries):
        k, key, value = _parse_component_entry(entry, quiver, target, variant, f"{loc}[{i}]")
        table = comps.setdefault(k, {})
        _expect(key not in table, f"{loc}[{i}]", f"duplicate component at {key!r}")
        table[key] = value
    return comps


def load_model(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _fail(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    _expect(isinstance(doc, dict), "$", "top level must be an object")

    monoid = doc.get("level_monoid")
    _expect(monoid in ("rat", "ratplus", "discrete"), "$.level_monoid", f"bad instance {monoid!r}")
    variant = doc.get("coefficients")
    _expect(variant in ("nov", "nov0", "q"), "$.coefficients", f"bad variant {variant!r}")
    _expect(
        (monoid, variant) in ALLOWED_PAIRS,
        "$.coefficients",
        f"variant {variant!r} cannot be filtered over instance {monoid!r}",
    )

    wobj = doc.get("window")
    _expect(isinstance(wobj, dict), "$.window", "window must be an object")
    _expect(isinstance(wobj.get("max_len"), int), "$.window.max_len", "max_len must be an integer")
    cutoff = parse_level(wobj.get("cutoff"), "$.window.cutoff")
    _expect(cutoff.instance == monoid, "$.window.cutoff", "cutoff must live in the active instance")
    try:
        window = TruncWindow(wobj["max_len"], cutoff)
    except FacalcError as exc:
        raise _fail("$.window", str(exc)) from None

    model = Model(monoid, variant, window)

    for qi, qobj in enumerate(doc.get("quivers", [])):
        loc = f"$.quivers[{qi}]"
        _expect(isinstance(qobj, dict), loc, "quiver must be an object")
        name = qobj.get("name")
        _expect(isinstance(name, str) and name, f"{loc}.name", "quiver needs a name")
        _expect(name not in model.quivers, f"{loc}.name", f"duplicate quiver {name!r}")
        objs = qobj.get("objects")
        _expect(isinstance(objs, list), f"{loc}.objects", "objects must be a list")
        gens = []
        for gi, gobj in enumerate(qobj.get("generators", [])):
            gloc = f"{loc}.generators[{gi}]"
            _expect(isinstance(gobj, dict), gloc, "generator must be an object")
            has_sdeg = "sdeg" in gobj
            has_deg = "deg" in gobj
            _expect(has_sdeg != has_deg, gloc, "give exactly one of 'sdeg' or 'deg'")
            sdeg = gobj["sdeg"] if has_sdeg else shift_degree(gobj["deg"])
            _expect(isinstance(sdeg, int), gloc, "degree must be an integer")
            base = parse_level(gobj.get("base_level"), f"{gloc}.base_level")
            _expect(
                base.instance == monoid and not base.is_infinite(),
                f"{gloc}.base_level",
                "base level must be finite in the active instance",
            )
            try:
                gens.append(HomGenerator(gobj.get("id"), gobj.get("src"), gobj.get("dst"), sdeg, base))
            except FacalcError as exc:
                raise _fail(gloc, str(exc)) from None
        try:
            model.quivers[name] = FiltQuiver(name, objs, gens)
        except FacalcError as exc:
            raise _fail(loc, str(exc)) from None

    def get_quiver(name, loc) -> FiltQuiver:
        if name not in model.quivers:
            raise ResolveError(f"{loc}: unknown quiver {name!r}")
        return model.quivers[name]

    for bi, bobj in enumerate(doc.get("b_components", [])):
        loc = f"$.b_components[{bi}]"
        _expect(isinstance(bobj, dict), loc, "entry must be an object")
        quiver = get_quiver(bobj.get("quiver"), loc)
        comps = _parse_components(bobj.get("components", []), quiver, quiver, variant, f"{loc}.components")
        try:
            model.cats[quiver.name] = ainf_category(quiver, comps, window, variant)
        except ConvergenceUndecided:
            raise
        except FacalcError as exc:
            raise _fail(loc, str(exc)) from None

    for fi, fobj in enumerate(doc.get("functors", [])):
        loc = f"$.functors[{fi}]"
        _expect(isinstance(fobj, dict), loc, "functor must be an object")
        name = fobj.get("name")
        _expect(isinstance(name, str) and name, f"{loc}.name", "functor needs a name")
        _expect(name not in model.functors, f"{loc}.name", f"duplicate functor {name!r}")
        src = get_quiver(fobj.get("src"), loc)
        dst = get_quiver(fobj.get("dst"), loc)
        obj_map = fobj.get("obj_map")
        _expect(isinstance(obj_map, dict), f"{loc}.obj_map", "obj_map must be an object")
        for x, y in obj_map.items():
            if x not in src.objects or y not in dst.objects:
                raise ResolveError(f"{loc}.obj_map: bad pair {x!r} -> {y!r}")
        comps = _parse_components(fobj.get("components", []), src, dst, variant, f"{loc}.components")
        bound = fobj.get("convergence_bound", 16)
        _expect(isinstance(bound, int) and bound >= 1, f"{loc}.convergence_bound", "bad bound")
        try:
            model.functors[name] = cofunctor_from_components(
                name, src, dst, obj_map, comps, window, variant, convergence_bound=bound
            )
        except ConvergenceUndecided:
            raise
        except FacalcError as exc:
            raise _fail(loc, str(exc)) from None

    for ri, robj in enumerate(doc.get("coderivations", [])):
        loc = f"$.coderivations[{ri}]"
        _expect(isinstance(robj, dict), loc, "coderivation must be an object")
        name = robj.get("name")
        _expect(isinstance(name, str) and name, f"{loc}.name", "coderivation needs a name")
        _expect(name not in model.coderivations, f"{loc}.name", f"duplicate coderivation {name!r}")
        for side in ("from", "to"):
            if robj.get(side) not in model.functors:
                raise ResolveError(f"{loc}.{side}: unknown functor {robj.get(side)!r}")
        f = model.functors[robj["from"]]
        g = model.functors[robj["to"]]
        deg = robj.get("degree")
        _expect(isinstance(deg, int), f"{loc}.degree", "degree must be an integer")
        lvl = parse_level(robj.get("level"), f"{loc}.level")
        comps = _parse_components(robj.get("components", []), f.src, f.dst, variant, f"{loc}.components")
        try:
            model.coderivations[name] = coderivation_from_components(name, f, g, deg, lvl, comps)
        except ConvergenceUndecided:
            raise
        except FacalcError as exc:
            raise _fail(loc, str(exc)) from None

    for ei, eobj in enumerate(doc.get("elements", [])):
        loc = f"$.elements[{ei}]"
        _expect(isinstance(eobj, dict), loc, "element must be an object")
        name = eobj.get("name")
        _expect(isinstance(name, str) and name, f"{loc}.name", "element needs a name")
        quiver = get_quiver(eobj.get("quiver"), loc)
        terms = []
        for ti, tobj in enumerate(eobj.get("terms", [])):
            tloc = f"{loc}.terms[{ti}]"
            _expect(isinstance(tobj, dict), tloc, "term must be an object")
            coeff = parse_scalar_at(tobj.get("coeff", "1*T^{0}*e^{0}"), variant, f"{tloc}.coeff")
            if "at" in tobj:
                _expect(tobj["at"] in quiver.objects, tloc, f"unknown object {tobj['at']!r}")
                w = Word(tobj["at"])
            else:
                gids = tobj.get("word")
                _expect(isinstance(gids, list) and gids, tloc, "term needs 'word' or 'at'")
                try:
                    w = Word.from_gens([quiver.gen(g) for g in gids])
                except FacalcError as exc:
                    raise ResolveError(f"{tloc}: {exc}") from None
            terms.append((w, coeff))
        if terms:
            src, dst = terms[0][0].src, terms[0][0].dst
        else:
            src, dst = eobj.get("src"), eobj.get("dst")
            _expect(
                src in quiver.objects and dst in quiver.objects,
                loc,
                "an element without terms needs explicit 'src' and 'dst'",
            )
        try:
            model.elements[name] = TensorElement(src, dst, terms)
        except FacalcError as exc:
            raise _fail(loc, str(exc)) from None

    if "coder_quiver" in doc:
        loc = "$.coder_quiver"
        cobj = doc["coder_quiver"]
        _expect(isinstance(cobj, dict), loc, "coder_quiver must be an object")
        for qname in (cobj.get("source"), cobj.get("target")):
            if qname not in model.cats:
                raise ResolveError(f"{loc}: quiver {qname!r} has no codifferential")
        functors = []
        for fname in cobj.get("functors", []):
            if fname not in model.functors:
                raise ResolveError(f"{loc}.functors: unknown functor {fname!r}")
            functors.append(model.functors[fname])
        coders = []
        for rname in cobj.get("coderivations", []):
            if rname not in model.coderivations:
                raise ResolveError(f"{loc}.coderivations: unknown coderivation {rname!r}")
            coders.append(model.coderivations[rname])
        model.coder_quiver = CoderQuiver(
            model.cats[cobj["source"]], model.cats[cobj["target"]], functors, coders
        )

    if "psi" in doc:
        loc = "$.psi"
        pobj = doc["psi"]
        _expect(isinstance(pobj, dict), loc, "psi must be an object")
        source = get_quiver(pobj.get("source"), loc)
        obj_map = pobj.get("obj_map", {})
        gen_map = pobj.get("gen_map", {})
        for o, fname in obj_map.items():
            if o not in source.objects:
                raise ResolveError(f"{loc}.obj_map: unknown object {o!r}")
            if fname not in model.functors:
                raise ResolveError(f"{loc}.obj_map: unknown functor {fname!r}")
        for gid, rname in gen_map.items():
            try:
                source.gen(gid)
            except FacalcError:
                raise ResolveError(f"{loc}.gen_map: unknown generator {gid!r}") from None
            if rname not in model.coderivations:
                raise ResolveError(f"{loc}.gen_map: unknown coderivation {rname!r}")
        for o in source.objects:
            _expect(o in obj_map, loc, f"psi object map misses {o!r}")
        model.psi = PsiSpec(source, dict(obj_map), dict(gen_map))

    tasks = doc.get("tasks", {})
    _expect(isinstance(tasks, dict), "$.tasks", "tasks must be an object")
    model.tasks = tasks
    return model


def load_model_file(path: str) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        return load_model(fh.read())


# ---------------------------------------------------------------------------
# Canonical printing

def _hom_to_json(h: HomElement) -> list:
    return [[g.gid, novikov.format_scalar(c)] for g, c in h.terms]


def _components_to_json(comps: Components) -> list:
    out = []
    for k in sorted(comps):
        table = comps[k]
        for key in sorted(table):
            entry = {"at": key} if k == 0 else {"word": list(key)}
            entry["value"] = _hom_to_json(table[key])
            out.append(entry)
    return out


def quiver_to_json(q: FiltQuiver) -> dict:
    return {
        "name": q.name,
        "objects": sorted(q.objects),
        "generators": [
            {
                "id": g.gid,
                "src": g.src,
                "dst": g.dst,
                "sdeg": g.sdeg,
                "base_level": level_to_json(g.base_level),
            }
            for g in sorted(q.gens, key=lambda g: g.gid)
        ],
    }


def functor_to_json(f: Cofunctor) -> dict:
    return {
        "name": f.name,
        "src": f.src.name,
        "dst": f.dst.name,
        "obj_map": dict(sorted(f.obj_map.items())),
        "convergence_bound": f.convergence_bound,
        "components": _components_to_json(f.comps),
    }


def coderivation_to_json(r: Coderivation) -> dict:
    return {
        "name": r.name,
        "from": r.f.name,
        "to": r.g.name,
        "degree": r.deg,
        "level": level_to_json(r.lvl),
        "components": _components_to_json(r.comps),
    }


def element_to_json(name: str, x: TensorElement, quiver_name: str) -> dict:
    terms = []
    for w, c in x.terms:
        t = {"at": w.at} if len(w) == 0 else {"word": [g.gid for g in w.gens]}
        t["coeff"] = novikov.format_scalar(c)
        terms.append(t)
    out = {"name": name, "quiver": quiver_name, "terms": terms}
    if not terms:
        out["src"] = x.src
        out["dst"] = x.dst
    return out


def header_json(model: Model) -> dict:
    return {
        "level_monoid": model.monoid,
        "coefficients": model.variant,
        "window": {
            "max_len": model.window.max_len,
            "cutoff": level_to_json(model.window.cutoff),
        },
    }


def dump_document(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def model_to_json(model: Model) -> dict:
    doc = header_json(model)
    if model.quivers:
        doc["quivers"] = [quiver_to_json(q) for _, q in sorted(model.quivers.items())]
    if model.cats:
        doc["b_components"] = [
            {"quiver": name, "components": _components_to_json(cat.b.comps)}
            for name, cat in sorted(model.cats.items())
        ]
    if model.functors:
        doc["functors"] = [functor_to_json(f) for _, f in sorted(model.functors.items())]
    if model.coderivations:
        doc["coderivations"] = [
            coderivation_to_json(r) for _, r in sorted(model.coderivations.items())
        ]
    if model.elements:
        doc["elements"] = [
            element_to_json(name, x, _element_quiver(model, x))
            for name, x in sorted(model.elements.items())
        ]
    if model.psi is not None:
        doc["psi"] = {
            "source": model.psi.source.name,
            "obj_map": dict(sorted(model.psi.obj_map.items())),
            "gen_map": dict(sorted(model.psi.gen_map.items())),
        }
    if model.coder_quiver is not None:
        Q = model.coder_quiver
        doc["coder_quiver"] = {
            "source": Q.source.quiver.name,
            "target": Q.target.quiver.name,
            "functors": sorted(f.name for f in Q.functors),
            "coderivations": sorted(r.name for r in Q.coderivations),
        }
    if model.tasks:
        doc["tasks"] = model.tasks
    return doc


def _element_quiver(model: Model, x: TensorElement) -> str:
    for name, q in model.quivers.items():
        if x.src in q.objects and all(
            all(g.gid in {h.gid for h in q.gens} for g in w.gens) for w, _ in x.terms
        ):
            return name
    raise FacalcError("element does not belong to a declared quiver")
