"""Command line interface: structure-file commands and reports.

Exit codes: 0 all checks pass with sound windows; 1 a relation has a nonzero
residual; 2 no residual failures but some outcome was LOSSY or UNDECIDED;
64 parse error (with location); 65 unresolved name.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

from . import levels, structfile
from .ainfty import (
    CheckEntry,
    check_ainf_functor,
    check_b_squared,
    check_coder_b_squared,
)
from .errors import (
    ConvergenceUndecided,
    FacalcError,
    LeibnizResidual,
    ParseError,
    ResolveError,
)
from .evalhom import PsiSolution, cword_key, ev, solve_psi
from .filtquiver import FiltQuiver
from .morphisms import (
    Coderivation,
    Cofunctor,
    coderivation_from_components,
    compose_cofunctors,
    pull_coderivation,
    push_coderivation,
)
from .structfile import Model, dump_document, load_model_file, model_to_json
from .tcoalg import Flag, TensorElement, TruncWindow, basis_words

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_UNDECIDED = 2
EXIT_PARSE = 64
EXIT_RESOLVE = 65


@dataclass
class Report:
    command: str
    path: str
    entries: List[CheckEntry] = field(default_factory=list)

    def summary(self) -> Dict[str, int]:
        failed = sum(1 for e in self.entries if not e.ok and e.flag != "UNDECIDED")
        lossy = sum(1 for e in self.entries if e.flag == "LOSSY")
        undecided = sum(1 for e in self.entries if e.flag == "UNDECIDED")
        return {
            "checked": len(self.entries),
            "failed": failed,
            "lossy": lossy,
            "undecided": undecided,
        }

    def exit_code(self) -> int:
        s = self.summary()
        if s["failed"]:
            return EXIT_RESIDUAL
        if s["lossy"] or s["undecided"]:
            return EXIT_UNDECIDED
        return EXIT_OK

    def render(self, fmt: str) -> str:
        s = self.summary()
        if fmt == "json":
            return dump_document(
                {
                    "command": self.command,
                    "file": self.path,
                    "entries": [
                        {
                            "relation": e.relation,
                            "n": e.n,
                            "word": e.word,
                            "residual": e.residual,
                            "flag": e.flag,
                        }
                        for e in self.entries
                    ],
                    "summary": s,
                    "exit": self.exit_code(),
                }
            )
        lines = [f"facalc {self.command} {self.path}"]
        if not self.entries:
            lines.append("vacuous: 0 relations")
        for e in self.entries:
            lines.append(
                f"check {e.relation} n={e.n} word={e.word} residual={e.residual} flag={e.flag}"
            )
        lines.append(
            "summary: checked={checked} failed={failed} lossy={lossy} undecided={undecided}".format(**s)
        )
        lines.append(f"exit {self.exit_code()}")
        return "\n".join(lines) + "\n"


def _sorted_entries(entries: List[CheckEntry]) -> List[CheckEntry]:
    return sorted(entries, key=lambda e: (e.relation, e.n, e.word))


def _override_window(model: Model, spec: Optional[str]) -> TruncWindow:
    if not spec:
        return model.window
    try:
        n_str, e_str = spec.split(",", 1)
        cutoff = levels.make_level(model.monoid, "inf" if e_str == "inf" else Fraction(e_str))
        return TruncWindow(int(n_str), cutoff)
    except (ValueError, FacalcError) as exc:
        raise ParseError("--window", str(exc)) from None


def _task(model: Model, name: str) -> dict:
    task = model.tasks.get(name, {})
    if not isinstance(task, dict):
        raise ParseError(f"$.tasks.{name}", "task must be an object")
    return task


def _pick_functor(model: Model, name: Optional[str], loc: str) -> Cofunctor:
    if name is None:
        if len(model.functors) == 1:
            return next(iter(model.functors.values()))
        raise ResolveError(f"{loc}: give a functor name (file declares {len(model.functors)})")
    if name not in model.functors:
        raise ResolveError(f"{loc}: unknown functor {name!r}")
    return model.functors[name]


def _pick_coderivation(model: Model, name: Optional[str], loc: str) -> Coderivation:
    if name is None:
        if len(model.coderivations) == 1:
            return next(iter(model.coderivations.values()))
        raise ResolveError(f"{loc}: give a coderivation name")
    if name not in model.coderivations:
        raise ResolveError(f"{loc}: unknown coderivation {name!r}")
    return model.coderivations[name]


# ---------------------------------------------------------------------------
# Commands

def cmd_check_b2(model: Model, path: str, args) -> Report:
    window = _override_window(model, args.window)
    entries: List[CheckEntry] = []
    for name in sorted(model.cats):
        entries.extend(check_b_squared(model.cats[name], window, args.n_max))
    return Report("check-b2", path, _sorted_entries(entries))


def cmd_check_functor(model: Model, path: str, args) -> Report:
    window = _override_window(model, args.window)
    task = _task(model, "check_functor")
    f = _pick_functor(model, args.functor or task.get("functor"), "check-functor")
    for qname in (f.src.name, f.dst.name):
        if qname not in model.cats:
            raise ResolveError(f"check-functor: quiver {qname!r} has no codifferential")
    entries = check_ainf_functor(
        f, model.cats[f.src.name], model.cats[f.dst.name], window, args.n_max
    )
    return Report("check-functor", path, _sorted_entries(entries))


def cmd_check_coder_b2(model: Model, path: str, args) -> Report:
    window = _override_window(model, args.window)
    if model.coder_quiver is None:
        raise ResolveError("check-coder-b2: file has no coder_quiver section")
    entries = check_coder_b_squared(
        model.coder_quiver, window, args.n_max, args.word_len_max
    )
    return Report("check-coder-b2", path, _sorted_entries(entries))


def _result_doc(model: Model, quivers: List[FiltQuiver], functors: List[Cofunctor],
                coderivations: List[Coderivation], elements: Optional[dict] = None,
                flag: Optional[str] = None) -> dict:
    doc = structfile.header_json(model)
    seen: Dict[str, FiltQuiver] = {}
    for q in quivers:
        seen[q.name] = q
    doc["quivers"] = [structfile.quiver_to_json(q) for _, q in sorted(seen.items())]
    if functors:
        unique = {f.name: f for f in functors}
        doc["functors"] = [
            structfile.functor_to_json(f) for _, f in sorted(unique.items())
        ]
    if coderivations:
        unique_r = {r.name: r for r in coderivations}
        doc["coderivations"] = [
            structfile.coderivation_to_json(r) for _, r in sorted(unique_r.items())
        ]
    if elements:
        doc["elements"] = [
            structfile.element_to_json(name, x, qname)
            for name, (x, qname) in sorted(elements.items())
        ]
    if flag is not None:
        doc["meta"] = {"flag": flag}
    return doc


def cmd_compose(model: Model, path: str, args):
    window = _override_window(model, args.window)
    task = _task(model, "compose")
    f = _pick_functor(model, args.f or task.get("f"), "compose")
    g = _pick_functor(model, args.g or task.get("g"), "compose")
    h = compose_cofunctors(f, g, window)
    return dump_document(_result_doc(model, [f.src, g.dst], [h], [])), EXIT_OK


def cmd_push(model: Model, path: str, args):
    window = _override_window(model, args.window)
    task = _task(model, "push")
    r = _pick_coderivation(model, args.r or task.get("r"), "push")
    h = _pick_functor(model, args.h or task.get("h"), "push")
    out = push_coderivation(r, h, window)
    return dump_document(
        _result_doc(model, [r.src, h.dst], [out.f, out.g], [out])
    ), EXIT_OK


def cmd_pull(model: Model, path: str, args):
    window = _override_window(model, args.window)
    task = _task(model, "pull")
    e = _pick_functor(model, args.e or task.get("e"), "pull")
    r = _pick_coderivation(model, args.r or task.get("r"), "pull")
    out = pull_coderivation(e, r, window)
    return dump_document(
        _result_doc(model, [e.src, r.dst], [out.f, out.g], [out])
    ), EXIT_OK


def cmd_eval(model: Model, path: str, args):
    window = _override_window(model, args.window)
    task = _task(model, "eval")
    elem_name = args.element or task.get("element")
    if elem_name not in model.elements:
        raise ResolveError(f"eval: unknown element {elem_name!r}")
    x = model.elements[elem_name]
    chain_names = args.chain.split(",") if args.chain else task.get("chain", [])
    chain = [_pick_coderivation(model, n, "eval") for n in chain_names]
    boundary = None
    bname = args.boundary or task.get("boundary")
    if bname is not None:
        boundary = _pick_functor(model, bname, "eval")
    if not chain and boundary is None:
        raise ResolveError("eval: empty chain needs a boundary functor")
    value, flag = ev(x, chain, window, boundary=boundary)
    target = chain[-1].dst if chain else boundary.dst
    text = dump_document(
        _result_doc(
            model,
            [target],
            [],
            [],
            elements={"result": (value, target.name)},
            flag=str(flag),
        )
    )
    return text, (EXIT_OK if flag == Flag.SOUND else EXIT_UNDECIDED)


def _psi_fixture(model: Model, window: TruncWindow) -> PsiSolution:
    """Assemble the declared solver section into an evaluable family."""
    spec = model.psi
    assert spec is not None
    sol = PsiSolution(None, (spec.source,))
    for o in spec.source.objects:
        sol.objects[(o,)] = model.functors[spec.obj_map[o]]
    for w in basis_words(spec.source, window.max_len, include_empty=False):
        key = cword_key((w,))
        if len(w) == 1:
            gid = w.gens[0].gid
            if gid not in spec.gen_map:
                raise ResolveError(f"solve-psi: generator {gid!r} missing from gen_map")
            r = model.coderivations[spec.gen_map[gid]]
            g = spec.source.gen(gid)
            if g.sdeg != r.deg:
                raise ResolveError(f"solve-psi: degree of {gid!r} differs from {r.name!r}")
            if (r.f.name, r.g.name) != (
                spec.obj_map[g.src],
                spec.obj_map[g.dst],
            ):
                raise ResolveError(f"solve-psi: endpoints of {gid!r} differ from {r.name!r}")
            sol.comps[key] = r
        else:
            f0 = sol.objects[(w.src,)]
            g0 = sol.objects[(w.dst,)]
            sol.comps[key] = coderivation_from_components(
                f"zero@{key}", f0, g0, w.sdeg, w.base_level(window.instance), {}
            )
    sol.a_quiver = next(iter(sol.objects.values())).src
    return sol


def cmd_solve_psi(model: Model, path: str, args):
    window = _override_window(model, args.window)
    if model.psi is None:
        raise ResolveError("solve-psi: file has no psi section")
    fixture = _psi_fixture(model, window)
    a_quiver = fixture.a_quiver
    target = next(iter(fixture.objects.values())).dst
    spec = model.psi

    def phi(a: TensorElement, cwords):
        return fixture.apply(a, cwords, window)[0]

    def phi_obj(a_obj: str, c_objs):
        return fixture.objects[c_objs].obj_map[a_obj]

    sol = solve_psi(
        phi,
        phi_obj,
        a_quiver,
        target,
        [spec.source],
        window,
        model.variant,
        max_factor_len=(args.psi_len,),
    )
    functors = [sol.objects[key] for key in sorted(sol.objects)]
    coders = [sol.comps[key] for key in sorted(sol.comps)]
    return dump_document(_result_doc(model, [a_quiver, target], functors, coders)), EXIT_OK


def cmd_normalize(model: Model, path: str, args):
    return dump_document(model_to_json(model)), EXIT_OK


CHECKS = {
    "check-b2": cmd_check_b2,
    "check-functor": cmd_check_functor,
    "check-coder-b2": cmd_check_coder_b2,
}
PRINTERS = {
    "compose": cmd_compose,
    "push": cmd_push,
    "pull": cmd_pull,
    "eval": cmd_eval,
    "solve-psi": cmd_solve_psi,
    "normalize": cmd_normalize,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="facalc",
        description="Exact checks and calculations on filtered tensor coalgebra structure files.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    common = dict()
    for name in list(CHECKS) + list(PRINTERS):
        p = sub.add_parser(name)
        p.add_argument("file")
        p.add_argument("--n-max", type=int, default=4)
        p.add_argument("--word-len-max", type=int, default=3)
        p.add_argument("--window", help="override as 'N,E' (E rational or 'inf')")
        p.add_argument("--format", choices=["text", "json"], default="text")
        p.add_argument("--functor")
        p.add_argument("--f")
        p.add_argument("--g")
        p.add_argument("--r")
        p.add_argument("--h")
        p.add_argument("--e")
        p.add_argument("--element")
        p.add_argument("--chain")
        p.add_argument("--boundary")
        p.add_argument("--psi-len", type=int, default=2,
                       help="factor word length bound for solve-psi")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model = load_model_file(args.file)
        if args.command in CHECKS:
            report = CHECKS[args.command](model, args.file, args)
            sys.stdout.write(report.render(args.format))
            return report.exit_code()
        out, code = PRINTERS[args.command](model, args.file, args)
        sys.stdout.write(out)
        return code
    except ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except ResolveError as exc:
        sys.stderr.write(f"resolve error: {exc}\n")
        return EXIT_RESOLVE
    except (ConvergenceUndecided, LeibnizResidual) as exc:
        sys.stderr.write(f"undecided: {exc}\n")
        return EXIT_UNDECIDED
    except FacalcError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
