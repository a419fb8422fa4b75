"""Command-line front end: ``uncert verify|mus|bound|search|trace|scan``.

Exit codes: 0 when everything holds, 1 on a violation or a failed equality
certification, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import logging
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, qmath
from . import io as uio
from .bounds import (TOL_EQ, Relation, Verdict, dp_trace, eval_relation, overlap_r,
                     r_povm, r_projected, single_povm_bound)
from .errors import UncertError
from .fuzz import DEFAULT_DIMS, random_instance, trial_seed
from .mus import (MusFamilySpec, OmegaTerm, check_mus_equality, classify_mus,
                  construct_family, construct_lambda, construct_omega, construct_thm2,
                  construct_thm4_iii, construct_thm5, mus_recovery_residual,
                  random_family_spec)
from .optimize import GapObjective, bloch_grid_scan, minimize_gap, nearest_family
from .states import BasisSet, QState, factors, fourier_pair, random_state

log = logging.getLogger("uncert")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    seed: int | None = None
    trials: int = 1
    dims: list[int] = field(default_factory=list)
    tol_eq: float = TOL_EQ
    format: str = "json"
    out: str | None = None
    relation: str | None = None
    extra: dict = field(default_factory=dict)

    def validate(self, randomized: bool) -> None:
        if self.trials < 1:
            raise UncertError("trials must be >= 1")
        if randomized and self.seed is None:
            raise UncertError("--seed is required for randomized commands")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise UncertError("seed must be a 64-bit unsigned integer")


def _document(config: RunConfig, results: list, summary: dict) -> dict:
    return {"tool": "uncert", "version": __version__, "config": asdict(config),
            "results": results, "summary": summary}


def _report_summary(reports) -> dict:
    gaps = [r["gap"] for r in reports if "gap" in r]
    worst = int(np.argmin(gaps)) if gaps else None
    return {
        "trials": len(reports),
        "min_gap": min(gaps) if gaps else None,
        "violations": sum(r.get("holds") == Verdict.VIOLATED.value for r in reports),
        "equalities": sum(r.get("holds") == Verdict.EQUALITY.value for r in reports),
        "worst_trial": worst,
        "worst_seed": reports[worst].get("seed") if worst is not None else None,
    }


def _emit(text: str, out: str | None) -> None:
    if out:
        uio.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _csv_reports(reports: list[dict]) -> str:
    term_names: list[str] = []
    for r in reports:
        for k in r["lhs_terms"]:
            if k not in term_names:
                term_names.append(k)
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["trial", "relation", *term_names, "rhs", "gap", "holds"])
    for r in reports:
        writer.writerow([r["trial"], r["relation"],
                         *[repr(r["lhs_terms"].get(k, "")) if k in r["lhs_terms"] else ""
                           for k in term_names],
                         repr(r["rhs"]), repr(r["gap"]), r["holds"]])
    return buf.getvalue()


def _parse_dims(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        dims = [int(t) for t in text.replace("x", ",").split(",") if t.strip()]
    except ValueError as exc:
        raise UncertError(f"bad --dims {text!r}") from exc
    if any(d < 1 for d in dims):
        raise UncertError("dimensions must be positive")
    return dims


def _load_list(path) -> list:
    obj = uio.load(path)
    return obj if isinstance(obj, list) else [obj]


def _relation_inputs(rel: Relation, basis_path: str | None, d: int) -> dict:
    """Inputs for a relation evaluated on a user-supplied state."""
    if basis_path:
        items = _load_list(basis_path)
    else:
        z, x = fourier_pair(d)
        items = [z, x]
    if rel in (Relation.EQ3, Relation.EQ10):
        if len(items) < 2 or not all(isinstance(i, BasisSet) for i in items[:2]):
            raise UncertError(f"{rel.value} needs two bases")
        return {"v": items[0], "w": items[1]}
    as_povm = [i.as_povm() if isinstance(i, BasisSet) else i for i in items]
    if rel in (Relation.EQ12, Relation.EQ14):
        return {"P": as_povm[0], "Q": as_povm[1]}
    if rel in (Relation.EQ13, Relation.EQ15):
        return {"P": as_povm[0]}
    if rel is Relation.EQ16:
        return {"P": as_povm[0], "N": as_povm[1]}
    return {}


# -- commands -------------------------------------------------------------------


def cmd_verify(args) -> tuple[dict, int, str]:
    rel = Relation(args.relation)
    dims = _parse_dims(args.dims) or list(DEFAULT_DIMS[rel])
    cfg = RunConfig("verify", args.seed, args.trials, dims, args.tol_eq, args.format,
                    args.out, rel.value, {"state": args.state, "basis": args.basis,
                                          "projector": args.projector})
    cfg.validate(randomized=args.state is None)
    reports = []
    if args.state:
        state = uio.load(args.state)
        if not isinstance(state, QState):
            raise UncertError("--state file must hold a state")
        kw = _relation_inputs(rel, args.basis, state.dims[0])
        if args.projector:
            kw["projector"] = uio.load(args.projector)
        if rel is Relation.EQ26:
            kw["subdims"] = dims[:-1] if len(dims) > 1 else [state.dims[0]]
        rep = eval_relation(rel, state, tol_eq=args.tol_eq, **kw)
        reports.append({"trial": 0, "seed": None, **rep.to_dict()})
    else:
        for i in range(args.trials):
            seed = trial_seed(args.seed, i)
            state, kw = random_instance(rel, dims, seed)
            rep = eval_relation(rel, state, tol_eq=args.tol_eq, **kw)
            reports.append({"trial": i, "seed": seed, **rep.to_dict()})
    summary = _report_summary(reports)
    doc = _document(cfg, reports, summary)
    text = _csv_reports(reports) if args.format == "csv" else uio.dumps(doc)
    return doc, (EXIT_FAIL if summary["violations"] else EXIT_OK), text


def _spec_from_args(args) -> tuple[str, object]:
    """``(family, spec)`` from ``--spec`` or from ``--family/--dims/--s`` flags."""
    if args.spec:
        data = uio.read_json(args.spec)
        kind = data.get("type", "family") if isinstance(data, dict) else None
        if kind == "family":
            return data.get("family", "thm4"), MusFamilySpec.from_dict(data)
        if kind == "omega":
            terms = [OmegaTerm(int(t["s"]), int(t["beta"]), int(t["gamma"]), float(t["g"]),
                               uio.matrix_from_json(t["side"])) for t in data["terms"]]
            return "omega", (int(data["d"]), terms)
        if kind == "lambda":
            kets = [np.asarray(k, dtype=float) for k in data.get("kets", [])]
            kets = [k[..., 0] + 1j * k[..., 1] for k in kets]
            return "lambda", (data["kind"], kets)
        raise UncertError(f"unknown spec type {kind!r}")
    family = args.family or "thm4"
    dims = _parse_dims(args.dims) or [4]
    s = _parse_dims(args.s) or [factors(dims[0]).factors[1]]
    if args.seed is None:
        raise UncertError("--seed is required to draw a random family spec")
    return family, random_family_spec(dims, s, args.db, args.seed)


def _purify_ab(state: QState) -> QState:
    """Pure ``abc`` extension of a bipartite ``ab`` state, ``c`` of dimension rank."""
    ket = qmath.purify(state.matrix)
    r = ket.size // state.matrix.shape[0]
    return QState.from_ket(ket, (*state.dims, r))


def cmd_mus(args) -> tuple[dict, int, str]:
    cfg = RunConfig("mus", args.seed, 1, _parse_dims(args.dims), args.tol_eq, "json",
                    args.out, None, {"action": args.action, "spec": args.spec,
                                     "state": args.state, "family": args.family,
                                     "s": args.s, "db": args.db})
    code = EXIT_OK
    if args.action == "construct":
        family, spec = _spec_from_args(args)
        result: dict = {"family": family}
        if family == "omega":
            d, terms = spec
            state = construct_omega(d, terms)
            rep = eval_relation(Relation.EQ23, state, tol_eq=args.tol_eq)
        elif family == "lambda":
            kind, kets = spec
            state = construct_lambda(kind, *kets) if kets else construct_lambda(kind)
            first, second = check_mus_equality(state, args.tol_eq)
            result["equality"] = [first.to_dict(), second.to_dict()]
            rep = None
            if first.holds is not Verdict.EQUALITY or second.holds is not Verdict.EQUALITY:
                code = EXIT_FAIL
        else:
            builder = {"thm2": construct_thm2, "thm4": construct_thm4_iii,
                       "thm5": construct_thm5}.get(family, construct_family)
            state = builder(spec)
            result["spec"] = spec.to_dict()
            if len(spec.dims) > 1:
                rep = eval_relation(Relation.EQ26, state, subdims=spec.dims, tol_eq=args.tol_eq)
                result["recovery_residual"] = mus_recovery_residual(state, spec.dims)
            else:
                rep = eval_relation(Relation.EQ22, state, tol_eq=args.tol_eq)
                result["recovery_residual"] = mus_recovery_residual(state)
        if rep is not None:
            result["report"] = rep.to_dict()
            if rep.holds is not Verdict.EQUALITY:
                code = EXIT_FAIL
        result["state"] = uio.state_to_json(state)
        if args.state_out:
            uio.write_atomic(args.state_out, uio.dumps(uio.state_to_json(state)))
    else:
        if not args.state:
            raise UncertError(f"mus {args.action} needs --state")
        state = uio.load(args.state)
        if not isinstance(state, QState):
            raise UncertError("--state file must hold a state")
        if len(state.dims) == 2:
            state = _purify_ab(state)
        if args.action == "check":
            first, second = check_mus_equality(state, args.tol_eq)
            is_mus = (first.holds is Verdict.EQUALITY and second.holds is Verdict.EQUALITY)
            result = {"equality": [first.to_dict(), second.to_dict()],
                      "label": "MUS" if is_mus else "NotMus"}
            code = EXIT_OK if is_mus else EXIT_FAIL
        else:
            label = classify_mus(state, args.tol_eq, strict=False)
            result = label.to_dict()
            code = EXIT_FAIL if label.label.value == "NotMus" else EXIT_OK
    doc = _document(cfg, [result], {"exit_code": code})
    return doc, code, uio.dumps(doc)


def cmd_bound(args) -> tuple[dict, int, str]:
    cfg = RunConfig("bound", args.seed, 1, [], args.tol_eq, "json", args.out, None,
                    {"basis": args.basis, "projector": args.projector,
                     "fourier": args.fourier})
    if args.fourier:
        z, x = fourier_pair(args.fourier)
        items = [z, x]
    elif args.basis:
        items = _load_list(args.basis)
    else:
        raise UncertError("bound needs --basis FILE or --fourier D")
    if len(items) == 1:
        items = items * 2
    a, b = items[0], items[1]
    proj = uio.load(args.projector) if args.projector else None
    result = {}
    if isinstance(a, BasisSet) and isinstance(b, BasisSet):
        r = overlap_r(a, b)
    else:
        r = r_povm(a, b)
    result["r"] = {"value": r.value, "neg_log": r.neg_log, "arg_max": list(r.arg_max)}
    single = single_povm_bound(a, None)
    result["single"] = {"value": single.value, "neg_log": single.neg_log}
    if proj is not None:
        rp = r_projected(a, b, proj)
        sp = single_povm_bound(a, proj)
        result["r_projected"] = {"value": rp.value, "neg_log": rp.neg_log,
                                 "arg_max": list(rp.arg_max)}
        result["single_projected"] = {"value": sp.value, "neg_log": sp.neg_log}
    doc = _document(cfg, [result], {})
    return doc, EXIT_OK, uio.dumps(doc)


def cmd_search(args) -> tuple[dict, int, str]:
    rel = Relation(args.relation or "EQ20")
    dims = _parse_dims(args.dims) or [2]
    cfg = RunConfig("search", args.seed, 1, dims, args.tol_eq, "json", args.out, rel.value,
                    {"restarts": args.restarts, "max_iter": args.max_iter,
                     "target": args.target})
    cfg.validate(randomized=True)
    d_b = dims[1] if len(dims) > 1 else 1
    obj = GapObjective(rel, dims[0], d_b)
    res = minimize_gap(obj, args.seed, args.restarts, args.max_iter, target=args.target)
    family = "corollary3" if rel is Relation.EQ24 else (
        "thm4" if rel is Relation.EQ20 else "thm4_diag")
    dist, member = nearest_family(res.best_state, family)
    result = {"best_gap": res.best_gap, "iterations": res.iterations,
              "restarts_used": res.restarts_used, "converged": res.converged,
              "nearest_family": {"family": family, "distance": dist, "member": member},
              "best_state": uio.state_to_json(res.best_state)}
    doc = _document(cfg, [result], {"best_gap": res.best_gap})
    code = EXIT_OK if res.best_gap >= -1e-9 else EXIT_FAIL
    return doc, code, uio.dumps(doc)


def cmd_trace(args) -> tuple[dict, int, str]:
    dims = _parse_dims(args.dims) or [2, 2, 2]
    cfg = RunConfig("trace", args.seed, args.trials, dims, args.tol_eq, "json", args.out,
                    None, {"state": args.state, "basis": args.basis})
    cfg.validate(randomized=args.state is None)
    results = []
    if args.state:
        states = [(None, uio.load(args.state))]
    else:
        states = [(trial_seed(args.seed, i), random_state(dims, 1, trial_seed(args.seed, i)))
                  for i in range(args.trials)]
    bad = 0
    for i, (seed, state) in enumerate(states):
        if args.basis:
            v, w = _load_list(args.basis)[:2]
        else:
            v, w = fourier_pair(state.dims[0])
        tr = dp_trace(state, v, w)
        viol = tr.violations()
        bad += bool(viol)
        chain = [tr.step5, tr.step6, tr.step7, tr.step8_form, tr.step9_equiv]
        equal = max(chain) - min(chain) <= args.tol_eq
        results.append({"trial": i, "seed": seed, **tr.to_dict(), "violations": viol,
                        "all_equal": equal})
    doc = _document(cfg, results, {"trials": len(results), "violations": bad})
    return doc, (EXIT_FAIL if bad else EXIT_OK), uio.dumps(doc)


def cmd_scan(args) -> tuple[dict, int, str]:
    grid = bloch_grid_scan(args.step)
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["r_x", "r_y", "r_z", "zeta"])
    for row in grid:
        writer.writerow([repr(float(v)) for v in row])
    code = EXIT_OK if grid[:, 3].min() >= -1e-9 else EXIT_FAIL
    return {}, code, buf.getvalue()


# -- argument parsing ------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (64-bit unsigned)")
    p.add_argument("--dims", default=None, help="comma-separated subsystem dimensions")
    p.add_argument("--tol-eq", type=float, default=TOL_EQ, help="equality tolerance in bits")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uncert",
        description="Evaluate, fuzz and saturate entropic uncertainty relations "
                    "with quantum side information.")
    parser.add_argument("--version", action="version", version=f"uncert {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="fuzz or evaluate one relation")
    _common(p)
    p.add_argument("--relation", required=True, choices=[r.value for r in Relation])
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--state", default=None, help="evaluate on this state file")
    p.add_argument("--basis", default=None, help="bases/POVMs file (list)")
    p.add_argument("--projector", default=None, help="projector file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mus", help="construct, check or classify minimum-uncertainty states")
    _common(p)
    p.add_argument("action", choices=("construct", "check", "classify"))
    p.add_argument("--spec", default=None, help="family spec JSON")
    p.add_argument("--state", default=None, help="state JSON")
    p.add_argument("--family", default=None, choices=("thm2", "thm4", "thm5"))
    p.add_argument("--s", default=None, help="divisor(s) of the factor dims")
    p.add_argument("--db", type=int, default=2, help="side-system dimension")
    p.add_argument("--state-out", default=None, help="write the constructed state here")
    p.set_defaults(func=cmd_mus)

    p = sub.add_parser("bound", help="overlap constants r(v,w), r(P,Q), r(P,Q;Pi)")
    _common(p)
    p.add_argument("--basis", default=None, help="file with one or two bases/POVMs")
    p.add_argument("--projector", default=None)
    p.add_argument("--fourier", type=int, default=None, help="use the Fourier pair of this dim")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("search", help="numerically minimize a relation gap")
    _common(p)
    p.add_argument("--relation", default="EQ20",
                   choices=("EQ20", "EQ21", "EQ22", "EQ23", "EQ24"))
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--target", type=float, default=None,
                   help="stop after the first restart reaching this gap")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("trace", help="stage values of the data-processing argument")
    _common(p)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--state", default=None)
    p.add_argument("--basis", default=None)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("scan", help="Bloch-ball grid of the three-basis qubit gap (CSV)")
    p.add_argument("--step", type=float, default=0.02)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _, code, text = args.func(args)
    except (UncertError, KeyError, TypeError, ValueError) as exc:
        sys.stderr.write(f"uncert: error: {exc}\n")
        return EXIT_USAGE
    _emit(text, args.out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
