"""Command-line entry point.

Exit codes: 0 when every certificate passes, 1 when one fails (reports are
still written), 2 for malformed input.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import numpy as np

from . import characterizations as ch
from . import formats as fm
from .coarse_maps import (check_coarsely_onto, check_effectively_proper, check_uniformly_expansive,
                          find_coarse_inverse, restrict_witness, transport_witness)
from .coarse_structure import (Entourage, coarse_map_check, crosscheck_asdim, crosscheck_property_a,
                               sako_property_a_verify)
from .covers_asdim import ad_x_estimate, enlarge_family, verify_asdim_witness
from .embedding import EmbeddingConfig, build_embedding, distortion_report, level_witnesses
from .exceptions import CertificateError, DomainError, FuzzyCoarseError
from .fuzzy_space import (BUILTINS, ball, builtin_space, random_metric,
                          random_stationary_values, standard_space, stationary_space, verify_axioms)
from .numerics import Tolerance
from .property_a import (ParamTuple, construct_from_cover, ex39_witness, subexp_check, subexp_field,
                         verify_witness)

RANDOM_KINDS = ("random-standard", "random-stationary")
STEPS = ("i-ii", "ii-iii", "iii-iv", "iv-v", "v-vi", "vi-iii", "iii-i", "roundtrip")


@dataclass
class Outcome:
    passed: bool
    report: object
    summary: list = field(default_factory=list)
    artifact: object = None  # JSON-ready; written to --out when present


# -- argument helpers ----------------------------------------------------------------


def _floats(text: str) -> list:
    """'a,b,c' or 'logspace:lo:hi:count'."""
    if text.startswith("logspace:"):
        _, lo, hi, k = text.split(":")
        return list(np.logspace(float(lo), float(hi), int(k)))
    return [float(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list:
    try:
        return _floats(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--space", action="append", default=[], help="space file (twice for source and target)")
    p.add_argument("--witness", action="append", default=[], help="witness file (repeat for level witnesses)")
    p.add_argument("--cover", help="cover file")
    p.add_argument("--map", help="map file")
    p.add_argument("--input", help="kernel, operator or field file for a transform step")
    p.add_argument("--families", help="disjoint-families file")
    p.add_argument("--entourage", help="entourage file")
    p.add_argument("--eps", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--x", help="point label")
    p.add_argument("--n", type=int, help="size for gen, averaging length for subexp")
    p.add_argument("--dim", type=int, default=1, help="cover dimension n (multiplicity n + 1)")
    p.add_argument("--subset", help="comma-separated point labels")
    p.add_argument("--bound", type=_float_list, help="r_b,t_b size bound for adx")
    p.add_argument("--t-grid", type=_float_list, help="'a,b,c' or 'logspace:lo:hi:count'")
    p.add_argument("--ladder", type=_float_list)
    p.add_argument("--levels", type=int)
    p.add_argument("--base")
    p.add_argument("--tol", type=float, help="certification margin")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="artifact (or report) output path")
    p.add_argument("--cert", help="report output path when --out holds an artifact")
    p.add_argument("--format", choices=("json", "text"), default="text")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _parent()
    parser = argparse.ArgumentParser(prog="fuzzycoarse", description="Coarse geometry of finite fuzzy metric spaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-axioms", parents=[parent], help="check the fuzzy metric axioms on a grid")
    sub.add_parser("ball", parents=[parent], help="list B(x, r, t)")
    g = sub.add_parser("gen", parents=[parent], help="write a builtin or random space file")
    g.add_argument("kind", choices=BUILTINS + RANDOM_KINDS)
    for name, choices in (("property-a", ("verify", "from-cover", "ex39", "subexp")),
                          ("asdim", ("verify", "enlarge", "adx")),
                          ("coarse-map", ("check", "inverse", "transport", "restrict")),
                          ("embed", ("build", "report")),
                          ("appendix", ("crosscheck",))):
        sp = sub.add_parser(name, parents=[parent])
        sp.add_argument("action", choices=choices)
    sp = sub.add_parser("transform", parents=[parent], help="one characterization step or the round trip")
    sp.add_argument("step", choices=STEPS)
    return parser


def _tol(args) -> Tolerance:
    return Tolerance(margin=args.tol) if args.tol is not None else Tolerance()


def _space(args, k=0):
    if len(args.space) <= k:
        raise DomainError("--space is required" if k == 0 else "a second --space (the target) is required")
    return fm.load_space(args.space[k])


def _need(value, flag):
    if value is None:
        raise DomainError(f"{flag} is required")
    return value


def _params(args, base: ParamTuple | None = None) -> ParamTuple:
    eps = args.eps if args.eps is not None else (base.eps if base else None)
    r = args.r if args.r is not None else (base.r if base else None)
    t = args.t if args.t is not None else (base.t if base else None)
    return ParamTuple(_need(eps, "--eps"), _need(r, "--r"), _need(t, "--t"))


def _witness(args, space, k=0):
    if len(args.witness) <= k:
        raise DomainError("--witness is required")
    return fm.witness_from_json(space, fm.read_json(args.witness[k]), args.witness[k])


def _cover(args, space):
    path = _need(args.cover, "--cover")
    return fm.cover_from_json(space, fm.read_json(path), path)


def _labels(space, idx):
    return [space.labels[i] for i in idx]


# -- commands -----------------------------------------------------------------------------


def cmd_verify_axioms(args) -> Outcome:
    space = _space(args)
    grid = args.t_grid
    rep = verify_axioms(space, grid, grid, _tol(args))
    lines = [f"{'PASS' if c.passed else 'FAIL'} {c.name}: worst {c.worst:.3g}"
             + (f" at {c.witness}" if not c.passed and c.witness is not None else "") for c in rep.checks]
    return Outcome(rep.passed, rep, lines)


def cmd_ball(args) -> Outcome:
    space = _space(args)
    pts = sorted(ball(space, _need(args.x, "--x"), _need(args.r, "--r"), _need(args.t, "--t")))
    labels = _labels(space, pts)
    return Outcome(True, {"x": args.x, "r": args.r, "t": args.t, "points": labels}, [" ".join(labels)])


def cmd_gen(args) -> Outcome:
    n = _need(args.n, "--n")
    if args.kind in BUILTINS:
        space = builtin_space(args.kind, n)
    else:
        rng = np.random.default_rng(args.seed)
        name = f"{args.kind}-{n}-seed{args.seed}"
        if args.kind == "random-standard":
            space = standard_space(random_metric(n, rng), name=name)
        else:
            space = stationary_space(random_stationary_values(n, rng), name=name)
    doc = fm.space_to_json(space)
    return Outcome(True, doc, [f"{space.name}: {space.n} points"], doc)


def cmd_property_a(args) -> Outcome:
    space, tol = _space(args), _tol(args)
    if args.action == "verify":
        w, p0 = _witness(args, space)
        p = _params(args, p0)
        cert = verify_witness(space, w, p, tol)
        line = f"{'PASS' if cert.passed else 'FAIL'} worst ratio {cert.worst_ratio:.6g} over {cert.close_pairs} close pairs"
        return Outcome(cert.passed, cert, [line] + cert.failures)
    if args.action == "from-cover":
        p = _params(args)
        w, rep = construct_from_cover(space, _cover(args, space), p, args.dim, tol)
        line = (f"{'PASS' if rep.passed else 'FAIL'} K={rep.requirements.K} worst ratio "
                f"{rep.certificate.worst_ratio:.6g}, max |proj| {rep.max_projection}, max |sym diff| {rep.max_sym_diff}")
        return Outcome(rep.passed, rep, [line], fm.witness_to_json(space, w, p))
    if args.action == "ex39":
        r = _need(args.r, "--r")
        res = ex39_witness(space, r)
        p = ParamTuple(args.eps if args.eps is not None else 1e-6, r, args.t if args.t is not None else 1.0)
        cert = verify_witness(space, res.witness, p, tol)
        report = {"N": res.N, "representative": space.labels[res.representative], "clamped": res.clamped,
                  "support_r": res.support_r, "support_ok": res.support_ok, "certificate": cert}
        ok = cert.passed and res.support_ok
        line = f"{'PASS' if ok else 'FAIL'} N={res.N} worst ratio {cert.worst_ratio:.3g}" + (" (clamped)" if res.clamped else "")
        return Outcome(ok, report, [line], fm.witness_to_json(space, res.witness, p))
    # subexp
    r, n = _need(args.r, "--r"), _need(args.n, "--n")
    f = subexp_field(space, _cover(args, space), r, n)
    chk = subexp_check(space, f, args.t if args.t is not None else 1.0)
    ok = chk.passed and f.support_ok
    report = {"check": chk, "support_ok": f.support_ok, "multiplicity": f.multiplicity,
              "representatives": _labels(space, f.representatives)}
    line = f"{'PASS' if ok else 'FAIL'} n={n}: worst l1 {chk.worst:.6g} <= bound {chk.bound:.6g} (slack {chk.slack:.3g})"
    return Outcome(ok, report, [line], {"kind": "l1", "labels": list(space.labels), "vectors": f.vectors.tolist()})


def _step_line(c: ch.StepCertificate) -> str:
    bad = [k for k, v in c.checks.items() if not v]
    eps = "" if c.eps is None else f" bound {c.eps:.6g}"
    obs = "" if c.observed is None else f" observed {c.observed:.6g}"
    return f"{'PASS' if c.passed else 'FAIL'} {c.step}:{eps}{obs}" + (f" failed {bad}" if bad else "")


def cmd_transform(args) -> Outcome:
    space, tol = _space(args), _tol(args)
    step = args.step
    if step in ("i-ii", "roundtrip"):
        if args.witness:
            w, p0 = _witness(args, space)
            p = _params(args, p0)
        else:
            p = _params(args)
            w, rep = construct_from_cover(space, _cover(args, space), p, args.dim, tol)
            if not rep.passed:
                raise CertificateError("cover-built witness does not verify", claim="witness")
        if step == "i-ii":
            f, c = ch.witness_to_l1(space, w, p, tol)
            return Outcome(c.passed, c, [_step_line(c)], fm.field_to_json(space, f))
        rt = ch.roundtrip(space, w, p, tol)
        lines = [_step_line(c) for c in rt.steps]
        lines.append(f"nominal chain {'closes' if rt.nominal_closes else 'does not close'}: "
                     + ", ".join(f"{s}={e:.3g}" for s, e in rt.nominal))
        lines.append("tracked chain: " + ", ".join(f"{s}={e:.3g}" for s, e in rt.tracked))
        lines.append(f"{'PASS' if rt.passed else 'FAIL'} composed eps' = {rt.eps_final:.6g} "
                     f"(inflation x{rt.eps_final / p.eps:.3g})")
        report = {"params": p, "passed": rt.passed, "eps_final": rt.eps_final,
                  "inflation": rt.eps_final / p.eps, "nominal_closes": rt.nominal_closes,
                  "nominal": rt.nominal, "tracked": rt.tracked, "steps": rt.steps}
        return Outcome(rt.passed, report, lines, fm.witness_to_json(space, rt.witness))
    art = fm.load_artifact(space, _need(args.input, "--input"))
    want = {"ii-iii": ch.L1Field, "iii-iv": ch.L2Field, "iv-v": ch.L2Field, "v-vi": ch.Kernel,
            "vi-iii": ch.PropagatedOperator, "iii-i": ch.L2Field}[step]
    if not isinstance(art, want):
        raise DomainError(f"step {step} needs a {want.__name__} input")
    if step == "ii-iii":
        f, c = ch.l1_to_l2(space, art, _params(args), tol)
        out = fm.field_to_json(space, f)
    elif step == "iii-iv":
        win, c = ch.orthogonality_window(space, art)
        out = fm.window_json(win)
    elif step == "iv-v":
        k, c = ch.l2_to_kernel(space, art, _params(args), tol)
        out = fm.kernel_to_json(space, k)
    elif step == "v-vi":
        S, c = ch.kernel_to_operator(space, art)
        out = fm.operator_to_json(space, S)
    elif step == "vi-iii":
        p = _params(args)
        f, c = ch.operator_to_l2(space, art, p.eps, p.r, p.t, tol)
        out = fm.field_to_json(space, f)
    else:
        p = _params(args)
        w, c = ch.l2_to_witness(space, art, p.eps, p.r, p.t, tol)
        out = fm.witness_to_json(space, w, ParamTuple(c.eps, p.r, p.t))
    return Outcome(c.passed, c, [_step_line(c)], out)


def cmd_asdim(args) -> Outcome:
    space, tol = _space(args), _tol(args)
    if args.action == "verify":
        path = _need(args.families, "--families")
        fams = fm.families_from_json(space, fm.read_json(path), path)
        rep = verify_asdim_witness(space, fams, tol)
        worst = min((f.worst_margin for f in rep.families), default=float("inf"))
        return Outcome(rep.passed, rep, [f"{'PASS' if rep.passed else 'FAIL'} n={rep.n}, worst margin {worst:.3g}"])
    if args.action == "enlarge":
        cover = _cover(args, space)
        big = enlarge_family(space, cover.sets, _need(args.r, "--r"), _need(args.t, "--t"))
        doc = {"sets": [_labels(space, sorted(s)) for s in big]}
        return Outcome(True, doc, [f"{len(big)} enlarged members"], doc)
    ladder = args.ladder or [1.0, 10.0, 100.0]
    bound = tuple(args.bound) if args.bound else None
    table = ad_x_estimate(space, _need(args.r, "--r"), ladder, bound, args.seed)
    lines = [f"{table.label}: r'={table.r_prime:.6g}"]
    lines += [f"t={e.t:g}: " + ("no admissible cover found" if e.estimate is None else f"ad_X <= {e.estimate}")
              for e in table.entries]
    lines += table.notes
    report = {"r": table.r, "r_prime": table.r_prime, "bound": table.bound, "seed": table.seed,
              "label": table.label, "notes": table.notes,
              "entries": [{"t": e.t, "estimate": e.estimate, "multiplicity": e.multiplicity,
                           "cover": None if e.cover is None else [_labels(space, sorted(s)) for s in e.cover.sets]}
                          for e in table.entries]}
    return Outcome(True, report, lines)


def _map(args):
    src, tgt = _space(args, 0), _space(args, 1)
    path = _need(args.map, "--map")
    return fm.map_from_json(src, tgt, fm.read_json(path), path)


def cmd_coarse_map(args) -> Outcome:
    tol = _tol(args)
    ladder = args.ladder or (0.1, 0.3, 0.5, 0.7, 0.9)
    if args.action == "restrict":
        space = _space(args)
        w, p0 = _witness(args, space)
        p = _params(args, p0)
        sub = _need(args.subset, "--subset").split(",")
        subspace, out, rep = restrict_witness(space, sub, w, p, tol)
        line = f"{'PASS' if rep.passed else 'FAIL'} restricted to {subspace.n} points"
        return Outcome(rep.passed, rep, [line], fm.witness_to_json(subspace, out, p))
    f = _map(args)
    if args.action == "check":
        exp = check_uniformly_expansive(f, ladder, args.t_grid)
        prop = check_effectively_proper(f, ladder, args.t_grid)
        onto = check_coarsely_onto(f)
        inv = find_coarse_inverse(f, ladder)
        ok = exp.passed and prop.passed and onto is not None and inv.inverse is not None
        lines = [f"{'PASS' if exp.passed else 'FAIL'} uniformly expansive",
                 f"{'PASS' if prop.passed else 'FAIL'} effectively proper (ladder trend)",
                 f"{'PASS' if onto is not None else 'FAIL'} coarsely onto",
                 f"{'PASS' if inv.inverse is not None else 'FAIL'} coarse inverse" + (f": {inv.reasons}" if inv.reasons else "")]
        report = {"expansive": exp, "proper": prop, "onto": onto,
                  "inverse": {"found": inv.inverse is not None, "reasons": inv.reasons,
                              "fg_close": inv.fg_close, "gf_close": inv.gf_close}}
        return Outcome(ok, report, lines)
    if args.action == "inverse":
        inv = find_coarse_inverse(f, ladder)
        ok = inv.inverse is not None
        report = {"found": ok, "reasons": inv.reasons, "fg_close": inv.fg_close, "gf_close": inv.gf_close}
        return Outcome(ok, report, [f"{'PASS' if ok else 'FAIL'} coarse inverse"] + inv.reasons,
                       fm.map_to_json(inv.candidate))
    # transport
    w, p0 = _witness(args, f.source)
    p = _params(args, p0)
    inv = find_coarse_inverse(f, ladder)
    out, rep = transport_witness(f, inv.candidate, w, p, tol)
    ok = rep.passed and inv.inverse is not None
    lines = [f"{'PASS' if rep.passed else 'FAIL'} transported witness at {p}"]
    if inv.inverse is None:
        lines.append(f"FAIL f is not a coarse equivalence: {inv.reasons}")
    return Outcome(ok, rep, lines, fm.witness_to_json(f.target, out, p))


def cmd_embed(args) -> Outcome:
    space, tol = _space(args), _tol(args)
    N = args.levels or 6
    cfg = EmbeddingConfig(N=N, base=space.idx(args.base) if args.base is not None else 0)
    if args.witness:
        ws = [_witness(args, space, k)[0] for k in range(len(args.witness))]
    else:
        ws = level_witnesses(space, _cover(args, space), cfg, args.dim, tol)
    E = build_embedding(space, ws, cfg, tol)
    d = E.diagnostics
    lines = [f"{'PASS' if not d.sqrt2_vs_disjoint and not d.condition_exceptions else 'FAIL'} (a) sqrt 2 blocks: "
             f"{len(d.sqrt2_vs_disjoint)} disjointness mismatches, {len(d.condition_exceptions)} condition exceptions",
             f"{'PASS' if not d.bound_b_violations else 'FAIL'} (b) ||F(x)-F(y)||^2 < 4N''+1: "
             f"{len(d.bound_b_violations)} violations",
             f"{'PASS' if all(not v[2] for v in d.bound_c.values()) else 'FAIL'} (c) sqrt 2 count <= R^2/2 for R in 1,2,3"]
    if args.action == "build":
        return Outcome(d.passed, fm.embedding_report_json(E), lines)
    rep = distortion_report(E)
    lines += [f"level {lv}: {k} close pairs, worst block {wb:.4g} <= {b:.4g}: {'ok' if ok else 'VIOLATED'}"
              for lv, k, wb, b, ok in rep.expansive]
    lines.append(f"monotonicity from base: {len(rep.monotone_violations)} violations")
    report = {"rows": [{"x": space.labels[x], "y": space.labels[y], "M": m, "dist": dist} for x, y, m, dist in rep.rows],
              "expansive": rep.expansive, "proper": rep.proper,
              "monotone_violations": rep.monotone_violations, "notes": rep.notes + E.notes}
    return Outcome(rep.passed and d.passed, report, lines)


def cmd_appendix(args) -> Outcome:
    space, tol = _space(args), _tol(args)
    report, lines, ok = {}, [], True
    if args.witness:
        w, p0 = _witness(args, space)
        p = _params(args, p0)
        cc = crosscheck_property_a(space, w, p, tol)
        report["property_a"] = {"fuzzy": cc.fuzzy, "coarse": cc.coarse, "agrees": cc.agrees, "boundary": cc.boundary}
        lines.append(f"{'AGREE' if cc.agrees else 'DISAGREE'} property A: fuzzy={cc.fuzzy} coarse={cc.coarse}")
        ok &= cc.agrees
    if args.families:
        fams = fm.families_from_json(space, fm.read_json(args.families), args.families)
        cc = crosscheck_asdim(space, fams, tol)
        report["asdim"] = {"fuzzy": cc.fuzzy, "coarse": cc.coarse, "agrees": cc.agrees, "boundary": cc.boundary}
        lines.append(f"{'AGREE' if cc.agrees else 'DISAGREE'} asdim: fuzzy={cc.fuzzy} coarse={cc.coarse}")
        ok &= cc.agrees or cc.boundary
    if args.entourage and args.witness:
        E = fm.entourage_from_json(space, fm.read_json(args.entourage), args.entourage)
        sako = sako_property_a_verify(space, E, w, p.eps, tol)
        report["sako"] = sako
        lines.append(f"{'PASS' if sako.passed else 'FAIL'} property A on the given entourage")
    if args.map and len(args.space) > 1:
        f = _map(args)
        E = Entourage.closeness(f.source, _need(args.r, "--r"), _need(args.t, "--t"))
        rep = coarse_map_check(f, [E], [list(range(f.target.n))])
        report["coarse_map"] = rep
        lines.append(f"{'AGREE' if rep.agrees else 'DISAGREE'} bornologous vs expansive on the ladder")
        ok &= rep.agrees
    if not report:
        raise DomainError("crosscheck needs --witness and/or --families")
    return Outcome(ok, report, lines)


COMMANDS = {"verify-axioms": cmd_verify_axioms, "ball": cmd_ball, "gen": cmd_gen, "property-a": cmd_property_a,
            "transform": cmd_transform, "asdim": cmd_asdim, "coarse-map": cmd_coarse_map, "embed": cmd_embed,
            "appendix": cmd_appendix}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        res = COMMANDS[args.command](args)
    except CertificateError as exc:
        print(f"FAIL {exc.claim or 'certificate'}: {exc}", file=sys.stderr)
        return 1
    except FuzzyCoarseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    report = fm.dumps(res.report)
    if res.artifact is not None and args.out:
        fm.write_json(res.artifact, args.out)
        if args.cert:
            with open(args.cert, "w") as fh:
                fh.write(report)
    elif args.out:
        with open(args.out, "w") as fh:
            fh.write(report)
    if args.format == "json":
        sys.stdout.write(fm.dumps(res.artifact) if res.artifact is not None and not args.out
                         and args.command == "gen" else report)
    else:
        for line in res.summary:
            print(line)
    return 0 if res.passed else 1


if __name__ == "__main__":
    sys.exit(main())
