"""Command-line front end: ``lorcomp generate | verify | reproduce``.

Exit codes: 0 no violation found, 1 violation found, 2 usage or input error.
``LORCOMP_SEED`` supplies the default seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import comparison as cmp
from . import config as config_mod
from . import cset, report
from .errors import LorcompError, UnknownScenario
from .generators import (
    Ambient,
    Cylinder,
    FIXTURES,
    SprinkleSpec,
    bonnet_values,
    cylinder_scenario,
    fixture,
    parse_diamond,
    parse_rect,
    sprinkle,
)
from .model_spaces import ModelSpace, law_of_cosines_array
from .space import validate_axioms
from .verifier import Campaign, run_campaign

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
SCENARIOS = ("cylinder", "gluing", "bonnet")


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("LORCOMP_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"LORCOMP_SEED must be an integer, got {raw!r}") from None


def _floats(values) -> list[float]:
    out = []
    for v in values or ():
        out += [float(p) for p in str(v).split(",") if p.strip()]
    return out


def _names(values) -> list[str]:
    out = []
    for v in values or ():
        out += [p.strip() for p in str(v).split(",") if p.strip()]
    return out


# -- generate ----------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.fixture:
        sp = cylinder_scenario(seed=args.seed) if args.fixture == "cylinder-scenario" else fixture(args.fixture)
    else:
        if args.count is None and args.density is None:
            raise UsageError("give --count or --density (or --fixture)")
        if args.diamond and args.rect:
            raise UsageError("--diamond and --rect are exclusive")
        region = parse_diamond(args.diamond) if args.diamond else parse_rect(args.rect) if args.rect else None
        spec = SprinkleSpec(
            ambient=args.ambient,
            count=args.count,
            density=args.density,
            seed=args.seed,
            region=region,
            K=args.K,
            circumference=args.circumference,
            tau_mode=args.tau_mode,
            full_ads=args.full_ads,
        )
        sp = sprinkle(spec)
    out = Path(args.output)
    if args.json:
        out.write_text(json.dumps(report.clean(cset.to_json(sp)), indent=2) + "\n")
    else:
        cset.save(sp, out)
    print(f"wrote {out}: {sp.n} points, {len(sp.links)} links, {sp.n_pairs} related pairs")
    return EXIT_OK


# -- verify --------------------------------------------------------------------------


def _campaign_from(args) -> tuple[Campaign, dict]:
    kw: dict = {}
    output: dict = {}
    if args.config:
        cfg = config_mod.load(args.config)
        kw.update(cfg.campaign)
        output.update(cfg.output)
    if args.K:
        kw["K_grid"] = tuple(_floats(args.K))
    if args.direction:
        kw["directions"] = ("above", "below") if args.direction == "both" else (args.direction,)
    if args.formulation:
        forms = _names(args.formulation)
        kw["formulations"] = tuple(["triangle", "monotonicity", "angle", "hinge"] if forms == ["all"] else forms)
    for flag, name in (
        ("budget", "triangle_budget"),
        ("hinge_budget", "hinge_budget"),
        ("locality", "locality"),
        ("radius", "diamond_radius"),
        ("diamond_budget", "diamond_budget"),
        ("min_points", "diamond_min_points"),
        ("tau_tol", "tau_tol"),
        ("angle_tol", "angle_tol"),
        ("jobs", "jobs"),
    ):
        val = getattr(args, flag)
        if val is not None:
            kw[name] = val
    if args.seed is not None:
        kw["seed"] = args.seed
    elif "seed" not in kw:
        kw["seed"] = _default_seed()
    if args.diameter:
        kw["diameter"] = True
    if args.nondegeneracy_lemma:
        kw["nondegeneracy_lemma"] = True
    if args.report:
        output["report"] = args.report
    if args.csv:
        output["csv"] = args.csv
    try:
        return Campaign(**kw), output
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _print_summary(rep, doc, stream=None):
    stream = stream or sys.stdout
    for r in rep.results:
        v = r.verdict
        status = "pass" if v.passed else "FAIL"
        worst = "n/a" if v.worst_margin is None else f"{v.worst_margin:.3e}"
        print(f"{v.formulation.value:<12} {v.direction.value:<5} K={v.K:<6g} {status}  worst margin {worst}  samples {v.samples}", file=stream)
        if not v.passed and v.witnesses:
            print(f"  witness: {json.dumps(report.clean(v.witnesses[0]))}", file=stream)
    for d in rep.diameter:
        print(f"diameter     K={d['K']:g} {d['diameter']:.6g} <= {d['bound']:.6g}: {'pass' if d['passed'] else 'FAIL'}", file=stream)
    for d in rep.perimeter:
        print(f"perimeter    K={d['K']:g} max {d['max_perimeter']:.6g} < {d['bound']:.6g}: {'pass' if d['passed'] else 'FAIL'}", file=stream)
    for d in rep.nondegeneracy_lemma:
        print(f"nondegeneracy-lemma K={d['K']:g}: {'pass' if d['passed'] else 'FAIL'}", file=stream)
    for lg in rep.local:
        print(
            f"local        {lg['direction']:<5} K={lg['K']:g} diamonds {lg['diamond_count']} local {'pass' if lg['local_passed'] else 'FAIL'}"
            f"  global {'pass' if lg['global_passed'] else 'FAIL'}  unique maximizers {lg['uniqueness']['unique']}"
            f"  implication {'held' if lg['implication_held'] else 'BROKEN'}{' (vacuous)' if lg['implication_vacuous'] else ''}",
            file=stream,
        )
    if not rep.axioms["passed"]:
        print("axioms: FAIL " + ", ".join(c["name"] for c in rep.axioms["checks"] if not c["passed"]), file=stream)
    print(doc["summary"]["statement"], file=stream)


def cmd_verify(args) -> int:
    campaign, output = _campaign_from(args)
    path = Path(args.space)
    sp = cset.from_json(json.loads(path.read_text())) if path.suffix == ".json" else cset.load(path)
    rep = run_campaign(campaign, sp)
    effective = {"campaign": campaign.to_dict(), "output": dict(sorted(output.items()))}
    doc = report.build(rep, config=effective, source={"file": path.name})
    out = Path(output.get("report") or path.with_suffix(".report.json"))
    report.write(doc, out)
    if output.get("csv"):
        Path(output["csv"]).write_text(report.margins_csv(rep))
    if not args.quiet:
        _print_summary(rep, doc)
        print(f"report: {out}")
    return EXIT_OK if rep.passed else EXIT_VIOLATION


# -- reproduce -------------------------------------------------------------------------


def _polyline(geom, p, q, n=33, **kw):
    return np.atleast_2d(geom.geodesic(p, q, np.linspace(0.0, 1.0, n), **kw))


def _config_curves(prefix, cfg: cmp.ComparisonConfiguration) -> dict:
    x, y, z = cfg.vertices
    ms = cfg.model
    return {f"{prefix}-xy": _polyline(ms, x, y), f"{prefix}-yz": _polyline(ms, y, z), f"{prefix}-xz": _polyline(ms, x, z)}


def _strip(doc):
    d = dict(doc)
    return d.pop("runtime", None), d


def _reproduce_cylinder(seed: int, outdir: Path):
    sp = cylinder_scenario(seed=seed)
    geom = cmp.select_geometry(sp)
    cset.save(sp, outdir / "cylinder.cset")
    glob = run_campaign(Campaign(K_grid=(0.0,), directions=("above",), seed=seed), sp)
    loc = run_campaign(Campaign(K_grid=(0.0,), directions=("above",), seed=seed, locality="diamonds"), sp)
    tri = cmp.triangle_from_indices(geom, 0, 2, 4)
    cfg = cmp.realize_triangle(0.0, tri)
    p, q = geom.handle(1), geom.handle(3)
    p_bar, q_bar = cfg.point("xz", 0.25), cfg.point("yz", 0.5)
    pair = {
        "p": {"side": "xz", "fraction": 0.25, "point": p},
        "q": {"side": "yz", "fraction": 0.5, "point": q},
        "tau": geom.tau(p, q),
        "tau_bar": float(cfg.model.tau(p_bar, q_bar)),
        "triangle_degenerate": tri.degenerate,
        "maximizers_xz": geom.maximizers(tri.points[0], tri.points[2], 0.0),
    }
    cyl: Cylinder = geom.ambient
    x, y, z = tri.points
    wind = sorted(cyl.windings(x, z))
    best = max(cyl.windings(x, z).values())
    ties = [w for w in wind if abs(cyl.windings(x, z)[w] - best) <= 1e-12 * best]
    curves = {f"geodesic-xz-winding{w:+d}": _polyline(cyl, x, z, winding=w) for w in ties}
    curves["side-xy"] = _polyline(cyl, x, y)
    curves["side-yz"] = _polyline(cyl, y, z)
    curves.update(_config_curves("comparison", cfg))
    curves["points"] = [p, q, tuple(p_bar), tuple(q_bar)]
    g_doc, l_doc = report.build(glob), report.build(loc)
    g_rt, g_doc = _strip(g_doc)
    l_rt, l_doc = _strip(l_doc)
    global_exit = EXIT_OK if glob.passed else EXIT_VIOLATION
    local_exit = EXIT_OK if loc.passed else EXIT_VIOLATION
    ok = (
        global_exit == EXIT_VIOLATION
        and local_exit == EXIT_OK
        and pair["tau"] == 0.0
        and pair["tau_bar"] > 0.5
        and pair["triangle_degenerate"]
        and len(ties) == 2
    )
    lines = [
        f"fixture triangle (x, y, z) degenerate: {tri.degenerate}, sides {tuple(round(s, 6) for s in tri.sides)}",
        f"maximizing geodesics x -> z: {len(ties)} (windings {ties})",
        f"pair p on xz at 0.25, q on yz at 0.5: tau(p,q) = {pair['tau']:g}, tau_bar = {pair['tau_bar']:.6f}",
        f"global check K=0 above: {'pass' if glob.passed else 'FAIL'} (exit {global_exit})",
        f"local diamond checks K=0 above: {'pass' if loc.local[0]['local_passed'] else 'FAIL'} over {loc.local[0]['diamond_count']} diamonds (exit {local_exit})",
        f"uniqueness proxy holds: {loc.local[0]['uniqueness']['unique']} -> patchwork implication vacuous",
    ]
    body = {
        "fixture_pair": pair,
        "geodesics_xz": len(ties),
        "global": {"exit_code": global_exit, "report": g_doc},
        "local": {"exit_code": local_exit, "report": l_doc},
    }
    return body, curves, ok, lines, {"global": g_rt, "local": l_rt}


def _reproduce_gluing(seed: int, outdir: Path):
    sp = fixture("gluing-basic")
    geom = cmp.select_geometry(sp)
    tri = cmp.triangle_from_indices(geom, 0, 2, 3)
    x, y, z = tri.points
    cases = {
        "I": cmp.SidePoint("xz", sp.tau_at(0, 1) / tri.c, geom.handle(1)),
        "II-xy": cmp.SidePoint("xy", 0.5, tuple(geom.ambient.geodesic(x, y, 0.5))),
        "II-yz": cmp.SidePoint("yz", 0.5, tuple(geom.ambient.geodesic(y, z, 0.5))),
    }
    out, curves, ok, lines = {}, {}, True, []
    whole = {d: cmp.check_triangle(geom, tri, 0.0, d) for d in ("above", "below")}
    for name, p in cases.items():
        t1, t2 = cmp.glue_subdivide(geom, tri, p)
        entry = {"point": list(p.handle), "side": p.side.value, "fraction": p.fraction, "parts": []}
        for label, t in (("T1", t1), ("T2", t2)):
            vs = {d: cmp.check_triangle(geom, t, 0.0, d) for d in ("above", "below")}
            entry["parts"].append({"name": label, "vertices": t.label(), "sides": list(t.sides), **{d: v.to_dict() for d, v in vs.items()}})
            ok &= all(v.passed for v in vs.values())
            cfg = cmp.realize_triangle(0.0, t)
            curves.update(_config_curves(f"case{name}-{label}-comparison", cfg))
            lines.append(f"case {name} {label}: above {'pass' if vs['above'].passed else 'FAIL'}, below {'pass' if vs['below'].passed else 'FAIL'}")
        g = cmp.check_gluing(geom, tri, p, 0.0)
        entry["gluing_consistent"] = g.consistent
        ok &= g.consistent
        out[name] = entry
    for d, v in whole.items():
        ok &= v.passed
        lines.append(f"whole triangle {d}: {'pass' if v.passed else 'FAIL'} (worst margin {v.worst_margin:.2e})")
    ms = geom.ambient
    curves.update({"side-xy": _polyline(ms, x, y), "side-yz": _polyline(ms, y, z), "side-xz": _polyline(ms, x, z)})
    curves.update(_config_curves("whole-comparison", cmp.realize_triangle(0.0, tri)))
    body = {"triangle": tri.label(), "whole": {d: v.to_dict() for d, v in whole.items()}, "cases": out}
    return body, curves, ok, lines, {}


def _reproduce_bonnet(seed: int, outdir: Path):
    v = bonnet_values()
    t, m, w, pt, qt = v["t"], v["m"], v["omega"], v["p_tilde"], v["q_tilde"]
    mixed_residual = math.cos(m) * math.cos(t) - math.sin(m) * math.sin(t) * math.cosh(w) - math.cos(pt)
    same_residual = math.cos(m) * math.cos(t) + math.sin(m) * math.sin(t) * math.cosh(w) - math.cos(qt)
    half = (pt + qt) / 2
    steps = [
        ("t = pi/2 + eps/2", t),
        ("m", m),
        ("omega", w),
        ("p_tilde (past leg and beta, minus sign)", pt),
        ("residual cos m cos t - sin m sin t cosh omega - cos p_tilde", mixed_residual),
        ("q_tilde (future leg and beta, plus sign)", qt),
        ("residual cos m cos t + sin m sin t cosh omega - cos q_tilde", same_residual),
        ("cos(t)", math.cos(t)),
        ("cos((p_tilde + q_tilde)/2)", math.cos(half)),
        ("2m", 2 * m),
        ("p_tilde - q_tilde", pt - qt),
        ("pi/4", math.pi / 4),
        ("p_tilde + q_tilde", pt + qt),
        ("2t = tau(a, b)", 2 * t),
    ]
    window = 0 < 2 * m < pt - qt < math.pi / 4
    cos_ineq = math.cos(half) < math.cos(t)
    contradiction = pt + qt > 2 * t
    sp = fixture("bonnet-myers")
    geom = cmp.select_geometry(sp)
    h_mixed = cmp.hinge(geom, 1, 0, 2)
    h_same = cmp.hinge(geom, 1, 3, 2)
    hinge_checks = {
        "mixed": cmp.compare_hinge(-1.0, "below", h_mixed, w, geom).to_dict(),
        "same": cmp.compare_hinge(-1.0, "below", h_same, w, geom).to_dict(),
    }
    ax = validate_axioms(sp)
    rti = ax.check("reverse-triangle")
    ok = (
        window
        and cos_ineq
        and contradiction
        and abs(mixed_residual) < 1e-12
        and abs(same_residual) < 1e-12
        and all(abs(h["worst_margin"]) < 1e-9 for h in hinge_checks.values())
        and not rti.passed
    )
    lines = [f"{name:<62} {val: .12f}" for name, val in steps]
    lines += [
        f"window 0 < 2m < p_tilde - q_tilde < pi/4: {window}",
        f"cos((p_tilde + q_tilde)/2) < cos(t): {cos_ineq}",
        f"p_tilde + q_tilde > 2t: {contradiction} -> tau(a,b) >= tau(a,y) + tau(y,b) fails (witness {list(rti.witness or ())})",
        "so no pair can have tau > pi under a lower bound K = -1",
    ]
    ms = ModelSpace(-1.0)
    cfg_axy = cmp.realize_triangle(-1.0, (t, m, pt))
    cfg_xyb = cmp.realize_triangle(-1.0, (m, qt, t))
    curves = {**_config_curves("comparison-axy", cfg_axy), **_config_curves("comparison-xyb", cfg_xyb)}
    check = {
        "law_of_cosines_mixed": float(law_of_cosines_array(-1.0, m, t, w, "mixed")),
        "law_of_cosines_same": float(law_of_cosines_array(-1.0, m, t, w, "same")),
    }
    body = {
        "values": v,
        "steps": [{"name": n, "value": val} for n, val in steps],
        "window": window,
        "cos_inequality": cos_ineq,
        "contradiction": contradiction,
        "hinges": hinge_checks,
        "law_of_cosines": check,
        "axioms": ax.to_dict(),
        "model": ms.tag,
    }
    return body, curves, ok, lines, {}


_SCENARIO_FUNCS = {"cylinder": _reproduce_cylinder, "gluing": _reproduce_gluing, "bonnet": _reproduce_bonnet}


def reproduce(name: str, seed: int, outdir: Path) -> tuple[dict, bool, list[str]]:
    try:
        fn = _SCENARIO_FUNCS[name]
    except KeyError:
        raise UnknownScenario(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}") from None
    outdir.mkdir(parents=True, exist_ok=True)
    body, curves, ok, lines, runtime = fn(seed, outdir)
    doc = report.clean(
        {
            "format": report.FORMAT,
            "scenario": name,
            "config": {"seed": seed},
            **body,
            "summary": {"reproduced": bool(ok)},
            "runtime": runtime,
        }
    )
    report.write(doc, outdir / f"{name}.report.json")
    (outdir / f"{name}.polylines.csv").write_text(report.polylines_csv(curves))
    return doc, ok, lines


def cmd_reproduce(args) -> int:
    _, ok, lines = reproduce(args.name, args.seed, Path(args.outdir))
    for line in lines:
        print(line)
    print(f"reproduced: {ok}  (outputs in {args.outdir})")
    return EXIT_OK if ok else EXIT_VIOLATION


# -- entry point -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lorcomp", description="Timelike curvature comparison on finite Lorentzian spaces.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sprinkle a space or write a fixture")
    g.add_argument("--ambient", choices=[a.value for a in Ambient], default="minkowski")
    g.add_argument("--K", type=float, default=None, help="curvature for ads/desitter")
    g.add_argument("--circumference", type=float, default=2 * math.pi)
    g.add_argument("--diamond", help="causal diamond 't0,x0:t1,x1'")
    g.add_argument("--rect", help="chart rectangle 't0,t1,x0,x1'")
    g.add_argument("--count", type=int)
    g.add_argument("--density", type=float)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--tau-mode", choices=["inherited", "intrinsic-weighted", "intrinsic-link"], default="inherited")
    g.add_argument("--full-ads", action="store_true")
    g.add_argument("--fixture", choices=sorted(FIXTURES) + ["cylinder-scenario"])
    g.add_argument("--json", action="store_true", help="write the structured JSON export")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="run a verification campaign on a space file")
    v.add_argument("space")
    v.add_argument("--config")
    v.add_argument("--K", action="append", help="curvature(s); repeat or comma-separate")
    v.add_argument("--direction", choices=["above", "below", "both"])
    v.add_argument("--formulation", action="append", help="triangle, monotonicity, angle, hinge or all")
    v.add_argument("--diameter", action="store_true", help="also check the finite-diameter and perimeter bounds")
    v.add_argument("--nondegeneracy-lemma", action="store_true")
    v.add_argument("--locality", choices=["global", "diamonds"])
    v.add_argument("--radius", type=float)
    v.add_argument("--diamond-budget", type=int)
    v.add_argument("--min-points", type=int)
    v.add_argument("--budget", type=int, help="triangle budget")
    v.add_argument("--hinge-budget", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--tau-tol", type=float)
    v.add_argument("--angle-tol", type=float)
    v.add_argument("--jobs", type=int)
    v.add_argument("--report")
    v.add_argument("--csv")
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("reproduce", help="rerun a worked example")
    r.add_argument("name", help="|".join(SCENARIOS))
    r.add_argument("--outdir", default=".")
    r.add_argument("--seed", type=int, default=None)
    r.set_defaults(func=cmd_reproduce)
    return ap


def _attach_values(argv):
    """Join ``--K VALUE`` so lists like ``-1,-0.5`` are not taken for options."""
    out, it = [], iter(argv)
    for a in it:
        if a == "--K":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--K={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(_attach_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        if getattr(args, "seed", None) is None and args.command != "verify":
            args.seed = _default_seed()
        return args.func(args)
    except (UsageError, LorcompError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"lorcomp: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
