"""``symforma`` command line: analyze, simulate, verify.

Exit codes: 0 pass, 2 validation, 3 assumption, 4 divergence, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import control as ctl
from .exceptions import (
    ArgumentError,
    AssumptionError,
    IntegrationError,
    RepresentationError,
    ScenarioError,
    SymmetryError,
    UnsupportedActionError,
)
from .rigidity import check_orbit_isomorphism, classify
from .scenario import Scenario, load_scenario, serialize
from .sim import convergence_report, integrate
from .symmetry import cycle_notation
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ASSUMPTION = 3
EXIT_DIVERGENCE = 4
EXIT_VERIFY = 5

_VALIDATION_ERRORS = (ScenarioError, SymmetryError, RepresentationError, ArgumentError, UnsupportedActionError)


@dataclass
class RunManifest:
    command: str
    scenario: str | None
    scenario_hash: str | None
    version: str
    integrator: dict | None
    outputs: list = field(default_factory=list)
    duration_s: float = 0.0
    exit_code: int = 0

    @classmethod
    def for_scenario(cls, command: str, sc: Scenario | None):
        if sc is None:
            return cls(command, None, None, __version__, None)
        return cls(command, sc.name, sc.content_hash, __version__, dict(sc.document["integrator"]))

    def write(self, out_dir: Path, stem: str) -> Path:
        path = out_dir / f"{stem}_manifest.json"
        self.outputs.append(str(path))
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")
        return path


def _label(v: int) -> int:
    return v + 1


def analysis_report(sc: Scenario) -> dict:
    """Group, orbit, quotient and rigidity summary of a scenario."""
    s = sc.setup
    ctx = s.context
    group = ctx.action.group
    orbits = ctx.orbits
    report = {
        "scenario": sc.name,
        "group_order": len(group),
        "free_action": ctx.action.free,
        "vertex_orbits": [[_label(v) for v in orb] for orb in orbits.vertex_orbits],
        "representatives": [_label(v) for v in orbits.representatives],
        "edge_orbits": [[[_label(a), _label(b)] for a, b in orb] for orb in orbits.edge_orbits],
        "assumption_error": s.assumption_error,
    }
    if ctx.quotient is not None:
        report["quotient_edges"] = [
            {
                "tail": _label(e.tail),
                "head": _label(e.head),
                "gain": cycle_notation(group.elements[e.gain]),
                "graph_edge": [_label(x) for x in e.graph_edge],
            }
            for e in ctx.quotient.edges
        ]
        iso = check_orbit_isomorphism(s.framework, ctx)
        report["orbit_isomorphism"] = {
            "dims_match": iso.dims_match,
            "symmetric_kernel_dim": iso.symmetric_kernel_dim,
            "symmetric_cokernel_dim": iso.symmetric_cokernel_dim,
            "max_motion_residual": iso.max_motion_residual,
            "max_stress_residual": iso.max_stress_residual,
        }
    report["classification"] = classify(s.framework, ctx).as_dict()
    report["classification"]["caveats"] = list(report["classification"]["caveats"])
    if s.trees is not None and ctx.quotient is not None:
        coupling = ctl.build_coupling(ctx.action, ctx.rep, orbits, s.trees)
        report["edge_budget"] = ctl.edge_budget(ctx, coupling).as_dict()
    else:
        report["edge_budget"] = None
    return _plain(report)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _print_analysis(rep: dict) -> None:
    p = print
    p(f"scenario: {rep['scenario']}")
    p(f"group order: {rep['group_order']}  (free action: {rep['free_action']})")
    p(f"vertex orbits: {rep['vertex_orbits']}  representatives {rep['representatives']}")
    p(f"edge orbits: {rep['edge_orbits']}")
    for e in rep.get("quotient_edges", []):
        p(f"  quotient edge ({e['tail']},{e['head']}; {e['gain']})  from graph edge {e['graph_edge']}")
    c = rep["classification"]
    p(f"rigidity matrix: rank {c['rank']}, kernel {c['kernel_dim']}, cokernel {c['cokernel_dim']}")
    p(
        f"classification: inf_rigid={c['infinitesimally_rigid']} independent={c['independent']} "
        f"isostatic={c['isostatic']}"
    )
    if c["orbit_rank"] is not None:
        p(
            f"orbit matrix: rank {c['orbit_rank']}, kernel {c['orbit_kernel_dim']}, "
            f"cokernel {c['orbit_cokernel_dim']}, symmetric trivial motions {c['sym_trivial_dim']}"
        )
        p(
            f"symmetric: sym_inf_rigid={c['sym_inf_rigid']} sym_independent={c['sym_independent']} "
            f"sym_isostatic={c['sym_isostatic']}"
        )
        iso = rep["orbit_isomorphism"]
        p(
            f"symmetric kernel dim {iso['symmetric_kernel_dim']} (orbit kernel {c['orbit_kernel_dim']}), "
            f"lift residuals {iso['max_motion_residual']:.1e} / {iso['max_stress_residual']:.1e}"
        )
    for cav in c["caveats"]:
        p(f"caveat: {cav}")
    b = rep["edge_budget"]
    if b is not None:
        p(
            f"edge budget: {b['construction_count']} by construction, {b['distinct_edges']} distinct, "
            f"bound {b['bound']:g} -> {'within' if b['within_bound'] else 'EXCEEDS'} bound"
        )
    if rep["assumption_error"]:
        p(f"assumption: {rep['assumption_error']}")


def _needs_trees(law: str) -> bool:
    return law != "classic"


def cmd_analyze(args) -> int:
    t0 = time.perf_counter()
    sc = load_scenario(args.scenario)
    if args.controller:
        sc = sc.with_overrides(controller=args.controller)
    rep = analysis_report(sc)
    _print_analysis(rep)
    code = EXIT_OK
    if rep["assumption_error"] and _needs_trees(sc.controller):
        print(f"error: {rep['assumption_error']}", file=sys.stderr)
        code = EXIT_ASSUMPTION
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest.for_scenario("analyze", sc)
        path = out / f"{sc.name}_analysis.json"
        path.write_text(json.dumps(rep, indent=2) + "\n")
        manifest.outputs.append(str(path))
        manifest.duration_s = time.perf_counter() - t0
        manifest.exit_code = code
        manifest.write(out, sc.name)
    return code


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    sc = load_scenario(args.scenario).with_overrides(
        controller=args.controller, dt=args.dt, T=args.horizon, seed=args.seed
    )
    s = sc.setup
    if s.assumption_error and _needs_trees(sc.controller):
        raise AssumptionError(s.assumption_error)
    context = s.context
    spec = ctl.build_controller(sc.controller, s.framework, context, s.trees)
    out = Path(args.out or Path("symforma-runs") / sc.name)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.for_scenario("simulate", sc)
    (out / f"{sc.name}_scenario.json").write_text(serialize(sc) + "\n")
    manifest.outputs.append(str(out / f"{sc.name}_scenario.json"))
    try:
        traj = integrate(spec, s.p0, s.r0, s.config)
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        manifest.duration_s = time.perf_counter() - t0
        manifest.exit_code = EXIT_DIVERGENCE
        manifest.write(out, sc.name)
        return EXIT_DIVERGENCE
    if args.format in ("csv", "both"):
        path = out / f"{sc.name}_trajectory.csv"
        traj.to_csv(path)
        manifest.outputs.append(str(path))
    if args.format in ("json", "both"):
        path = out / f"{sc.name}_trajectory.json"
        traj.to_json(path)
        manifest.outputs.append(str(path))
    report = convergence_report(traj, spec)
    rdict = _plain(report.as_dict())
    rdict["diagnostic"] = traj.diagnostic
    rdict["final_centroid"] = traj.final.mean(axis=0).tolist()
    path = out / f"{sc.name}_report.json"
    path.write_text(json.dumps(rdict, indent=2) + "\n")
    manifest.outputs.append(str(path))

    print(f"scenario {sc.name}: law {sc.controller}, {len(traj) - 1} steps of dt={s.config.dt:g}")
    print(f"terminal max distance error {report.max_edge_error:.3e}")
    if report.orbit_errors.size:
        print(f"terminal max orbit symmetry error {report.max_orbit_error:.3e}")
    print(f"decay rate of V: {'n/a' if report.rate is None else f'{report.rate:.4f}'}")
    if report.centroid_error is not None:
        print(f"formation centroid {rdict['final_centroid']}, error vs mean p(0): {report.centroid_error:.3e}")
    if traj.status != "ok":
        print(f"error: {traj.diagnostic}", file=sys.stderr)
        code = EXIT_DIVERGENCE
    else:
        code = EXIT_OK if report.passed else EXIT_VERIFY
    print("PASS" if code == EXIT_OK else "FAIL")
    manifest.duration_s = time.perf_counter() - t0
    manifest.exit_code = code
    manifest.write(out, sc.name)
    return code


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    reports = run_suite(args.suite)
    summary = {
        "version": __version__,
        "suite": args.suite,
        "passed": all(r.passed for r in reports),
        "suites": [r.as_dict() for r in reports],
    }
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        for r in reports:
            print(f"== {r.suite}: {'PASS' if r.passed else 'FAIL'}")
            for c in r.checks:
                print(f"   {c.line()}")
    code = EXIT_OK if summary["passed"] else EXIT_VERIFY
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"verify_{args.suite}.json"
        path.write_text(json.dumps(summary, indent=2) + "\n")
        manifest = RunManifest.for_scenario("verify", None)
        manifest.outputs.append(str(path))
        manifest.duration_s = time.perf_counter() - t0
        manifest.exit_code = code
        manifest.write(out, f"verify_{args.suite}")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symforma", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="group, orbit, quotient and rigidity report")
    p.add_argument("scenario", help="scenario file, built-in name, or name under $SYMFORMA_SCENARIO_DIR")
    p.add_argument("--out", help="directory for the JSON report and manifest")
    p.add_argument("--controller", choices=ctl.LAWS, help="law whose prerequisites are checked")

    p = sub.add_parser("simulate", help="integrate a scenario and write trajectory files")
    p.add_argument("scenario")
    p.add_argument("--out", help="output directory (default symforma-runs/<name>)")
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float, help="final time T")
    p.add_argument("--controller", choices=ctl.LAWS)
    p.add_argument("--seed", type=int, help="seed for the initial perturbation")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")

    p = sub.add_parser("verify", help="run self-check suites")
    p.add_argument("suite", choices=SUITES + ("all",))
    p.add_argument("--out", help="directory for the JSON summary and manifest")
    p.add_argument("--json", action="store_true", help="print the summary as JSON")
    return parser


_COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except AssumptionError as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except _VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
