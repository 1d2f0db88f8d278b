"""Command-line interface.

Subcommands mirror the pipeline stages:

* ``validate``  - check an input document and report the ranks found
* ``construct`` - emit the derived sweeping-process geometry as JSON
* ``enumerate`` - emit the scenario table (JSON and markdown)
* ``certify``   - emit certificates for the feasible strict scenarios
* ``simulate``  - run the catching-up scheme for one certified scenario
* ``report``    - the full pipeline; exit code 0 when at least one
  quantitative certificate exists, 2 when none, 1 on validation errors

Every command reads one JSON network document (schema shipped at
``schemas/network.schema.json``) and prints its primary JSON artifact to
stdout; ``--out DIR`` additionally writes files.  SWEEPCERT_THREADS caps
candidate-evaluation parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema

from . import report as report_mod
from .construction import build_process, moving_offset
from .errors import SweepcertError
from .network import from_document, validate_network
from .report import (
    AnalysisReport,
    PipelineConfig,
    process_document,
    render_markdown,
    report_document,
    scenario_document,
    to_json,
    trajectory_csv,
)
from .simulator import arrival_check, lyapunov_monitor, simulate


def _load_schema() -> dict:
    with resources.files("sweepcert").joinpath("schemas/network.schema.json").open("rb") as fh:
        return json.load(fh)


def load_network(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    jsonschema.validate(doc, _load_schema())
    return from_document(doc)


def _emit(doc: dict, out_dir: str | None, filename: str) -> None:
    text = to_json(doc)
    sys.stdout.write(text)
    if out_dir:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / filename).write_text(text, encoding="utf-8")


def _direction(arg: str | None) -> float | None:
    if arg is None:
        return None
    return 1.0 if arg == "+" else -1.0


def cmd_validate(args) -> int:
    net = validate_network(load_network(args.input))
    _emit(
        {
            "valid": True,
            "m": net.m,
            "n": net.n,
            "rank_D": net.rank_D,
            "rank_DTR": net.rank_DTR,
            "rank_tolerance": net.rank_tol,
        },
        args.out, "validate.json",
    )
    return 0


def cmd_construct(args) -> int:
    net = validate_network(load_network(args.input))
    proc = build_process(net)
    _emit(process_document(proc), args.out, "process.json")
    return 0


def _pipeline(args, simulate_flag: bool) -> AnalysisReport:
    net = load_network(args.input)
    config = PipelineConfig(
        tol_feas=args.tol_feas,
        tol_arrive=args.tol_arrive,
        dt=args.dt,
        simulate=simulate_flag,
        scenario_filter=args.scenario,
        direction=_direction(args.direction),
    )
    return report_mod.run_pipeline(net, config)


def cmd_enumerate(args) -> int:
    rep = _pipeline(args, simulate_flag=False)
    doc = {
        "scenarios": [scenario_document(s, rep.network.a) for s in rep.scenarios],
    }
    _emit(doc, args.out, "scenarios.json")
    if args.out:
        Path(args.out, "scenarios.md").write_text(render_markdown(rep), encoding="utf-8")
    return 0


def cmd_certify(args) -> int:
    rep = _pipeline(args, simulate_flag=False)
    doc = {
        "certificates": [
            scenario_document(s, rep.network.a)
            for s in rep.scenarios
            if s.certificate is not None or s.error
        ],
    }
    _emit(doc, args.out, "certificates.json")
    if args.out:
        Path(args.out, "certificates.md").write_text(render_markdown(rep), encoding="utf-8")
    return rep.exit_code


def cmd_simulate(args) -> int:
    net = validate_network(load_network(args.input))
    proc = build_process(net)
    from .certificate import assemble_certificate
    from .enumeration import enumerate_scenarios

    candidates = enumerate_scenarios(
        proc, direction=_direction(args.direction), tol_feas=args.tol_feas
    )
    chosen = None
    cert = None
    for cand in candidates:
        if args.scenario is not None and cand.scenario != args.scenario:
            continue
        if not (cand.feasibility.feasible and cand.strict):
            continue
        cert = assemble_certificate(proc, cand)
        chosen = cand
        break
    if chosen is None:
        sys.stderr.write("no certifiable scenario matches the selection\n")
        return 2

    t_end = args.t_end if args.t_end is not None else cert.tau_d * 1.02 + 10 * (args.dt or 0.0)
    y0 = moving_offset(proc, 0.0)
    traj = simulate(proc, y0, t_end, dt=args.dt, candidate=chosen, tol_arrive=args.tol_arrive)
    verdict = arrival_check(traj, cert, tol_arrive=args.tol_arrive)
    monitor = lyapunov_monitor(traj, cert.epsilon_effective)
    summary = {
        "scenario": chosen.scenario,
        "tau_d": cert.tau_d,
        "arrival_time": traj.arrival_time,
        "distance_at_tau_d": verdict.distance,
        "stress_in_hull": verdict.stress_inside,
        "passed": verdict.passed,
        "decrement_violations": len(monitor.violations),
        "dt": traj.dt,
        "initial_projection_distance": traj.initial_projection_distance,
    }
    _emit(summary, args.out, f"scenario_{chosen.scenario}_summary.json")
    if args.out:
        Path(args.out, f"scenario_{chosen.scenario}_trajectory.csv").write_text(
            trajectory_csv(traj), encoding="utf-8"
        )
    return 0 if verdict.passed else 2


def cmd_report(args) -> int:
    rep = _pipeline(args, simulate_flag=args.simulate)
    _emit(report_document(rep), args.out, "report.json")
    if args.out:
        Path(args.out, "report.md").write_text(render_markdown(rep), encoding="utf-8")
        for sim in rep.simulations:
            Path(args.out, f"scenario_{sim.scenario}_trajectory.csv").write_text(
                trajectory_csv(sim.trajectory), encoding="utf-8"
            )
    return rep.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sweepcert",
        description="Finite-time stability certificates for elastoplastic spring networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tolerances=True):
        p.add_argument("--input", required=True, help="network JSON document")
        p.add_argument("--out", default=None, help="directory for rendered artifacts")
        if tolerances:
            p.add_argument("--tol-feas", type=float, default=1e-9, dest="tol_feas")
            p.add_argument("--tol-arrive", type=float, default=1e-6, dest="tol_arrive")
            p.add_argument("--dt", type=float, default=None)
            p.add_argument("--scenario", type=int, default=None, help="restrict to one scenario number")
            p.add_argument("--direction", choices=["+", "-"], default=None,
                           help="override the loading direction sign")

    common(sub.add_parser("validate", help="validate an input document"), tolerances=False)
    common(sub.add_parser("construct", help="emit the derived process geometry"), tolerances=False)
    common(sub.add_parser("enumerate", help="emit the scenario table"))
    common(sub.add_parser("certify", help="emit certificates"))
    sim = sub.add_parser("simulate", help="simulate one certified scenario")
    common(sim)
    sim.add_argument("--t-end", type=float, default=None, dest="t_end")
    rep = sub.add_parser("report", help="full pipeline")
    common(rep)
    rep.add_argument("--simulate", action="store_true", help="cross-validate certificates by simulation")
    return parser


HANDLERS = {
    "validate": cmd_validate,
    "construct": cmd_construct,
    "enumerate": cmd_enumerate,
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except (SweepcertError, jsonschema.ValidationError, ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
