"""Pipeline orchestration and deterministic report rendering.

``run_pipeline`` chains validation, construction, scenario enumeration,
certification, and (optionally) simulation, and collects everything into an
AnalysisReport.  Rendering is deterministic: fixed float precision, sorted
keys, stable orderings, so repeated runs produce byte-identical artifacts.

Spring indices in all rendered artifacts are 1-based (matching how a
network drawing is labelled); the Python API is 0-based throughout.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map
from .certificate import Certificate, assemble_certificate, compute_diameter_bound
from .construction import SweepingProcess, build_process, moving_offset
from .enumeration import FacetCandidate, enumerate_scenarios
from .errors import InfeasibleCandidate, ReducibleOrBoundary
from .network import NetworkSpec, ValidatedNetwork, to_document, validate_network
from .simulator import (
    ArrivalVerdict,
    MonitorReport,
    Trajectory,
    arrival_check,
    lyapunov_monitor,
    simulate,
)

FLOAT_FORMAT = ".12g"


def _fmt(x) -> str:
    return format(float(x), FLOAT_FORMAT)


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs of the full analysis; mirrors the CLI flags."""

    tol_feas: float = 1e-9
    tol_arrive: float = 1e-6
    dt: float | None = None
    simulate: bool = False
    scenario_filter: int | None = None
    direction: float | None = None
    qualitative: bool = False


@dataclass(frozen=True, eq=False)
class ScenarioOutcome:
    candidate: FacetCandidate
    certificate: Certificate | None
    error: str | None


@dataclass(frozen=True, eq=False)
class SimulationOutcome:
    scenario: int
    trajectory: Trajectory
    verdict: ArrivalVerdict
    monitor: MonitorReport


@dataclass(frozen=True, eq=False)
class AnalysisReport:
    network: ValidatedNetwork
    process: SweepingProcess
    scenarios: tuple[ScenarioOutcome, ...]
    simulations: tuple[SimulationOutcome, ...]
    config: PipelineConfig
    exit_code: int = field(default=2)

    def certificates(self) -> tuple[Certificate, ...]:
        return tuple(s.certificate for s in self.scenarios if s.certificate is not None)


def run_pipeline(spec: NetworkSpec, config: PipelineConfig = PipelineConfig()) -> AnalysisReport:
    """Full analysis of one network; deterministic for a fixed config.

    Exit code semantics (surfaced by the CLI): 0 when at least one scenario
    carries a quantitative certificate, 2 otherwise; validation failures
    raise before a report exists and map to exit code 1.
    """
    net = validate_network(spec)
    proc = build_process(net)
    candidates = enumerate_scenarios(
        proc, direction=config.direction, tol_feas=config.tol_feas
    )

    def certify(candidate: FacetCandidate) -> ScenarioOutcome:
        if config.scenario_filter is not None and candidate.scenario != config.scenario_filter:
            return ScenarioOutcome(candidate, None, "skipped by scenario filter")
        try:
            cert = assemble_certificate(proc, candidate, qualitative=config.qualitative)
            return ScenarioOutcome(candidate, cert, None)
        except (InfeasibleCandidate, ReducibleOrBoundary) as exc:
            return ScenarioOutcome(candidate, None, f"{type(exc).__name__}: {exc}")

    scenarios = tuple(ordered_map(certify, candidates))

    simulations = []
    if config.simulate:
        for outcome in scenarios:
            cert = outcome.certificate
            if cert is None or cert.tau_d is None:
                continue
            dt = config.dt
            horizon = cert.tau_d * 1.02 + (dt or 0.0) * 10
            y0 = moving_offset(proc, 0.0)   # the relaxed zero-stress state
            traj = simulate(
                proc, y0, horizon, dt=dt, candidate=cert.candidate,
                tol_arrive=config.tol_arrive,
            )
            verdict = arrival_check(traj, cert, tol_arrive=config.tol_arrive)
            monitor = lyapunov_monitor(traj, cert.epsilon_effective)
            simulations.append(SimulationOutcome(cert.candidate.scenario, traj, verdict, monitor))

    full = [s for s in scenarios if s.certificate is not None and s.certificate.tau_d is not None]
    exit_code = 0 if full else 2
    return AnalysisReport(
        network=net,
        process=proc,
        scenarios=scenarios,
        simulations=tuple(simulations),
        config=config,
        exit_code=exit_code,
    )


# --- JSON rendering -----------------------------------------------------------

def _signed(si) -> str:
    return si.label()


def _matrix(M: np.ndarray) -> list:
    return [[float(x) for x in row] for row in np.atleast_2d(M)]


def process_document(proc: SweepingProcess) -> dict:
    """Inspection document for the constructed process (matrices row-major)."""
    return {
        "m": proc.m,
        "n": proc.n,
        "d": proc.d,
        "state_basis": _matrix(proc.basis),
        "self_stress": _matrix(proc.self_stress),
        "free_motions": _matrix(proc.free_motions),
        "frame": _matrix(proc.frame),
        "coupling": _matrix(proc.coupling),
        "coupling_condition": float(np.linalg.cond(proc.coupling)),
        "drive": [float(x) for x in proc.drive],
        "normals": _matrix(proc.normals),
        "drift": [float(x) for x in proc.drift],
    }


def _feasibility_document(report) -> dict:
    return {
        "feasible": report.feasible,
        "marginal": report.marginal,
        "checks": [
            {
                "kind": c.kind,
                "spring": c.spring + 1,
                "vertex": c.vertex,
                "value": c.value,
                "lower": c.lower,
                "upper": c.upper,
                "margin": c.margin,
                "status": c.status,
            }
            for c in report.checks
        ],
    }


def scenario_document(outcome: ScenarioOutcome, a: np.ndarray) -> dict:
    cand = outcome.candidate
    doc = {
        "scenario": cand.scenario,
        "kind": cand.kind,
        "pinned": [_signed(si) for si in cand.pinned],
        "families": [[_signed(si) for si in fam] for fam in cand.families],
        "flip_springs": [j + 1 for j in cand.flip_springs],
        "strict": cand.strict,
        "irreducible": cand.irreducible,
        "terminal_stresses": [[float(x) for x in a * y] for y in cand.vertices],
        "feasibility": _feasibility_document(cand.feasibility),
    }
    cert = outcome.certificate
    if cert is not None:
        doc["certificate"] = {
            "kind": cert.kind,
            "eps0": cert.eps0,
            "sigmas": list(cert.sigmas),
            "sigma_effective": cert.sigma_effective,
            "epsilon_effective": cert.epsilon_effective,
            "diameter_bound": cert.diameter_bound,
            "tau_d": cert.tau_d,
            "epsilon_rule": cert.epsilon_rule,
            "periodic_note": cert.periodic_note,
        }
    if outcome.error is not None:
        doc["error"] = outcome.error
    return doc


def report_document(report: AnalysisReport) -> dict:
    doc = {
        "network": to_document(report.network),
        "process": {
            "d": report.process.d,
            "coupling_condition": float(np.linalg.cond(report.process.coupling)),
            "diameter_bound": compute_diameter_bound(report.network),
        },
        "scenarios": [
            scenario_document(s, report.network.a) for s in report.scenarios
        ],
        "simulations": [
            {
                "scenario": sim.scenario,
                "arrival_time": sim.trajectory.arrival_time,
                "tau_d_checked_at": sim.verdict.time_checked,
                "distance_at_tau_d": sim.verdict.distance,
                "stress_in_hull": sim.verdict.stress_inside,
                "passed": sim.verdict.passed,
                "decrement_violations": len(sim.monitor.violations),
                "decrement_slack": sim.monitor.slack,
                "max_constraint_violation": sim.trajectory.max_constraint_violation,
            }
            for sim in report.simulations
        ],
        "exit_code": report.exit_code,
    }
    return doc


def to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# --- markdown rendering --------------------------------------------------------

def render_markdown(report: AnalysisReport) -> str:
    out = io.StringIO()
    net, proc = report.network, report.process
    w = out.write
    w("# Finite-time stability report\n\n")
    w(f"Network: {net.m} springs on {net.n} nodes, state dimension d = {proc.d}.\n")
    w(f"Loading: l(t) = {_fmt(net.loading.l0)} + {_fmt(net.loading.l1)} t.\n")
    w(f"Coupling condition number: {_fmt(np.linalg.cond(proc.coupling))}.\n")
    w(f"Diameter bound: {_fmt(compute_diameter_bound(net))}.\n\n")

    w("## Scenarios\n\n")
    w("| scenario | pinned set | flip families |\n|---|---|---|\n")
    for s in report.scenarios:
        cand = s.candidate
        fams = "; ".join("{" + ",".join(_signed(si) for si in fam) + "}" for fam in cand.families)
        w(f"| {cand.scenario} | {cand.label()} | {fams or '(vertex)'} |\n")
    w("\n")

    w("## Terminal stresses and feasibility\n\n")
    for s in report.scenarios:
        cand = s.candidate
        w(f"### Scenario {cand.scenario} ({cand.kind})\n\n")
        for i, y in enumerate(cand.vertices):
            stresses = ", ".join(_fmt(x) for x in net.a * y)
            w(f"- terminal stress vertex {i}: ({stresses})\n")
        verdict = "feasible" if cand.feasibility.feasible else (
            "marginal" if cand.feasibility.marginal and not cand.feasibility.violations() else "infeasible"
        )
        w(f"- feasibility: **{verdict}**\n")
        for c in cand.feasibility.checks:
            if c.status != "ok":
                w(f"  - {c.describe()}\n")
        w("\n")

    w("## Stability margins\n\n")
    w("| scenario | margin eps0 |\n|---|---|\n")
    for s in report.scenarios:
        val = _fmt(s.certificate.eps0) if s.certificate and s.certificate.eps0 is not None else "-"
        w(f"| {s.candidate.scenario} | {val} |\n")
    w("\n## Vertex gains\n\n")
    w("| scenario | sigma per family |\n|---|---|\n")
    for s in report.scenarios:
        if s.certificate and s.certificate.sigmas:
            sig = ", ".join(_fmt(x) for x in s.certificate.sigmas)
        else:
            sig = "-"
        w(f"| {s.candidate.scenario} | {sig} |\n")

    w("\n## Certificates\n\n")
    w("| scenario | kind | eps0 | sigma_eff | diameter | tau_d |\n|---|---|---|---|---|---|\n")
    for s in report.scenarios:
        cert = s.certificate
        if cert is None:
            w(f"| {s.candidate.scenario} | - | - | - | - | {s.error or '-'} |\n")
        else:
            w(
                f"| {s.candidate.scenario} | {cert.kind} | "
                f"{_fmt(cert.eps0) if cert.eps0 is not None else '-'} | "
                f"{_fmt(cert.sigma_effective) if cert.sigma_effective is not None else '-'} | "
                f"{_fmt(cert.diameter_bound)} | "
                f"{_fmt(cert.tau_d) if cert.tau_d is not None else '-'} |\n"
            )

    if report.simulations:
        w("\n## Simulation\n\n")
        w("| scenario | arrival time | distance at tau_d | stress in hull | decrement violations | verdict |\n")
        w("|---|---|---|---|---|---|\n")
        for sim in report.simulations:
            arr = _fmt(sim.trajectory.arrival_time) if sim.trajectory.arrival_time is not None else "-"
            w(
                f"| {sim.scenario} | {arr} | {_fmt(sim.verdict.distance)} | "
                f"{sim.verdict.stress_inside} | {len(sim.monitor.violations)} | "
                f"{'pass' if sim.verdict.passed else 'FAIL'} |\n"
            )
    return out.getvalue()


def trajectory_csv(traj: Trajectory) -> str:
    """CSV with columns t, y_1..y_m, s_1..s_m, V."""
    m = traj.states.shape[1]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["t"] + [f"y{j + 1}" for j in range(m)] + [f"s{j + 1}" for j in range(m)] + ["V"]
    writer.writerow(header)
    for k in range(len(traj.times)):
        lyap = traj.lyapunov[k] if traj.lyapunov is not None else ""
        row = [_fmt(traj.times[k])]
        row += [_fmt(x) for x in traj.states[k]]
        row += [_fmt(x) for x in traj.stresses[k]]
        row.append(_fmt(lyap) if lyap != "" else "")
        writer.writerow(row)
    return buf.getvalue()
