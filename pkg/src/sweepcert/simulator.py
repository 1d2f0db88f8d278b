"""Catching-up integration of the sweeping process and certificate checks.

The state is advanced by the implicit catching-up rule: project the
previous state onto the constraint set at the *next* time, in the stiffness
metric.  In reduced coordinates (state = basis @ v) the constraint set is
``c_minus <= G (v - w(t)) <= c_plus`` with constant rows ``G`` and an affine
offset ``w(t)``, so each step is a small strictly convex QP.  Steps reuse
the previous active set: the KKT system for a fixed active set does not
depend on time, so its inverse is cached and the common ride-along-a-face
step costs one matrix-vector product plus a feasibility check.

When a candidate terminal set is attached the run also records the
Lyapunov value (squared metric distance to the candidate set) at every
grid point, which the monitor checks against the certified decrement and
the arrival verdict evaluates at the certified time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .certificate import Certificate
from .construction import SweepingProcess, assemble_process, offset_rate
from .enumeration import FacetCandidate
from .geometry import AMetric, ConeSpec, a_norm, cone_membership, qp_project
from .network import Loading


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A simulated run on a uniform grid.

    ``states`` and ``stresses`` have one row per grid point; ``lyapunov``
    is present only when a candidate was attached to the run.
    """

    times: np.ndarray
    states: np.ndarray
    stresses: np.ndarray
    lyapunov: np.ndarray | None
    arrival_time: float | None
    arrival_index: int | None
    initial_projection_distance: float
    max_constraint_violation: float
    offset_rate_norm: float
    dt: float


def _reduced_coordinates(proc: SweepingProcess, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Coordinates of the metric projection of y onto the state space, plus the off-space distance."""
    y = np.asarray(y, dtype=float)
    v = np.linalg.solve(proc.reduced_metric, proc.stress_rows.T @ y)
    off = a_norm(proc.metric, y - proc.basis @ v)
    return v, off


def _bounds(proc: SweepingProcess, t: float) -> np.ndarray:
    gw = proc.stress_rows @ proc.reduced_offset(t)
    return np.concatenate([proc.c_plus + gw, -(proc.c_minus + gw)])


def catching_up_step(proc: SweepingProcess, y_k: np.ndarray, t_next: float, tol: float = 1e-9) -> np.ndarray:
    """One implicit step: metric projection of y_k onto the constraint set at t_next."""
    v, _ = _reduced_coordinates(proc, y_k)
    rows = np.vstack([proc.stress_rows, -proc.stress_rows])
    res = qp_project(proc.reduced_metric, v, rows, _bounds(proc, t_next), tol=tol)
    return proc.basis @ res.x


class _FacetProjector:
    """Warm-started projector onto a static candidate set in reduced coordinates."""

    def __init__(self, proc: SweepingProcess, candidate: FacetCandidate):
        self.Q = proc.reduced_metric
        pinned_springs = [si.spring for si in candidate.pinned]
        self.A_eq = proc.stress_rows[pinned_springs, :]
        self.b_eq = np.array([si.limit(proc.c_minus, proc.c_plus) for si in candidate.pinned])
        flips = list(candidate.flip_springs)
        rows = proc.stress_rows[flips, :]
        self.A_ub = np.vstack([rows, -rows]) if flips else np.zeros((0, proc.d))
        self.b_ub = (
            np.concatenate([proc.c_plus[flips], -proc.c_minus[flips]])
            if flips else np.zeros(0)
        )
        start, _ = _reduced_coordinates(proc, candidate.vertices[0])
        self._start = start
        self._active: tuple[int, ...] = ()
        self.is_point = not candidate.families
        self._vertex = start

    def squared_distance(self, x: np.ndarray) -> float:
        if self.is_point:
            diff = x - self._vertex
            return float(diff @ self.Q @ diff)
        res = qp_project(
            self.Q, x, self.A_ub, self.b_ub, self.A_eq, self.b_eq,
            start=self._start, active=self._active,
        )
        self._start, self._active = res.x, res.active
        diff = x - res.x
        return float(diff @ self.Q @ diff)


def simulate(
    proc: SweepingProcess,
    y0: np.ndarray,
    t_end: float,
    dt: float | None = None,
    candidate: FacetCandidate | None = None,
    tol_arrive: float = 1e-6,
    tol: float = 1e-9,
) -> Trajectory:
    """Integrate the sweeping process from y0 on [0, t_end].

    y0 is first projected onto the constraint set at t=0 (the projection
    distance is recorded rather than rejected).  The default step keeps the
    per-step sweep at one thousandth of the diameter bound.  With a
    candidate attached, Lyapunov samples and the arrival time against the
    candidate set are recorded.
    """
    from .certificate import compute_diameter_bound

    rate_norm = a_norm(proc.metric, offset_rate(proc))
    if dt is None:
        diameter = compute_diameter_bound(proc.net)
        dt = 1e-3 * diameter / rate_norm if rate_norm > 0 and diameter > 0 else t_end / 1000.0
    steps = max(1, int(round(t_end / dt)))
    times = np.arange(steps + 1) * dt

    d = proc.d
    Q = proc.reduced_metric
    G = proc.stress_rows
    rows = np.vstack([G, -G])
    bound_scale = max(
        1.0, float(np.abs(proc.c_plus).max(initial=0.0)), float(np.abs(proc.c_minus).max(initial=0.0))
    )
    feas_tol = 1e-9 * bound_scale

    v_bar, off = _reduced_coordinates(proc, y0)
    res0 = qp_project(Q, v_bar, rows, _bounds(proc, 0.0), tol=tol)
    v, active = res0.x, res0.active
    jump = v_bar - v
    init_dist = float(np.sqrt(off ** 2 + jump @ Q @ jump))

    reduced = np.empty((steps + 1, d))
    reduced[0] = v
    kkt_cache: dict[tuple[int, ...], np.ndarray] = {}
    max_violation = 0.0

    def fast_step(center: np.ndarray, b: np.ndarray, key: tuple[int, ...]):
        inv = kkt_cache.get(key)
        if inv is None:
            sel = list(key)
            k = len(sel)
            kkt = np.zeros((d + k, d + k))
            kkt[:d, :d] = Q
            if k:
                kkt[:d, d:] = rows[sel].T
                kkt[d:, :d] = rows[sel]
            try:
                inv = np.linalg.inv(kkt)
            except np.linalg.LinAlgError:
                return None
            kkt_cache[key] = inv
        rhs = np.concatenate([Q @ center, b[list(key)]])
        sol = inv @ rhs
        vn, mult = sol[:d], sol[d:]
        if float((rows @ vn - b).max(initial=0.0)) > feas_tol:
            return None
        if mult.size and mult.min() < -1e-9 * max(1.0, float(np.abs(mult).max())):
            return None
        return vn

    w_prev = proc.reduced_offset(0.0)
    for k in range(1, steps + 1):
        t = times[k]
        b = _bounds(proc, t)
        vn = fast_step(v, b, active)
        if vn is None:
            w_now = proc.reduced_offset(t)
            start = v + (w_now - w_prev)   # previous state rides with the set, stays feasible
            res = qp_project(Q, v, rows, b, start=start, active=active, tol=tol)
            vn, active = res.x, res.active
        v = vn
        reduced[k] = v
        w_prev = proc.reduced_offset(t)
        max_violation = max(max_violation, float((rows @ v - b).max(initial=0.0)))

    offsets = -np.outer(proc.loading.l0 + proc.loading.l1 * times, proc.drive)
    relative = reduced - offsets
    stresses = relative @ G.T
    states = reduced @ proc.basis.T

    lyapunov = None
    arrival_time = None
    arrival_index = None
    if candidate is not None:
        projector = _FacetProjector(proc, candidate)
        lyapunov = np.array([projector.squared_distance(x) for x in relative])
        below = np.flatnonzero(np.sqrt(np.maximum(lyapunov, 0.0)) <= tol_arrive)
        if below.size:
            arrival_index = int(below[0])
            arrival_time = float(times[arrival_index])

    return Trajectory(
        times=times,
        states=states,
        stresses=stresses,
        lyapunov=lyapunov,
        arrival_time=arrival_time,
        arrival_index=arrival_index,
        initial_projection_distance=init_dist,
        max_constraint_violation=max_violation,
        offset_rate_norm=rate_norm,
        dt=float(dt),
    )


@dataclass(frozen=True)
class MonitorReport:
    """Discrete Lyapunov decrement audit along one trajectory."""

    passed: bool
    n_checked: int
    violations: tuple[tuple[int, float], ...]   # (grid index, excess over slack)
    first_violation_time: float | None
    slack: float
    empirical_t1: float | None
    bound_from_value: float    # V(0) / eps
    bound_from_sqrt: float     # sqrt(V(0)) / eps
    t1_within_value_bound: bool | None
    t1_within_sqrt_bound: bool | None


def lyapunov_monitor(
    traj: Trajectory,
    eps: float,
    v_floor: float = 1e-10,
    slack: float | None = None,
) -> MonitorReport:
    """Check the certified decrement rate along a simulated run.

    While V exceeds ``v_floor`` the forward difference must satisfy
    ``(V_{k+1} - V_k)/dt <= -2 eps sqrt(V_k) + slack`` with the default
    slack ``10 dt ||c'||`` absorbing discretization error.  The report also
    records the empirical hitting time of V = 0 and compares it against
    both circulating bound forms, V(0)/eps and sqrt(V(0))/eps; the
    square-root form is the dimensionally consistent one, so both verdicts
    are reported and neither is asserted.
    """
    if traj.lyapunov is None:
        raise ValueError("trajectory carries no Lyapunov samples; simulate with a candidate attached")
    V = traj.lyapunov
    dt = traj.dt
    if slack is None:
        slack = 10.0 * dt * traj.offset_rate_norm
    violations = []
    checked = 0
    for k in range(len(V) - 1):
        if V[k] <= v_floor:
            continue
        checked += 1
        lhs = (V[k + 1] - V[k]) / dt + 2.0 * eps * np.sqrt(V[k])
        if lhs > slack:
            violations.append((k, float(lhs - slack)))
    hit = np.flatnonzero(V <= v_floor)
    t1 = float(traj.times[hit[0]]) if hit.size else None
    bound_value = float(V[0] / eps)
    bound_sqrt = float(np.sqrt(max(V[0], 0.0)) / eps)
    return MonitorReport(
        passed=not violations,
        n_checked=checked,
        violations=tuple(violations),
        first_violation_time=float(traj.times[violations[0][0]]) if violations else None,
        slack=float(slack),
        empirical_t1=t1,
        bound_from_value=bound_value,
        bound_from_sqrt=bound_sqrt,
        t1_within_value_bound=None if t1 is None else t1 <= bound_value + dt,
        t1_within_sqrt_bound=None if t1 is None else t1 <= bound_sqrt + dt,
    )


def with_loading(proc: SweepingProcess, loading: Loading) -> SweepingProcess:
    """Same network and gauge, different loading."""
    net = replace(proc.net, loading=loading)
    return assemble_process(
        net,
        free_motions=proc.free_motions,
        basis=proc.basis,
        self_stress=proc.self_stress,
    )


def reparameterization_test(
    proc: SweepingProcess,
    y0: np.ndarray,
    t_end: float,
    dt: float,
    speedup: float,
) -> bool:
    """Rate-independence: speeding the loading up compresses the run in time.

    Runs the process and a ``speedup``-times-faster copy over the
    correspondingly shorter horizon with a matched grid, and compares the
    state sequences sample by sample in the metric norm against the bound
    10 dt ||c'||.
    """
    if speedup <= 0:
        raise ValueError("speedup must be positive")
    base = simulate(proc, y0, t_end, dt)
    fast_proc = with_loading(
        proc, Loading(proc.loading.l0, proc.loading.l1 * speedup)
    )
    fast = simulate(fast_proc, y0, t_end / speedup, dt / speedup)
    n = min(len(base.times), len(fast.times))
    deviation = max(
        a_norm(proc.metric, base.states[k] - fast.states[k]) for k in range(n)
    )
    return deviation < 10.0 * dt * max(base.offset_rate_norm, 1e-300)


@dataclass(frozen=True)
class ArrivalVerdict:
    passed: bool
    time_checked: float
    distance: float
    distance_ok: bool
    stress_inside: bool
    stress_residual: float


def arrival_check(
    traj: Trajectory,
    certificate: Certificate,
    tau_d: float | None = None,
    tol_arrive: float = 1e-6,
    tol_stress: float = 1e-6,
) -> ArrivalVerdict:
    """Verify certified arrival on a simulated run.

    At the first grid point past tau_d the metric distance to the candidate
    set must be at most ``tol_arrive`` and the stress vector must lie in the
    hull of the candidate's terminal stresses (membership tested on the
    homogeneous lift).  Uses the recorded projections, not the certificate's
    own bound, so a bad certificate is falsified rather than echoed.
    """
    if traj.lyapunov is None:
        raise ValueError("trajectory carries no Lyapunov samples; simulate with the candidate attached")
    if tau_d is None:
        tau_d = certificate.tau_d
    if tau_d is None:
        raise ValueError("no certified arrival time available")
    if traj.times[-1] < tau_d - traj.dt:
        raise ValueError(f"trajectory ends at {traj.times[-1]:g}, before tau_d = {tau_d:g}")
    index = int(np.searchsorted(traj.times, tau_d - 1e-12))
    index = min(index, len(traj.times) - 1)
    distance = float(np.sqrt(max(traj.lyapunov[index], 0.0)))
    distance_ok = distance <= tol_arrive

    hull = np.stack(certificate.terminal_stresses, axis=1)
    lifted = np.vstack([hull, np.ones(hull.shape[1])])
    metric = AMetric(np.ones(lifted.shape[0]))
    target = np.append(traj.stresses[index], 1.0)
    membership = cone_membership(metric, target, ConeSpec(lifted), tol=tol_stress)

    return ArrivalVerdict(
        passed=distance_ok and membership.inside,
        time_checked=float(traj.times[index]),
        distance=distance,
        distance_ok=distance_ok,
        stress_inside=membership.inside,
        stress_residual=membership.residual,
    )
