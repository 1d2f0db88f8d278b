"""Finite-time stability certificates.

For a strict, feasible candidate the certificate packages

* ``eps0``: the metric distance from the drift to the boundary of the cone
  generated by the pinned constraint normals (the stability margin),
* ``sigma_i``: the squared metric operator norm of the map extracting the
  pinned component of a normal-cone vector at vertex i (corrects the margin
  at facet vertices),
* the box diameter bound, and
* ``tau_d``: the guaranteed arrival time
  ``sqrt(max(1, max_i sigma_i)) * diameter / eps0``
  (plain ``diameter / eps0`` when the target is a single vertex).

By ``tau_d`` every stress trajectory has reached the candidate set,
regardless of the initial state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import ordered_map
from .construction import SweepingProcess, offset_rate
from .enumeration import FacetCandidate, SignedIndex
from .errors import (
    EigenFailure,
    InfeasibleCandidate,
    NotInSpan,
    NotStrictlyInside,
    ReducibleOrBoundary,
    SingularVertexSystem,
)
from .geometry import ConeSpec, distance_to_cone_boundary
from .network import NetworkSpec

# Resolution of the two printed margin-correction rules: the effective
# margin divides eps0 by the largest component-map gain, consistent with
# the facet arrival-time bound.  Recorded in every certificate.
EPSILON_RULE = "eps = eps0 / max_i sqrt(max(1, sigma_i))"


def _pinned_cone(proc: SweepingProcess, pinned: tuple[SignedIndex, ...]) -> ConeSpec:
    springs = [si.spring for si in pinned]
    signs = np.array([si.sign for si in pinned], dtype=float)
    return ConeSpec(
        proc.normals[:, springs] * signs,
        provenance=tuple((si.sign, si.spring) for si in pinned),
    )


def compute_margin(proc: SweepingProcess, pinned: tuple[SignedIndex, ...]) -> float:
    """Stability margin eps0 > 0 for a strict pinned set.

    Distance (in the stiffness metric) from the negated offset rate to the
    relative boundary of the cone of signed pinned normals.  Scales
    linearly with the loading rate.  Raises ReducibleOrBoundary when the
    drift sits on the cone boundary, i.e. the pinned set is reducible and
    the margin is zero.
    """
    drift = -offset_rate(proc)
    try:
        return distance_to_cone_boundary(proc.metric, drift, _pinned_cone(proc, pinned))
    except (NotStrictlyInside, NotInSpan) as exc:
        raise ReducibleOrBoundary(
            f"zero margin for pinned set {[si.label() for si in pinned]}: {exc}"
        ) from exc


def compute_component_map(
    proc: SweepingProcess,
    pinned: tuple[SignedIndex, ...],
    family: tuple[SignedIndex, ...],
) -> np.ndarray:
    """The m x m map extracting the pinned component at one vertex.

    On the span of the vertex normals it returns the unique pinned-normal
    part of the decomposition; pinned normals are fixed points, family
    normals are annihilated.
    """
    indices = tuple(pinned) + tuple(family)
    if len(indices) != proc.d:
        raise SingularVertexSystem("component map needs a full vertex index family")
    springs = [si.spring for si in indices]
    frame_cols = proc.frame[:, springs]
    try:
        inverse = np.linalg.inv(frame_cols)
    except np.linalg.LinAlgError:
        raise SingularVertexSystem(f"singular vertex frame for springs {springs}")
    top = inverse[: len(pinned), :]
    pinned_normals = proc.normals[:, [si.spring for si in pinned]]
    return pinned_normals @ top @ proc.frame


def compute_gain(proc: SweepingProcess, component_map: np.ndarray) -> tuple[float, float]:
    """(sigma, sqrt(sigma)): largest eigenvalue of the whitened map's Gram matrix."""
    sq = np.sqrt(proc.a)
    whitened = (sq[:, None] * component_map) / sq[None, :]
    gram = whitened.T @ whitened
    try:
        eigenvalues = np.linalg.eigvalsh(gram)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"gain eigencomputation failed: {exc}") from exc
    sigma = float(max(eigenvalues[-1], 0.0))
    return sigma, float(np.sqrt(sigma))


def compute_diameter_bound(net: NetworkSpec) -> float:
    """Upper bound on the metric diameter of the stress-feasible set.

    No two admissible states are farther apart than sqrt(sum((c+ - c-)^2 / a)).
    """
    return float(np.sqrt(np.sum((net.c_plus - net.c_minus) ** 2 / net.a)))


@dataclass(frozen=True, eq=False)
class Certificate:
    """Machine-checkable finite-time convergence certificate for one candidate."""

    candidate: FacetCandidate
    kind: str                         # "vertex", "facet", or "qualitative"
    eps0: float | None
    sigmas: tuple[float, ...]
    sigma_effective: float | None     # max(1, max sigmas) for facet kind, 1 for vertex
    diameter_bound: float
    tau_d: float | None
    terminal_stresses: tuple[np.ndarray, ...]
    epsilon_rule: str = EPSILON_RULE
    periodic_note: str | None = None

    @property
    def epsilon_effective(self) -> float | None:
        if self.eps0 is None or self.sigma_effective is None:
            return None
        return self.eps0 / np.sqrt(self.sigma_effective)


def assemble_certificate(
    proc: SweepingProcess,
    candidate: FacetCandidate,
    qualitative: bool = False,
) -> Certificate:
    """Certify a feasible, strict candidate.

    Vertex candidates get tau_d = diameter / eps0 and a single terminal
    stress vector; facet candidates get the gain-corrected bound and the
    hull of the vertex stresses.  With ``qualitative=True`` only the
    qualitative conclusion is packaged (the candidate attracts all
    trajectories in finite time, no bound computed).
    """
    if not candidate.feasibility.feasible:
        violated = ", ".join(c.describe() for c in candidate.feasibility.violations())
        raise InfeasibleCandidate(
            f"scenario {candidate.scenario} infeasible: {violated or 'marginal inequalities'}"
        )
    if not candidate.strict:
        raise ReducibleOrBoundary(
            f"scenario {candidate.scenario}: drift not strictly inside the pinned cone"
        )

    terminal = tuple(proc.a * y for y in candidate.vertices)
    diameter = compute_diameter_bound(proc.net)

    if qualitative:
        return Certificate(
            candidate=candidate, kind="qualitative", eps0=None, sigmas=(),
            sigma_effective=None, diameter_bound=diameter, tau_d=None,
            terminal_stresses=terminal,
        )

    eps0 = compute_margin(proc, candidate.pinned)
    if candidate.kind == "vertex":
        sigmas: tuple[float, ...] = ()
        sigma_eff = 1.0
        tau_d = diameter / eps0
    else:
        maps = ordered_map(
            lambda family: compute_component_map(proc, candidate.pinned, family),
            candidate.families,
        )
        sigmas = tuple(compute_gain(proc, L)[0] for L in maps)
        sigma_eff = max(1.0, max(sigmas))
        tau_d = float(np.sqrt(sigma_eff)) * diameter / eps0

    note = None
    period = proc.net.period
    if candidate.kind == "vertex" and period is not None and period >= tau_d:
        note = (
            f"loading period T={period:g} >= tau_d={tau_d:.12g}: after tau_d the response "
            "locks onto a globally one-period stable T-periodic solution"
        )

    return Certificate(
        candidate=candidate,
        kind=candidate.kind,
        eps0=eps0,
        sigmas=sigmas,
        sigma_effective=sigma_eff,
        diameter_bound=diameter,
        tau_d=tau_d,
        terminal_stresses=terminal,
        periodic_note=note,
    )
