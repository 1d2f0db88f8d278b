"""Candidate terminal facets: pinned sets, flip families, vertices, feasibility.

A *pinned set* is a family of signed spring indices whose constraint
normals conically cover the drift direction; those springs are driven to
sustained plastic flow at the signed stress limit.  When a pinned set has
fewer than d members it is completed by *flip families*: a minimal set of
additional springs, each taken at either limit, so that together they pin a
vertex.  The candidate terminal set is the polytope spanned by the
resulting vertices; feasibility holds when every non-participating spring
stays strictly inside its elastic range at all of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from ._parallel import ordered_map
from .construction import SweepingProcess
from .errors import DependentGenerators, NotInSpan, SingularVertexSystem
from .geometry import ConeSpec, cone_decompose_strict, cone_membership, euclidean

FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True, order=True)
class SignedIndex:
    """A spring index with the limit it is taken at (+1 upper, -1 lower)."""

    spring: int
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be -1 or +1")
        if self.spring < 0:
            raise ValueError("spring index must be nonnegative")

    def limit(self, c_minus: np.ndarray, c_plus: np.ndarray) -> float:
        return float(c_plus[self.spring] if self.sign > 0 else c_minus[self.spring])

    def label(self) -> str:
        return f"({'+' if self.sign > 0 else '-'},{self.spring + 1})"


def _springs(indices) -> tuple[int, ...]:
    return tuple(si.spring for si in indices)


@dataclass(frozen=True)
class PinnedSet:
    """An irreducible signed index family aligned with the loading drift."""

    indices: tuple[SignedIndex, ...]
    coeffs: np.ndarray
    strict: bool
    irreducible: bool = True


@dataclass(frozen=True)
class FeasibilityCheck:
    kind: str              # "stress_bound" or "limit_order"
    spring: int
    vertex: int | None
    value: float
    lower: float
    upper: float
    margin: float
    status: str            # "ok", "marginal", "violated"

    def describe(self) -> str:
        where = f"vertex {self.vertex}" if self.vertex is not None else "limits"
        if self.kind == "limit_order":
            return (f"spring {self.spring + 1} flip range c-[{self.lower}] < c+[{self.upper}]: "
                    f"{self.status}")
        return (f"spring {self.spring + 1} at {where}: "
                f"{self.lower} < {self.value:.12g} < {self.upper}: {self.status}")


@dataclass(frozen=True)
class FeasibilityReport:
    checks: tuple[FeasibilityCheck, ...]
    feasible: bool
    marginal: bool

    def violations(self) -> tuple[FeasibilityCheck, ...]:
        return tuple(c for c in self.checks if c.status == "violated")


@dataclass(frozen=True, eq=False)
class FacetCandidate:
    """One enumerated scenario: a pinned set with one flip-family construction."""

    scenario: int
    pinned: tuple[SignedIndex, ...]
    flip_springs: tuple[int, ...]
    families: tuple[tuple[SignedIndex, ...], ...]
    vertices: tuple[np.ndarray, ...]
    feasibility: FeasibilityReport
    strict: bool
    irreducible: bool

    def __post_init__(self):
        pinned_springs = set(_springs(self.pinned))
        sizes = {len(family) for family in self.families}
        if len(sizes) > 1:
            raise ValueError("all flip families must have the same size")
        for family in self.families:
            if pinned_springs & set(_springs(family)):
                raise ValueError("flip families must not reuse pinned springs")
        if len(set(self.families)) != len(self.families):
            raise ValueError("flip families must be pairwise distinct")

    @property
    def kind(self) -> str:
        return "vertex" if not self.families else "facet"

    @property
    def n_families(self) -> int:
        return len(self.families)

    def label(self) -> str:
        return "{" + ",".join(si.label() for si in self.pinned) + "}"


def enumerate_pinned(
    proc: SweepingProcess,
    direction: float | None = None,
    tol: float = 1e-9,
) -> list[PinnedSet]:
    """All irreducible signed index families covering the drift direction.

    Searches every signed subset of size 1..d (never both signs of one
    spring), keeps the families whose frame columns conically contain the
    loading target, and discards any family with a smaller working subset.
    Output order is lexicographic in (size, springs, signs) and independent
    of the loading magnitude.
    """
    rate = proc.loading.l1 if direction is None else float(direction)
    if rate == 0:
        raise ValueError("loading rate is zero; no drift direction to align with")
    d, m = proc.d, proc.m
    target = np.zeros(d)
    target[0] = np.sign(rate)   # membership is invariant under positive scaling

    metric = euclidean(d)
    members: list[tuple[frozenset[SignedIndex], tuple[SignedIndex, ...]]] = []
    for size in range(1, d + 1):
        for springs in combinations(range(m), size):
            for signs in product((-1, 1), repeat=size):
                indices = tuple(SignedIndex(j, s) for j, s in zip(springs, signs))
                gens = proc.frame[:, list(springs)] * np.asarray(signs, dtype=float)
                membership = cone_membership(metric, target, ConeSpec(gens), tol=tol)
                if membership.inside:
                    members.append((frozenset(indices), indices))

    result = []
    member_sets = [s for s, _ in members]
    for current, indices in members:
        if any(other < current for other in member_sets):
            continue
        gens = proc.frame[:, list(_springs(indices))] * np.array(
            [si.sign for si in indices], dtype=float
        )
        try:
            decomposition = cone_decompose_strict(metric, target, ConeSpec(gens), tol=tol)
            strict, coeffs = decomposition.strict, decomposition.coeffs
        except (NotInSpan, DependentGenerators):
            strict, coeffs = False, np.zeros(len(indices))
        result.append(PinnedSet(indices=indices, coeffs=coeffs, strict=strict))
    return result


def enumerate_flip_families(
    proc: SweepingProcess, pinned: tuple[SignedIndex, ...]
) -> list[tuple[tuple[SignedIndex, ...], ...]]:
    """All sign-flip family constructions completing a pinned set to vertices.

    Returns one entry per admissible flip-spring subset (those making the
    combined frame columns full rank); each entry is the complete family
    list over all 2^(d-|pinned|) sign assignments, all-lower first.
    Empty when |pinned| = d, where the pinned set alone fixes a vertex.
    """
    d = proc.d
    k = len(pinned)
    if k >= d:
        return []
    used = set(_springs(pinned))
    free = [j for j in range(proc.m) if j not in used]
    base_cols = list(_springs(pinned))
    out = []
    for subset in combinations(free, d - k):
        cols = proc.frame[:, base_cols + list(subset)]
        if np.linalg.matrix_rank(cols) != d:
            continue
        families = tuple(
            tuple(SignedIndex(j, s) for j, s in zip(subset, signs))
            for signs in product((-1, 1), repeat=d - k)
        )
        out.append(families)
    return out


def compute_vertex(
    proc: SweepingProcess,
    pinned: tuple[SignedIndex, ...],
    family: tuple[SignedIndex, ...] = (),
    tol: float = 1e-9,
) -> np.ndarray:
    """State vector pinned by the equalities of ``pinned`` + ``family``.

    Solves the d x d system <e_j, A y> = c_j^sign over the state basis and
    verifies the solution reproduces every requested limit.
    """
    indices = tuple(pinned) + tuple(family)
    if len(indices) != proc.d:
        raise SingularVertexSystem(
            f"vertex needs exactly d={proc.d} constraints, got {len(indices)}"
        )
    springs = list(_springs(indices))
    system = proc.stress_rows[springs, :]
    rhs = np.array([si.limit(proc.c_minus, proc.c_plus) for si in indices])
    try:
        coords = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        raise SingularVertexSystem(f"singular vertex system for springs {springs}")
    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularVertexSystem(f"ill-conditioned vertex system for springs {springs}")
    residual = float(np.abs(system @ coords - rhs).max())
    if residual > tol * max(1.0, float(np.abs(rhs).max())):
        raise SingularVertexSystem(f"vertex system residual {residual:.3e} exceeds tolerance")
    return proc.basis @ coords


def feasibility_check(
    proc: SweepingProcess,
    pinned: tuple[SignedIndex, ...],
    families: tuple[tuple[SignedIndex, ...], ...],
    vertices: tuple[np.ndarray, ...],
    tol_feas: float = FEASIBILITY_TOL,
) -> FeasibilityReport:
    """Strict-interior check of every non-participating spring at every vertex.

    Per-inequality tolerance is ``tol_feas * (c_plus - c_minus)``; a margin
    inside that band is reported as marginal rather than feasible, and flip
    springs additionally need strictly ordered limits so the vertices stay
    distinct.
    """
    participating = set(_springs(pinned))
    flip_springs = sorted({si.spring for family in families for si in family})
    participating.update(flip_springs)
    checks = []

    for j in flip_springs:
        span = float(proc.c_plus[j] - proc.c_minus[j])
        status = "ok" if span > tol_feas * max(abs(proc.c_plus[j]), abs(proc.c_minus[j]), 1.0) else "marginal"
        checks.append(FeasibilityCheck(
            kind="limit_order", spring=j, vertex=None,
            value=span, lower=float(proc.c_minus[j]), upper=float(proc.c_plus[j]),
            margin=span, status=status,
        ))

    outside = [j for j in range(proc.m) if j not in participating]
    for vertex_index, y in enumerate(vertices):
        stresses = proc.a * y
        for j in outside:
            value = float(stresses[j])
            lower, upper = float(proc.c_minus[j]), float(proc.c_plus[j])
            margin = min(value - lower, upper - value)
            band = tol_feas * (upper - lower)
            if margin > band:
                status = "ok"
            elif margin >= -band:
                status = "marginal"
            else:
                status = "violated"
            checks.append(FeasibilityCheck(
                kind="stress_bound", spring=j, vertex=vertex_index,
                value=value, lower=lower, upper=upper, margin=margin, status=status,
            ))

    checks = tuple(checks)
    feasible = all(c.status == "ok" for c in checks)
    marginal = any(c.status == "marginal" for c in checks)
    return FeasibilityReport(checks=checks, feasible=feasible, marginal=marginal)


def enumerate_scenarios(
    proc: SweepingProcess,
    direction: float | None = None,
    tol_feas: float = FEASIBILITY_TOL,
    tol: float = 1e-9,
) -> tuple[FacetCandidate, ...]:
    """Full deterministic scenario list: pinned sets crossed with flip subsets.

    Scenario numbers are 1-based in enumeration order.  Candidate
    evaluation may fan out over threads (SWEEPCERT_THREADS); the resulting
    list is identical either way.
    """
    jobs = []
    for pinned_set in enumerate_pinned(proc, direction=direction, tol=tol):
        if len(pinned_set.indices) == proc.d:
            jobs.append((pinned_set, ()))
        else:
            for families in enumerate_flip_families(proc, pinned_set.indices):
                jobs.append((pinned_set, families))

    def evaluate(job):
        pinned_set, families = job
        if families:
            vertices = tuple(
                compute_vertex(proc, pinned_set.indices, family, tol=tol)
                for family in families
            )
            flips = tuple(sorted({si.spring for fam in families for si in fam}))
        else:
            vertices = (compute_vertex(proc, pinned_set.indices, (), tol=tol),)
            flips = ()
        report = feasibility_check(proc, pinned_set.indices, families, vertices, tol_feas)
        return pinned_set, families, flips, vertices, report

    results = ordered_map(evaluate, jobs)
    candidates = []
    for number, (pinned_set, families, flips, vertices, report) in enumerate(results, start=1):
        candidates.append(FacetCandidate(
            scenario=number,
            pinned=pinned_set.indices,
            flip_springs=flips,
            families=families,
            vertices=vertices,
            feasibility=report,
            strict=pinned_set.strict,
            irreducible=pinned_set.irreducible,
        ))
    return tuple(candidates)
