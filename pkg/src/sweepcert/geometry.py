"""Convex geometry in a weighted (diagonal-metric) inner product.

Everything downstream — margins, certificates, the catching-up scheme —
reduces to a handful of primitives implemented here:

* inner products and norms in the metric ``(x, y) = <x, diag(a) y>``,
* projection onto the span of a generator set (closed form via the Gram
  matrix),
* cone membership (nonnegative least squares, active-set with
  lowest-index-first selection for reproducibility),
* exact conic decomposition and strictness over independent generators,
* distance from a point strictly inside a cone to the cone boundary,
* projection onto a polyhedron (primal active-set QP, optionally with a
  general SPD metric for reduced-coordinate problems).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DependentGenerators,
    InfeasibleSet,
    MaxIterations,
    NotInSpan,
    NotStrictlyInside,
)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class AMetric:
    """Diagonal positive metric; ``a`` is the vector of weights."""

    a: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.a, dtype=float).ravel()
        if arr.size == 0 or np.any(arr <= 0):
            raise ValueError("metric weights must be positive")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @property
    def dim(self) -> int:
        return self.a.size

    def matrix(self) -> np.ndarray:
        return np.diag(self.a)

    def sqrt(self) -> np.ndarray:
        return np.sqrt(self.a)


def euclidean(dim: int) -> AMetric:
    return AMetric(np.ones(dim))


def a_inner(metric: AMetric, x: np.ndarray, y: np.ndarray) -> float:
    """Weighted inner product sum_k a_k x_k y_k."""
    return float(np.dot(np.asarray(x) * metric.a, np.asarray(y)))


def a_norm(metric: AMetric, x: np.ndarray) -> float:
    return float(np.sqrt(max(a_inner(metric, x, x), 0.0)))


@dataclass(frozen=True)
class ConeSpec:
    """A finitely generated cone with optional (sign, spring) provenance.

    ``generators`` has one generator per column.  ``provenance`` records
    where each generator came from when the cone is built out of signed
    constraint normals; it is carried along for reporting only.
    """

    generators: np.ndarray
    provenance: tuple[tuple[int, int], ...] | None = None
    independent: bool = False

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.generators, dtype=float))
        G = G.copy()
        G.setflags(write=False)
        object.__setattr__(self, "generators", G)
        k = G.shape[1]
        indep = k == 0 or np.linalg.matrix_rank(G) == k
        object.__setattr__(self, "independent", bool(indep))
        if self.provenance is not None and len(self.provenance) != k:
            raise ValueError("provenance length must match generator count")

    @property
    def count(self) -> int:
        return self.generators.shape[1]

    def drop(self, index: int) -> "ConeSpec":
        keep = [k for k in range(self.count) if k != index]
        prov = None
        if self.provenance is not None:
            prov = tuple(self.provenance[k] for k in keep)
        return ConeSpec(self.generators[:, keep], prov)


# --- span projection ---------------------------------------------------------

def project_span(metric: AMetric, x: np.ndarray, generators: np.ndarray) -> np.ndarray:
    """Metric projection of ``x`` onto the span of the generator columns.

    Closed form N [N^T A N]^{-1} N^T A x; the residual is A-orthogonal to
    every generator.  An empty generator set projects to the origin.
    """
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    x = np.asarray(x, dtype=float)
    if G.shape[1] == 0:
        return np.zeros_like(x)
    AG = metric.a[:, None] * G
    gram = G.T @ AG
    try:
        lam = np.linalg.solve(gram, AG.T @ x)
    except np.linalg.LinAlgError:
        raise DependentGenerators("generator Gram matrix is singular")
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e13:
        raise DependentGenerators(f"generator Gram matrix is ill conditioned (cond={cond:.2e})")
    return G @ lam


# --- cone membership (NNLS) ---------------------------------------------------

@dataclass(frozen=True)
class ConeMembership:
    inside: bool
    coeffs: np.ndarray
    residual: float


def _nnls(B: np.ndarray, z: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """min ||B lam - z|| over lam >= 0, Lawson-Hanson active set.

    The entering index is the lowest index with positive gradient, which
    keeps runs bit-reproducible and terminates finitely on polyhedral data.
    """
    k = B.shape[1]
    lam = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    scale = max(1.0, float(np.linalg.norm(z)))
    for _ in range(max_iter):
        w = B.T @ (z - B @ lam)
        candidates = np.flatnonzero(~passive & (w > tol * scale))
        if candidates.size == 0:
            return lam
        passive[candidates[0]] = True
        while True:
            sub, _, _, _ = np.linalg.lstsq(B[:, passive], z, rcond=None)
            trial = np.zeros(k)
            trial[passive] = sub
            if sub.size == 0 or sub.min() > 0:
                lam = trial
                break
            mask = passive & (trial <= 0)
            steps = lam[mask] / (lam[mask] - trial[mask])
            alpha = steps.min()
            lam = lam + alpha * (trial - lam)
            passive &= lam > tol * max(1.0, lam.max(initial=0.0))
            lam[~passive] = 0.0
    raise MaxIterations("nonnegative least squares did not terminate")


def cone_membership(
    metric: AMetric, x: np.ndarray, cone: ConeSpec, tol: float = DEFAULT_TOL
) -> ConeMembership:
    """Decide x in cone(generators) by metric-weighted nonnegative least squares.

    ``inside`` holds when the best conic fit has residual at most
    ``tol * max(1, ||x||)``.  The residual is always returned, so a caller
    can apply its own threshold.
    """
    x = np.asarray(x, dtype=float)
    sq = metric.sqrt()
    if cone.count == 0:
        res = a_norm(metric, x)
        return ConeMembership(res <= tol * max(1.0, res), np.zeros(0), res)
    B = sq[:, None] * cone.generators
    z = sq * x
    lam = _nnls(B, z, tol=1e-14, max_iter=200 + 20 * cone.count)
    residual = float(np.linalg.norm(B @ lam - z))
    inside = residual <= tol * max(1.0, float(np.linalg.norm(z)))
    return ConeMembership(inside, lam, residual)


@dataclass(frozen=True)
class ConeDecomposition:
    strict: bool
    coeffs: np.ndarray


def cone_decompose_strict(
    metric: AMetric, x: np.ndarray, cone: ConeSpec, tol: float = DEFAULT_TOL
) -> ConeDecomposition:
    """Exact coordinates of ``x`` over independent generators, with strictness.

    Solves G lam = x (raising NotInSpan when x has a component outside the
    span) and reports ``strict`` when every coordinate exceeds
    ``tol * ||lam||_inf``; a zero coordinate puts x on the relative
    boundary of the cone.
    """
    if not cone.independent:
        raise DependentGenerators("strict decomposition needs independent generators")
    x = np.asarray(x, dtype=float)
    if cone.count == 0:
        if a_norm(metric, x) > tol:
            raise NotInSpan("empty generator set spans only the origin")
        return ConeDecomposition(False, np.zeros(0))
    G = cone.generators
    AG = metric.a[:, None] * G
    lam = np.linalg.solve(G.T @ AG, AG.T @ x)
    residual = a_norm(metric, x - G @ lam)
    if residual > tol * max(1.0, a_norm(metric, x)):
        raise NotInSpan(f"component outside generator span (residual {residual:.3e})")
    threshold = tol * max(np.abs(lam).max(initial=0.0), 0.0)
    return ConeDecomposition(bool(np.all(lam > threshold)), lam)


def distance_to_cone_boundary(metric: AMetric, x: np.ndarray, cone: ConeSpec) -> float:
    """Distance from a strict interior point to the relative cone boundary.

    The boundary of a cone over independent generators is the union of the
    sub-cones obtained by dropping one generator, and on each of those the
    nearest point lies in the corresponding span, so the distance is the
    minimum over dropped generators of the distance to the span of the
    rest.  A single-generator cone has boundary {0}.
    """
    decomposition = cone_decompose_strict(metric, x, cone)
    if not decomposition.strict:
        raise NotStrictlyInside("point lies on the relative boundary of the cone")
    x = np.asarray(x, dtype=float)
    best = np.inf
    for k in range(cone.count):
        rest = cone.drop(k).generators
        dist = a_norm(metric, x - project_span(metric, x, rest))
        best = min(best, dist)
    return float(best)


# --- polyhedron projection (QP) -----------------------------------------------

@dataclass(frozen=True)
class QPResult:
    x: np.ndarray
    active: tuple[int, ...]
    iterations: int


def _feasible_start(A_ub, b_ub, A_eq, b_eq, tol):
    """Interior-style LP start: maximize the uniform inequality slack."""
    n = A_ub.shape[1] if A_ub.size else A_eq.shape[1]
    norms = np.linalg.norm(A_ub, axis=1) if A_ub.size else np.zeros(0)
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    lp_ub = np.hstack([A_ub, norms[:, None]]) if A_ub.size else None
    lp_eq = np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))]) if A_eq.size else None
    scale = max(1.0, float(np.abs(b_ub).max(initial=0.0)), float(np.abs(b_eq).max(initial=0.0)))
    bounds = [(None, None)] * n + [(None, scale * 1e3)]
    res = linprog(
        cost, A_ub=lp_ub, b_ub=b_ub if A_ub.size else None,
        A_eq=lp_eq, b_eq=b_eq if A_eq.size else None,
        bounds=bounds, method="highs",
    )
    if not res.success:
        raise InfeasibleSet("no feasible point (phase-1 LP failed)")
    v = res.x[:n]
    slack = res.x[-1]
    viol = float((A_ub @ v - b_ub).max(initial=0.0)) if A_ub.size else 0.0
    if A_eq.size:
        viol = max(viol, float(np.abs(A_eq @ v - b_eq).max(initial=0.0)))
    if slack < -1e3 * tol * scale or viol > 1e3 * tol * scale:
        raise InfeasibleSet(f"no feasible point (best slack {slack:.3e})")
    return v


def qp_project(
    Q: np.ndarray,
    v0: np.ndarray,
    A_ub: np.ndarray | None = None,
    b_ub: np.ndarray | None = None,
    A_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    *,
    start: np.ndarray | None = None,
    active: tuple[int, ...] = (),
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
) -> QPResult:
    """Nearest point to ``v0`` in {A_ub v <= b_ub, A_eq v = b_eq}, metric Q.

    Primal active-set iteration from a feasible start (found by an LP
    pre-solve when none is supplied).  ``active`` may seed the working set
    with inequality rows known to be tight at ``start``; constraint drops
    use the lowest negative-multiplier index so runs are reproducible.
    """
    v0 = np.asarray(v0, dtype=float)
    n = v0.size
    Q = np.asarray(Q, dtype=float)
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.ravel(np.asarray(b_ub, dtype=float))
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.ravel(np.asarray(b_eq, dtype=float))
    n_ub, n_eq = A_ub.shape[0], A_eq.shape[0]

    scale = max(1.0, float(np.abs(b_ub).max(initial=0.0)), float(np.abs(b_eq).max(initial=0.0)))
    feas_tol = 1e2 * tol * scale

    v = None
    if start is not None:
        start = np.asarray(start, dtype=float)
        ok = True
        if n_ub and (A_ub @ start - b_ub).max(initial=0.0) > feas_tol:
            ok = False
        if n_eq and np.abs(A_eq @ start - b_eq).max(initial=0.0) > feas_tol:
            ok = False
        if ok:
            v = start.copy()
    if v is None:
        if n_ub and not n_eq and (A_ub @ v0 - b_ub).max(initial=0.0) <= 0.0:
            v = v0.copy()
        else:
            v = _feasible_start(A_ub, b_ub, A_eq, b_eq, tol)
        active = ()

    working = sorted(i for i in active if i < n_ub)
    # only keep seeds actually tight at the start point
    if working and n_ub:
        working = [i for i in working if abs(A_ub[i] @ v - b_ub[i]) <= feas_tol]

    if max_iter is None:
        max_iter = 50 + 12 * (n_ub + n_eq)

    for iteration in range(1, max_iter + 1):
        rows = np.vstack([A_eq, A_ub[working]]) if (n_eq or working) else np.zeros((0, n))
        rhs = np.concatenate([b_eq, b_ub[working]])
        k = rows.shape[0]
        kkt = np.zeros((n + k, n + k))
        kkt[:n, :n] = Q
        if k:
            kkt[:n, n:] = rows.T
            kkt[n:, :n] = rows
        full_rhs = np.concatenate([Q @ v0, rhs])
        try:
            sol = np.linalg.solve(kkt, full_rhs)
        except np.linalg.LinAlgError:
            sol, _, _, _ = np.linalg.lstsq(kkt, full_rhs, rcond=None)
        target, mult = sol[:n], sol[n:]

        step = target - v
        if float(np.abs(step).max(initial=0.0)) <= tol * max(1.0, float(np.abs(v).max(initial=0.0))):
            # stationary on the working set: check inequality multipliers
            ineq_mult = mult[n_eq:]
            if ineq_mult.size == 0 or ineq_mult.min() >= -tol * max(1.0, float(np.abs(mult).max(initial=0.0))):
                return QPResult(target, tuple(working), iteration)
            drop = int(np.flatnonzero(ineq_mult < -tol * max(1.0, float(np.abs(mult).max())))[0])
            del working[drop]
            continue

        alpha = 1.0
        blocking = -1
        if n_ub:
            inactive = [i for i in range(n_ub) if i not in working]
            if inactive:
                rows_i = A_ub[inactive]
                num = b_ub[inactive] - rows_i @ v
                den = rows_i @ step
                for j, i in enumerate(inactive):
                    if den[j] > tol:
                        a_step = num[j] / den[j]
                        if a_step < alpha - 1e-15:
                            alpha = a_step
                            blocking = i
        v = v + max(alpha, 0.0) * step
        if blocking >= 0:
            working.append(blocking)
            working.sort()
    raise MaxIterations("active-set projection did not terminate")


def project_polyhedron(
    metric: AMetric,
    y0: np.ndarray,
    halfspaces: tuple[np.ndarray, np.ndarray],
    equalities: tuple[np.ndarray, np.ndarray] | None = None,
    tol: float = DEFAULT_TOL,
) -> np.ndarray:
    """Metric-nearest point of a polyhedron {A v <= b} (and optional E v = f).

    Raises InfeasibleSet when the constraint set is empty.
    """
    A_ub, b_ub = halfspaces
    A_eq, b_eq = equalities if equalities is not None else (None, None)
    res = qp_project(metric.matrix(), y0, A_ub, b_ub, A_eq, b_eq, tol=tol)
    return res.x


def translation_property_check(
    metric: AMetric,
    v: np.ndarray,
    c: np.ndarray,
    halfspaces: tuple[np.ndarray, np.ndarray],
    equalities: tuple[np.ndarray, np.ndarray] | None = None,
    tol: float = DEFAULT_TOL,
) -> bool:
    """Check proj(v, F) + c == proj(v + c, F + c) for a polytope F."""
    A_ub, b_ub = halfspaces
    p1 = project_polyhedron(metric, v, (A_ub, b_ub), equalities, tol=tol) + np.asarray(c, float)
    shifted_eq = None
    if equalities is not None:
        A_eq, b_eq = equalities
        shifted_eq = (A_eq, b_eq + A_eq @ c)
    p2 = project_polyhedron(metric, np.asarray(v, float) + c, (A_ub, b_ub + A_ub @ c), shifted_eq, tol=tol)
    return a_norm(metric, p1 - p2) <= tol * max(1.0, a_norm(metric, p1))
