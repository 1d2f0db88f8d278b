"""Build the polyhedral sweeping process from a validated network.

The stress state of the network lives in a d-dimensional subspace of R^m
(d = m - n + 2) carrying the stiffness-weighted inner product.  The moving
constraint is a box on the spring stresses translated along a fixed drift
direction by the loading.  Construction proceeds in three steps:

1. ``compute_free_motions``: node displacement patterns that do not change
   the loading length (the internal mechanisms the loading cannot see).
2. ``compute_state_basis``: a basis of the stress state space, the
   stiffness-orthogonal complement of the elongations of those motions.
3. ``compute_self_stress_basis``: a basis of ker(D^T), the self-balanced
   stress directions.

None of the three bases is unique; downstream results are invariant under
the choice (a property the test suite checks).  ``assemble_process``
combines them, inverts the coupling matrix, and materializes the per-spring
constraint normals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .errors import ConstructionFailed, SingularW
from .geometry import AMetric
from .network import Loading, ValidatedNetwork

CONSTRUCTION_TOL = 1e-9


def _relative_residual(value: float, *matrices: np.ndarray) -> float:
    scale = max((float(np.linalg.norm(M, 2)) for M in matrices if M.size), default=1.0)
    return value / max(scale, 1.0)


def compute_free_motions(net: ValidatedNetwork) -> np.ndarray:
    """n x (n-2) matrix of node motions with zero loading response.

    Columns span displacement patterns u with R^T D u = 0 that still
    produce independent elongations (the kernel direction of D is split
    off, so D @ result keeps full column rank n-2).
    """
    n = net.n
    row = (net.R @ net.D).reshape(1, -1)
    kernel_D = null_space(net.D)
    if kernel_D.shape[1] != 1:
        raise ConstructionFailed(f"kernel of D has dimension {kernel_D.shape[1]}, expected 1")
    K = null_space(row)
    beta = K.T @ kernel_D
    M = K @ null_space(beta.T)
    if M.shape != (n, n - 2):
        raise ConstructionFailed(f"free-motion matrix has shape {M.shape}, expected {(n, n - 2)}")
    residual = float(np.abs(row @ M).max(initial=0.0))
    if _relative_residual(residual, net.D) > CONSTRUCTION_TOL:
        raise ConstructionFailed(f"loading row not annihilated (residual {residual:.3e})")
    if M.size and np.linalg.matrix_rank(net.D @ M) != n - 2:
        raise ConstructionFailed("elongations of free motions are rank deficient")
    return M


def compute_state_basis(net: ValidatedNetwork, free_motions: np.ndarray) -> np.ndarray:
    """m x (m-n+2) basis of the state space: stiffness-orthogonal to D @ free_motions."""
    d = net.m - net.n + 2
    U = net.D @ free_motions
    basis = null_space(U.T * net.a) if U.size else np.eye(net.m)
    if basis.shape[1] != d:
        raise ConstructionFailed(
            f"state space has dimension {basis.shape[1]}, expected {d}"
        )
    residual = float(np.abs(U.T @ (net.a[:, None] * basis)).max(initial=0.0))
    if _relative_residual(residual, U) > CONSTRUCTION_TOL:
        raise ConstructionFailed(f"state basis not stiffness-orthogonal (residual {residual:.3e})")
    return basis


def compute_self_stress_basis(net: ValidatedNetwork) -> np.ndarray:
    """m x (m-n+1) basis of ker(D^T), the self-balanced stress directions."""
    basis = null_space(net.D.T)
    if basis.shape[1] != net.m - net.n + 1:
        raise ConstructionFailed(
            f"self-stress space has dimension {basis.shape[1]}, expected {net.m - net.n + 1}"
        )
    return basis


@dataclass(frozen=True, eq=False)
class SweepingProcess:
    """Derived geometry of the sweeping process for one network.

    Immutable; all arrays are read-only.  ``normals[:, j]`` is the state-space
    vector representing spring j's constraint functional: for every state y
    in the span of ``basis``, <e_j, A y> = <normals[:, j], A y>.
    """

    net: ValidatedNetwork
    basis: np.ndarray          # m x d, columns span the state space
    free_motions: np.ndarray   # n x (n-2)
    self_stress: np.ndarray    # m x (m-n+1)
    frame: np.ndarray          # d x m, rows = loading row R^T then self-stress rows
    coupling: np.ndarray       # d x d, frame @ basis, invertible
    drive: np.ndarray          # length d, coupling^{-1} (1, 0, ..., 0)
    normals: np.ndarray        # m x m
    stress_rows: np.ndarray    # m x d, row j = stiffness-weighted basis row j
    reduced_metric: np.ndarray  # d x d, basis^T A basis (SPD)

    def __post_init__(self):
        for name in ("basis", "free_motions", "self_stress", "frame", "coupling",
                     "drive", "normals", "stress_rows", "reduced_metric"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def m(self) -> int:
        return self.net.m

    @property
    def n(self) -> int:
        return self.net.n

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    @property
    def a(self) -> np.ndarray:
        return self.net.a

    @property
    def c_minus(self) -> np.ndarray:
        return self.net.c_minus

    @property
    def c_plus(self) -> np.ndarray:
        return self.net.c_plus

    @property
    def loading(self) -> Loading:
        return self.net.loading

    @property
    def metric(self) -> AMetric:
        return AMetric(self.net.a)

    @property
    def drift(self) -> np.ndarray:
        """Drift direction: the moving offset is c(t) = -drift * l(t)."""
        return self.basis @ self.drive

    def reduced_offset(self, t: float) -> np.ndarray:
        """Coordinates of the moving offset c(t) in the state basis."""
        return -self.drive * self.loading.at(t)


def assemble_process(
    net: ValidatedNetwork,
    free_motions: np.ndarray | None = None,
    basis: np.ndarray | None = None,
    self_stress: np.ndarray | None = None,
    tol: float = CONSTRUCTION_TOL,
) -> SweepingProcess:
    """Combine the three construction steps and verify every invariant.

    The component matrices may be injected (any valid gauge works and the
    result is the same moving set); omitted ones are computed.  Raises
    SingularW when the coupling matrix is not invertible, which signals a
    violated rank assumption upstream.
    """
    if free_motions is None:
        free_motions = compute_free_motions(net)
    if basis is None:
        basis = compute_state_basis(net, free_motions)
    if self_stress is None:
        self_stress = compute_self_stress_basis(net)
    free_motions = np.asarray(free_motions, dtype=float).reshape(net.n, -1)
    basis = np.asarray(basis, dtype=float)
    self_stress = np.asarray(self_stress, dtype=float)

    residual = float(np.abs(self_stress.T @ net.D).max(initial=0.0))
    if _relative_residual(residual, net.D, self_stress) > tol:
        raise ConstructionFailed(f"self-stress basis not orthogonal to D (residual {residual:.3e})")
    if np.linalg.matrix_rank(self_stress) != net.m - net.n + 1:
        raise ConstructionFailed("self-stress basis is rank deficient")

    frame = np.vstack([net.R.reshape(1, -1), self_stress.T])
    coupling = frame @ basis
    d = basis.shape[1]
    if coupling.shape != (d, d):
        raise ConstructionFailed(f"coupling matrix has shape {coupling.shape}, expected square of size {d}")
    cond = np.linalg.cond(coupling)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularW(f"coupling matrix is singular (cond {cond:.3e})")

    unit_load = np.zeros(d)
    unit_load[0] = 1.0
    drive = np.linalg.solve(coupling, unit_load)
    normals = basis @ np.linalg.solve(coupling, frame)

    # the constraint functionals must agree with the coordinate functionals on the state space
    weighted = net.a[:, None] * basis
    identity_residual = float(np.abs(weighted - normals.T @ weighted).max())
    if _relative_residual(identity_residual, weighted) > 1e3 * tol:
        raise ConstructionFailed(
            f"normal representation identity violated (residual {identity_residual:.3e})"
        )

    return SweepingProcess(
        net=net,
        basis=basis,
        free_motions=free_motions,
        self_stress=self_stress,
        frame=frame,
        coupling=coupling,
        drive=drive,
        normals=normals,
        stress_rows=weighted,
        reduced_metric=basis.T @ weighted,
    )


def build_process(net: ValidatedNetwork, tol: float = CONSTRUCTION_TOL) -> SweepingProcess:
    """Convenience: run all three construction steps with computed gauges."""
    return assemble_process(net, tol=tol)


def moving_offset(proc: SweepingProcess, t: float) -> np.ndarray:
    """The moving-set translation c(t) = -drift * l(t); affine in t."""
    return -proc.drift * proc.loading.at(t)


def offset_rate(proc: SweepingProcess) -> np.ndarray:
    """Constant derivative c'(t) = -drift * l1."""
    return -proc.drift * proc.loading.l1


def stress_from_state(proc: SweepingProcess, y: np.ndarray, t: float) -> np.ndarray:
    """Spring stresses s_j = a_j <e_j, y - c(t)>."""
    return proc.a * (np.asarray(y, dtype=float) - moving_offset(proc, t))


def state_from_stress(proc: SweepingProcess, s: np.ndarray, t: float) -> np.ndarray:
    """Inverse of stress_from_state on the state space."""
    return np.asarray(s, dtype=float) / proc.a + moving_offset(proc, t)
