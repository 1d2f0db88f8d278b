"""Exception hierarchy for sweepcert.

Every error raised by the library derives from :class:`SweepcertError`, so
callers (and the CLI) can catch one base class and still report the precise
failure mode.
"""


class SweepcertError(Exception):
    """Base class for all sweepcert errors."""


# --- network validation -----------------------------------------------------

class NetworkValidationError(SweepcertError):
    """Base class for rejections of a network description."""


class RankDeficientD(NetworkValidationError):
    """Kinematic matrix rank is not n-1 (springs do not form a connected graph)."""


class LoadingDegenerate(NetworkValidationError):
    """The loading location vector induces no length constraint (rank(D^T R) != 1)."""


class LimitOrderViolated(NetworkValidationError):
    """Some lower stress limit exceeds the corresponding upper limit."""


class NonpositiveStiffness(NetworkValidationError):
    """A spring stiffness is zero or negative."""


# --- process construction ---------------------------------------------------

class ConstructionFailed(SweepcertError):
    """A construction step produced a matrix violating its rank contract."""


class SingularW(ConstructionFailed):
    """The coupling matrix is numerically singular; upstream rank assumptions fail."""


# --- convex geometry ---------------------------------------------------------

class GeometryError(SweepcertError):
    """Base class for convex-geometry failures."""


class DependentGenerators(GeometryError):
    """Span projection requested over a numerically dependent generator set."""


class NotInSpan(GeometryError):
    """Exact cone decomposition requested for a vector outside the generator span."""


class NotStrictlyInside(GeometryError):
    """Boundary distance requested for a point on or outside the cone boundary."""


class InfeasibleSet(GeometryError):
    """Projection onto an empty polyhedron."""


class MaxIterations(GeometryError):
    """An iterative geometric solver failed to terminate within its budget."""


# --- facet enumeration / certification ---------------------------------------

class SingularVertexSystem(SweepcertError):
    """The linear system pinning a candidate vertex is singular."""


class ReducibleOrBoundary(SweepcertError):
    """The pinned set is reducible or the drift sits on the cone boundary (zero margin)."""


class EigenFailure(SweepcertError):
    """Eigenvalue computation for the component-map gain did not converge."""


class InfeasibleCandidate(SweepcertError):
    """Certification requested for a candidate whose feasibility check failed."""
