"""Exception types shared across the package.

The CLI maps these onto process exit codes: ``UsageError`` -> 2,
``ForwardError`` subclasses -> 3, ``SolverError`` subclasses -> 4.
"""


class CurveMatchError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(CurveMatchError):
    """Bad command-line arguments or an invalid / unknown config entry."""


# --- mesh ---------------------------------------------------------------


class ParseError(CurveMatchError):
    """Malformed mesh file (bad section structure, counts, or element data)."""


class CurveNotClosed(CurveMatchError):
    """The embedded curve facets do not chain into a single closed loop."""


class CurveOnBoundary(CurveMatchError):
    """A curve facet touches the outer mesh boundary."""


class GenerationFailure(CurveMatchError):
    """The mesh generator could not produce a valid template mesh."""


class ForwardError(CurveMatchError):
    """Base class for failures of the forward map (exit code 3)."""


class SingularCell(ForwardError):
    """A cell is degenerate: the deformation gradient is not invertible."""


class TangledMesh(ForwardError):
    """A displacement inverted at least one cell."""


# --- element ------------------------------------------------------------


class IllConditioned(CurveMatchError):
    """Vandermonde or transformation system too ill-conditioned to trust."""


class DualityFailure(CurveMatchError):
    """Physical basis failed the node-functional duality check."""


class PointOutsideCell(CurveMatchError):
    """Evaluation point lies outside the requested cell."""


class ShapeMismatch(CurveMatchError):
    """Array argument has the wrong shape for the mesh/curve it targets."""


# --- linear solvers (exit code 4) ----------------------------------------


class SolverError(CurveMatchError):
    """Base class for linear-algebra failures (exit code 4)."""


class NotConverged(SolverError):
    """Iterative or direct solve did not reach the required residual."""


class NotPositiveDefinite(SolverError):
    """Operator expected to be SPD failed factorization."""


class SingularGram(SolverError):
    """Ensemble Gram system is numerically singular."""


# --- ensemble -----------------------------------------------------------


class AllMembersFailed(ForwardError):
    """Every ensemble member's forward evaluation failed in one iteration."""
