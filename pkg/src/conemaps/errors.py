"""Exception types shared across the package.

Every failure mode that callers are expected to catch gets its own class so
that tests and the CLI can dispatch on type. All inherit from ConemapsError.
Exceptions that interrupt an iteration carry the best data produced so far
(`payload`) so a caller can inspect or resume.
"""


class ConemapsError(Exception):
    """Base class for all package-specific errors."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class ZeroInput(ConemapsError):
    """An input point sits exactly at the cone point where the map is singular."""


class InsufficientRegularity(ConemapsError):
    """Grid-sampled data is too coarse to support the requested derivatives."""


class TwistViolation(ConemapsError):
    """Boundary data fails the sector-identification (twist) condition."""


class Aliasing(ConemapsError):
    """Requested mode range cannot be resolved by the sample count."""


class NonConeMapping(ConemapsError):
    """Series synthesis would produce a term unbounded at the cone point."""


class NoConvergence(ConemapsError):
    """An iteration hit its step budget; the best iterate rides in payload."""


class OutOfDisc(ConemapsError):
    """A cone-point relocation left the allowed centering neighborhood."""


class TargetPunctureHit(ConemapsError):
    """Map values hit the target cone point, where the metric degenerates."""


class NotHarmonic(ConemapsError):
    """An operation requiring a harmonic base map got a non-harmonic one."""


class SingularSystem(ConemapsError):
    """A linear solve failed to factor or to meet its residual bound."""


class PoorFit(ConemapsError):
    """A least-squares model fit fell below the goodness threshold."""


class InconsistentResidue(ConemapsError):
    """Contour residues disagree across radii beyond tolerance."""


class SplitFails(ConemapsError):
    """Pullback-metric decomposition loses positivity for the given split."""


class MinimalityViolated(ConemapsError):
    """A compactly supported perturbation lowered the energy; witness attached."""


class DegenerateJacobian(ConemapsError):
    """The map's Jacobian determinant lost its sign on too many nodes."""


class PathStuck(ConemapsError):
    """Continuation could not advance even at the minimum step size."""


class WindowExceeded(ConemapsError):
    """A rescaling or comparison window falls outside the resolved grid."""


class HypothesisFail(ConemapsError):
    """Input data violates a hypothesis of the inequality being checked."""


class FormViolation(ConemapsError):
    """Data does not have the structural normal form the operation assumes."""
