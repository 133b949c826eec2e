"""Exception hierarchy shared by all mixident modules.

Class names match the error identifiers used in the operation contracts,
so callers can catch the exact failure mode they care about, or the
``MixidentError`` base to catch anything raised by this package.
"""


class MixidentError(Exception):
    """Base class for all mixident-specific errors."""


class InvalidArgs(MixidentError):
    """An argument violates a documented precondition."""


class NonPositiveWeight(MixidentError):
    """A mixture weight is zero or negative."""


class DimensionMismatch(MixidentError):
    """Objects over different sample spaces (or of different lengths) were combined."""


class NotAProbability(MixidentError):
    """A vector fails the probability-vector invariants (nonnegative, unit mass)."""


class CapExceeded(MixidentError):
    """A requested dense object would exceed the configured tensor size cap."""


class SplitMismatch(MixidentError):
    """A three-way split is inconsistent with the tensor order it is applied to."""


class ShapeMismatch(MixidentError):
    """Two tensors of different order or dimension were compared."""


class TooManyColumns(MixidentError):
    """A vector family exceeds the exhaustive subset-enumeration bound."""


class DependentSubset(MixidentError):
    """A column subset required to be independent is numerically dependent."""


class NTooSmall(MixidentError):
    """The group size is too small for the requested decomposition."""


class RankDeficientModes(MixidentError):
    """The flattened factor families do not have full column rank, so
    simultaneous diagonalization cannot proceed."""


class NoConvergence(MixidentError):
    """An iterative recovery or refinement stalled above its residual threshold."""


class ContinuationStalled(MixidentError):
    """The moment-matching continuation failed to correct back onto the
    constraint manifold."""


class SeparationLost(MixidentError):
    """Component parameters collided during a continuation walk."""


class InvalidRegion(MixidentError):
    """The requested (m, k, n) lies outside the theorem region for the
    requested construction."""


class VerificationFailed(MixidentError):
    """An independently recomputed invariant of an emitted object failed;
    indicates a build bug, not a user error."""


class GenerationFailed(MixidentError):
    """A rejection-sampling generator exhausted its retry budget."""
