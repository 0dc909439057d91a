"""Exception and warning types shared across the package."""


class PhboxError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(PhboxError):
    """Shapes of matrices, vectors or grids do not line up."""


class NotSkew(PhboxError):
    """A matrix required to be skew-symmetric is not."""


class NotSymmetric(PhboxError):
    """A matrix required to be symmetric is not."""


class NotSPD(PhboxError):
    """A matrix required to be symmetric positive definite is not."""


class InvalidGrid(PhboxError):
    """Grid parameters outside the supported range (axes need >= 3 nodes)."""


class SplitMismatch(PhboxError):
    """A boundary splitting does not partition the face-node set."""


class InfiniteNorm(PhboxError):
    """Dual norm is +inf; the requested map is undefined for this vector."""


class Singular(PhboxError):
    """A matrix required to be invertible is numerically singular."""


class NotDissipative(PhboxError):
    """An operator required to be dissipative has a positive symmetric part."""


class ClampViolated(PhboxError):
    """A state does not satisfy the clamped-boundary constraint."""


class SolveFailure(PhboxError):
    """A linear solve failed (singular system)."""


class SaddleSingular(PhboxError):
    """The forced-step KKT matrix is rank deficient beyond pruning."""


class SchemaError(PhboxError):
    """A run configuration violates the published JSON schema."""


class RankDeficiencyWarning(UserWarning):
    """Dependent constraint rows were pruned during assembly."""


class ClampProjectionWarning(UserWarning):
    """An initial state violated the clamp and was projected onto it."""
