"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class NonSummable(ValueError):
    """Pairing of two sequences whose pointwise product has no finite sum."""


class ExactnessError(TypeError):
    """Exact-rational and binary64 data were mixed without an explicit cast."""


class DependentVectors(ValueError):
    """Rank-one factor vectors are linearly dependent (factorization not injective)."""


class NotSelfAdjoint(ValueError):
    """A leading coefficient that must be self-adjoint is not."""


class TruncationTooShort(ValueError):
    """A series coefficient beyond the valid truncation order was requested."""


class DepthExceeded(RuntimeError):
    """Inversion iteration did not terminate within the allowed depth."""


class ChainInconsistent(RuntimeError):
    """An internal identity of the projection chain failed (implementation bug)."""


class FloatingAmbiguous(RuntimeError):
    """A float-mode vanishing decision fell inside the ambiguity band."""


class EmptyAuxiliarySpace(ValueError):
    """Reconstruction requested for a potential with trivial auxiliary space."""


class CaseMismatch(ValueError):
    """Dispatch disagreed with the invertibility pattern of the chain."""


class IdentityViolated(RuntimeError):
    """A Green-operator identity failed at some test site."""


class NotApplicable(ValueError):
    """The requested closed form does not exist for this invertibility case."""


class QsAssumptionViolated(RuntimeError):
    """The finite invertibility reduction contradicted the chain state."""


class NearSingular(RuntimeError):
    """Finite auxiliary matrix too ill-conditioned at the requested point."""
