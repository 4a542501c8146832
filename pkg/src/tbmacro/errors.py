"""Exception types shared across the package.

The CLI maps these onto exit codes: config problems exit 2, numerical
aborts exit 3, an undefined topological invariant exits 4.
"""


class TbmacroError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(TbmacroError, ValueError):
    """A physical or numerical parameter is out of range (e.g. v <= 0)."""


class CapacityError(TbmacroError):
    """Requested lattice exceeds the configured site budget."""


class InvalidOrderError(TbmacroError, ValueError):
    """Expansion order p outside the supported range."""


class DegeneracyError(TbmacroError):
    """The reference momentum is not a degenerate point of the leading symbol."""


class DegenerateFieldError(TbmacroError):
    """A coefficient field violates a positivity/transversality precondition."""


class UnsupportedOrderError(TbmacroError):
    """Quantization of a monomial outside the supported (order, coefficient) set."""


class SplittingUnsupportedError(TbmacroError):
    """Symbol cannot be split into constant-coefficient + pointwise parts."""


class IntegratorPreconditionError(TbmacroError):
    """Split-step precondition violated (e.g. non-Hermitian pointwise block)."""


class NumericalAbortError(TbmacroError):
    """NaN/Inf detected during propagation; carries the offending step index."""

    def __init__(self, msg, step=None, time=None):
        super().__init__(msg)
        self.step = step
        self.time = time


class TimeGridMismatchError(TbmacroError, ValueError):
    """Two trajectories do not share snapshot times."""


class NoModesError(TbmacroError):
    """Requested spectral window contains no usable edge modes."""


class DomainTooSmallError(TbmacroError):
    """Localized mode does not decay below threshold inside the domain."""


class DegenerateZeroError(TbmacroError):
    """A zero of the defect field has a (near-)singular Jacobian: invariant undefined."""


class CoverageError(TbmacroError):
    """Zeros of the defect field sit too close to the search-box boundary."""


class ResolutionError(TbmacroError):
    """Newton seeding failed to resolve zeros indicated by sign changes."""


class InvalidConfigError(TbmacroError, ValueError):
    """Run configuration failed validation; carries a JSON path when known."""

    def __init__(self, msg, path=None):
        super().__init__(msg)
        self.path = path


class UnderResolvedWarning(UserWarning):
    """Packet or field is marginally resolved on the requested grid."""
