"""Exception types shared across the package.

The CLI maps these onto exit codes (configuration problems exit 2,
divergence exits 3, everything else nonzero), so raise the most specific
type available.
"""


class PhantomError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PhantomError):
    """Invalid parameter values, level/schedule violations, bad constraint refs."""


class InputError(PhantomError):
    """Invalid runtime inputs: empty batches, non-finite values, bad labels."""


class ShapeError(InputError):
    """Array shape or arity mismatch."""


class DomainError(InputError):
    """Value outside the mathematical domain of an operation (e.g. sigma <= 0)."""


class FormatError(PhantomError):
    """Malformed persisted data (CSV rows, manifests)."""


class SchemaError(PhantomError):
    """Two tables that should share a feature schema do not."""


class InfeasibleSplitError(PhantomError):
    """Requested class counts or split cannot be satisfied."""


class DegenerateTrainingError(PhantomError):
    """A training regime collapsed to a single class."""


class NumericalError(PhantomError):
    """Non-finite or absurdly large intermediate values."""


class DivergenceError(NumericalError):
    """Training diverged; carries the offending loss term."""

    def __init__(self, term: str, value: float, step: int):
        self.term = term
        self.value = value
        self.step = step
        super().__init__(
            f"training diverged at step {step}: loss term '{term}' = {value!r}"
        )
