"""Exception types shared across the package."""


class DimensionError(ValueError):
    """A vector or matrix has the wrong length/shape for the model."""


class DomainError(ValueError):
    """An entry lies outside the expected alphabet (e.g. not in {-1,+1})."""


class CapacityError(ValueError):
    """The requested exact computation exceeds the enumeration cap."""


class StructureError(ValueError):
    """A model violates a structural requirement (assignment, adjacency...)."""


class CooFormatError(ValueError):
    """A COO text file is malformed; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DegenerateDataError(ValueError):
    """Input statistics carry no usable signal for the estimator."""


class ContractionError(RuntimeError):
    """A tensor-network contraction washed out numerically."""


class InconsistencyError(ValueError):
    """Observed values violate a required identity or sign pattern."""
