"""Exception types shared across the package."""


class WarpmeasError(Exception):
    """Base class for all package errors."""


class ContractViolation(WarpmeasError, ValueError):
    """An operation was called with arguments violating its precondition."""


class DimensionError(WarpmeasError, ValueError):
    """Operand dimensions are incompatible."""


class CapacityError(WarpmeasError, MemoryError):
    """A composite dimension exceeds the configured maximum."""


class PeriodizationError(WarpmeasError, ValueError):
    """A phase-space function does not decay at the grid boundary."""


class SchemaError(WarpmeasError, ValueError):
    """A scenario file does not match the expected schema."""
