"""Exception hierarchy for the order-residue census toolkit."""


class OrderDistError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(OrderDistError, ValueError):
    """An argument is outside the documented domain of an operation."""


class ConfigError(OrderDistError, ValueError):
    """A configuration value (environment or flag) could not be used."""


class OrderUndefinedError(OrderDistError, ValueError):
    """The order of g modulo p is undefined because p divides g's numerator or denominator.

    Callers that iterate over primes treat this as a skip signal.
    """

    def __init__(self, g, p: int):
        self.g = g
        self.p = p
        super().__init__(f"order undefined at p={p} for g={g}")


class HypothesisError(OrderDistError, ValueError):
    """A hypothesis the computation relies on is not satisfied."""


class PrecisionNotAttainedError(OrderDistError, RuntimeError):
    """A certified computation could not reach the requested error radius."""


class CapacityError(OrderDistError, RuntimeError):
    """A run would exceed the configured memory budget."""


class CheckpointError(OrderDistError, ValueError):
    """A checkpoint file is missing, corrupt or inconsistent."""


class CheckpointVersionError(CheckpointError):
    """A checkpoint file declares a format version this build cannot read."""


class SpecMismatchError(OrderDistError, ValueError):
    """Two census results (or a census and a theory table) do not describe the same cells."""


class VerificationError(OrderDistError, RuntimeError):
    """A brute-force oracle disagreed with the fast implementation."""
