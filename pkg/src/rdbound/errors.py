"""Exception types shared across the package."""


class InvalidSystemError(ValueError):
    """A system definition violates a structural requirement."""


class NumericOverflowError(ArithmeticError):
    """A right-hand side evaluation produced a non-finite value."""

    def __init__(self, index: int):
        super().__init__(f"non-finite rhs in compartment {index}")
        self.index = index


class PositivityViolation(ArithmeticError):
    """An integrator step went negative beyond the clipping tolerance."""


class PipelineOrderError(RuntimeError):
    """A ledger quantity was requested before its prerequisites."""


class ReductionNotApplicable(ValueError):
    """The symmetric two-compartment reduction does not apply."""


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""

    def __init__(self, msg: str, key: str | None = None):
        super().__init__(msg)
        self.key = key


class ChainOverflow(ArithmeticError):
    """The threshold chain left the double-precision range."""

    def __init__(self, step, detail: str = ""):
        super().__init__(f"threshold chain overflowed at step {step}" + (f": {detail}" if detail else ""))
        self.step = step
