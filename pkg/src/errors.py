"""Exceptions raised by the laboratory."""


class XChannelError(Exception):
    """Base class for all laboratory errors."""


class PreconditionError(XChannelError, ValueError):
    """An argument is outside the domain of the operation."""


class PowerConstraintError(PreconditionError):
    """A modulation symbol exceeds the unit power budget."""


class NotUniqueError(XChannelError):
    """The columns of a GF(2) system are linearly dependent."""


class NoSolutionError(XChannelError):
    """The columns are independent but the right-hand side is not in their span."""


class AlignmentFailure(XChannelError):
    """A receiver cannot separate its desired bits from the aligned interference."""

    def __init__(self, rx: int, rank: int, unknowns: int):
        super().__init__(f"receiver {rx}: rank {rank} < {unknowns} unknowns")
        self.rx = rx
        self.rank = rank
        self.unknowns = unknowns


class InfeasibleAllocationError(XChannelError):
    """No nonnegative allocation satisfies the decoding conditions."""


class BudgetExceededError(XChannelError):
    """An enumeration would exceed the configured budget."""

    def __init__(self, size: int, budget: int, what: str = "enumeration"):
        super().__init__(f"{what} size {size} exceeds budget {budget}")
        self.size = size
        self.budget = budget
