from typing import Optional


class SimoidError(Exception):
    """Base error for every failure raised by the analysis services"""

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ParameterError(SimoidError):
    """Invalid dimensions, orders or argument ranges"""


class DomainError(SimoidError):
    """Argument outside the mathematical domain of the operation"""


class RankError(SimoidError):
    """A matrix that must have full rank does not"""


class DegenerateSplitError(SimoidError):
    """No eigenvalue gap between the signal and noise subspaces"""


class OvermodelAmbiguityError(SimoidError):
    """The numerical kernel does not have the expected dimension"""


class DegenerateError(SimoidError):
    """A quantity that must be nonzero vanished"""


class NormalizationError(SimoidError):
    """No coordinate functional can normalize the kernel search"""


class LPError(SimoidError):
    """The simplex solver broke down"""


class NotFoundError(SimoidError):
    """A search ended without a qualifying value"""

    def __init__(self, detail: str, margin: Optional[float] = None):
        super().__init__(detail)
        self.margin = margin


class CommandError(Exception):
    """Raised by command handlers; carries the process exit code"""

    def __init__(self, exit_code: int, detail: str):
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail
