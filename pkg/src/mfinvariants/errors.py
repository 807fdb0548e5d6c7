"""Exception types shared across the pipeline."""


class MFError(Exception):
    """Base class for all library errors."""


class InputError(MFError, ValueError):
    """Malformed user input (files, chains, parameters)."""


class CutoffMismatch(MFError, ValueError):
    pass


class NotDelzant(MFError, ValueError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class NotSpin(MFError):
    pass


class ConsistencyFailure(MFError):
    """An internal identity failed to hold; indicates a bug."""


class ClosednessFailure(MFError):
    pass


class Unsolvable(MFError):
    """An obstruction could not be killed: the object is not spherical."""


class UnsupportedSuperpotential(MFError):
    pass
