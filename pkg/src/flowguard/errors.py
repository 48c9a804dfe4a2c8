"""Exception hierarchy shared by every stage of the pipeline."""


class FlowguardError(Exception):
    """Base class for all errors raised by flowguard."""


class InvalidInputError(FlowguardError, ValueError):
    """Input data has the wrong shape, size or range."""


class InvalidParameterError(FlowguardError, ValueError):
    """A tuning parameter is outside its permitted range."""


class ParseError(FlowguardError):
    """A Netpbm file could not be decoded."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class InsufficientDataError(FlowguardError):
    """Too few flow vectors to set up a least-squares system."""


class DegenerateGeometryError(FlowguardError):
    """The flow field does not constrain the focus of expansion."""


class SceneExpiredError(FlowguardError):
    """The camera has reached or passed an obstacle."""
