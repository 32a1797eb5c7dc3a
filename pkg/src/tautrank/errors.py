"""Exception types shared across the package."""


class TautrankError(Exception):
    """Base class for every error raised deliberately by this package."""


class ContractError(TautrankError, ValueError):
    """A precondition of an operation was violated by the caller."""


class ParseError(ContractError):
    """Textual input (polynomial, graph, model name) could not be parsed."""

    def __init__(self, message, token=None):
        super().__init__(message)
        self.token = token


class CapabilityError(TautrankError):
    """The requested model/degree combination is not supported."""


class ResourceError(TautrankError, RuntimeError):
    """A computation exceeded its size or step budget."""


class OracleInapplicable(ContractError):
    """A closed-form oracle was asked about an input outside its hypotheses."""
