"""Exception hierarchy shared by the library and the CLI."""


class NsrpsError(Exception):
    """Base class for all errors raised by this package."""


class UnknownTokenError(NsrpsError, KeyError):
    """A token is not a label of the fixed alphabet it is parsed against."""

    def __str__(self):
        return Exception.__str__(self)


class InvalidRuleError(NsrpsError, ValueError):
    """A substitution rule does not match the alphabet it is applied over."""


class NoPairError(NsrpsError, ValueError):
    """A pair was requested from a sequence shorter than two symbols."""


class InsufficientDataError(NsrpsError, ValueError):
    """Too few symbols for the requested block length."""


class AlphabetMismatchError(NsrpsError, ValueError):
    """Two sequences that must share an alphabet do not."""


class DominationError(NsrpsError, ArithmeticError):
    """A block with positive frequency under mu has zero probability under nu.

    ``block`` is the offending (context..., symbol) tuple. ``step`` is filled
    in by the estimators when the failure happens after some substitutions.
    """

    def __init__(self, message, block=None, step=None):
        super().__init__(message)
        self.block = block
        self.step = step

    def __str__(self):
        msg = super().__str__()
        if self.step is not None:
            msg = f"step {self.step}: {msg}"
        return msg


class ModelError(NsrpsError, ValueError):
    """A Markov model is malformed or its chain has no unique stationary law."""
