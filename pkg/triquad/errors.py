class TriquadError(Exception):
    """Base class for every error raised by the package."""


class PreconditionError(TriquadError, ValueError):
    """Bad input: not a valid prime pair, out-of-range bound, unknown option."""


class InconsistencyError(TriquadError, RuntimeError):
    """A computed object contradicts a theorem, a lemma or an independent oracle."""


class InconclusiveError(TriquadError):
    """Interval certification could not decide within the precision ladder."""
