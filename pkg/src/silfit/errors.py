"""Exception types raised across the library.

Everything derives from SilfitError so callers can catch the library's
failures with a single except clause; the CLI maps subtrees of this
hierarchy onto distinct exit codes.
"""


class SilfitError(Exception):
    """Base class for all library-specific errors."""


class DegenerateInput(SilfitError):
    """A numeric input has no valid interpretation (zero or parallel vectors)."""


class BehindCamera(SilfitError):
    """A point lies at or behind the near plane and cannot be projected."""


class ParseError(SilfitError):
    """A file could not be parsed.

    Carries the 1-based line number when one is known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyMesh(SilfitError):
    """No valid triangle survived loading."""


class NothingVisible(SilfitError):
    """Every triangle was dropped by the near-plane test; the pose is out of frustum."""


class StaleTape(SilfitError):
    """A gradient tape was replayed against a mesh it was not recorded for."""


class DimensionMismatch(SilfitError):
    """Two images or arrays that must share a shape do not."""


class EmptyMask(SilfitError):
    """An operation that needs a nonempty mask support received an empty one."""


class ZeroReference(SilfitError):
    """A relative metric was asked to normalize by a zero reference quantity."""


class EmptyInput(SilfitError):
    """An aggregate was requested over zero items."""


class VanishedGradient(SilfitError):
    """The objective gradient is numerically zero at the starting pose."""


class InvalidSize(SilfitError):
    """A kernel size is not an odd integer >= 3."""
