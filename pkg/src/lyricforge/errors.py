"""Exception hierarchy shared by every lyricforge module."""


class LyricforgeError(Exception):
    """Base class for domain errors; the CLI maps these to exit status 1."""


class InvalidInputError(LyricforgeError, ValueError):
    """An argument violates an operation's precondition."""
