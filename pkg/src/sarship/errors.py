"""Exception types raised across the package."""


class InvalidBoxError(ValueError):
    """An oriented box with non-positive sides, bad angle or bad score."""


class ShapeError(ValueError):
    """Array arguments whose shapes do not agree."""


class FormatError(ValueError):
    """A detection or grid file that cannot be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


class InvariantError(RuntimeError):
    """An internal consistency check failed."""
