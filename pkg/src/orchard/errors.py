"""Exception hierarchy shared across the package."""


class OrchardError(Exception):
    pass


class ParameterError(OrchardError, ValueError):
    """An invalid parameter value. ``field`` names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class AssemblyError(OrchardError):
    pass


class BuildError(OrchardError):
    pass


class HDRFormatError(OrchardError):
    """Malformed Radiance file; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class RecipeError(OrchardError, ValueError):
    def __init__(self, message: str, field: str | None = None,
                 line: int | None = None, column: int | None = None):
        self.field = field
        self.line = line
        self.column = column
        super().__init__(message)
