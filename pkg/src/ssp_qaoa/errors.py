"""Exception hierarchy shared by all modules."""


class SspError(Exception):
    """Base class for all package errors."""


class ConfigError(SspError, ValueError):
    pass


class FormatError(SspError, ValueError):
    """A file could not be parsed. Carries line/field context in the message."""


class ValidationError(SspError, ValueError):
    """An object violates a documented invariant."""


class UnknownIdError(SspError, KeyError):
    pass


class DegenerateInstanceError(SspError, ValueError):
    pass


class DimensionError(SspError, ValueError):
    pass


class ResourceError(SspError, RuntimeError):
    """A problem is too large for a dense simulator or exhaustive oracle."""


class UndefinedRatioError(SspError, ValueError):
    pass
