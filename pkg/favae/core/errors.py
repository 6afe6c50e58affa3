class FavaeError(Exception):
    """Base class for every error raised by the library."""

    exit_code = 1


class ConfigError(FavaeError):
    exit_code = 1


class DimensionError(FavaeError, ValueError):
    exit_code = 1


class ContractError(FavaeError):
    exit_code = 1


class NumericError(FavaeError, ArithmeticError):
    exit_code = 2


class FormatError(FavaeError, OSError):
    exit_code = 3
