"""Exception hierarchy shared by every module.

CLI exit codes: usage/configuration errors map to 1, data and format
errors to 2, numerical failures to 3.
"""


class PlainScanError(Exception):
    exit_code = 1


class ConfigError(PlainScanError):
    """Invalid configuration value (bad extent, indivisible resolution, ...)."""
    exit_code = 1


class ShapeError(PlainScanError):
    """Operand shapes violate an operation's contract."""
    exit_code = 2


class FormatError(PlainScanError):
    """Malformed file content (image headers, weight containers)."""
    exit_code = 2


class ManifestError(PlainScanError):
    """Weight manifest does not match the model's parameter table."""
    exit_code = 2


class NumericalError(PlainScanError):
    """NaN/Inf or domain violation during computation."""
    exit_code = 3
