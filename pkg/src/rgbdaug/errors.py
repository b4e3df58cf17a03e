"""Exception types shared across the package."""


class RgbdAugError(Exception):
    """Base class for all package errors."""


class ConfigError(RgbdAugError):
    """Invalid configuration value or unknown config key."""


class MeshParseError(RgbdAugError):
    """Malformed mesh file; carries the offending line number when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where = f" ({where})"
        super().__init__(f"{message}{where}")


class DatasetError(RgbdAugError):
    """Missing, mismatched, or unreadable dataset files."""


class EmptyMaskError(RgbdAugError):
    """Metric computation requested on a pair with zero valid pixels."""
