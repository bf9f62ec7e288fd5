"""Exception hierarchy shared by every engine in the package."""


class MetagameError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(MetagameError, ValueError):
    """Raised for malformed inputs (dimension mismatch, player not in coalition, ...)."""


class CapacityError(MetagameError):
    """Raised when a game is too large for exhaustive enumeration.

    Use the estimators in :mod:`metagame.approx` instead.
    """


class UnsupportedCapabilityError(MetagameError):
    """Raised when a model lacks a capability a method needs (e.g. derivatives)."""


class EstimationError(MetagameError):
    """Raised when a sampling estimator cannot produce an estimate (e.g. singular system)."""


class MissingCoalitionError(MetagameError, KeyError):
    """Raised when an external attribution table lacks a required coalition."""

    def __str__(self):
        return str(self.args[0]) if self.args else "missing coalition"


class GameFileError(MetagameError, ValueError):
    """Raised when a game document cannot be parsed."""
