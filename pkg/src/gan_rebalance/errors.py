"""Exception types shared across the package."""


class GanRebalanceError(Exception):
    """Base class for all package errors."""


class ShapeError(GanRebalanceError, ValueError):
    pass


class ContractError(GanRebalanceError, RuntimeError):
    pass


class TrainingError(GanRebalanceError, RuntimeError):
    """Raised when optimisation hits a non-finite value.

    ``where`` carries the location (layer index, epoch/batch indices) so the
    failure can be reproduced.
    """

    def __init__(self, message, **where):
        super().__init__(message)
        self.where = where


class DataError(GanRebalanceError, ValueError):
    pass


class ConfigError(GanRebalanceError, ValueError):
    pass
