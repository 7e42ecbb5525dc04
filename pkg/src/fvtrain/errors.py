"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid sizes, hyperparameters or empty inputs."""


class ShapeError(ValueError):
    """Array or state dimensions do not line up."""


class DomainError(ValueError):
    """A scalar argument lies outside its admissible range."""


class FormatError(ValueError):
    """Malformed IDX container."""


class DataError(OSError):
    """Dataset files are missing or unreadable."""


class NumericDivergenceError(ArithmeticError):
    """Loss or parameters became non-finite during training."""

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class CalibrationError(RuntimeError):
    """No seed in the searched range met the fidelity target."""

    def __init__(self, message, best_seed=None, best_fidelity=None):
        super().__init__(message)
        self.best_seed = best_seed
        self.best_fidelity = best_fidelity
