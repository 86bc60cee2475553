"""Exception hierarchy. CLI exit codes are attached to the base classes."""


class TbentError(Exception):
    exit_code = 1


class ConfigError(TbentError, ValueError):
    exit_code = 2


class NumericError(TbentError, ArithmeticError):
    exit_code = 3


class DataRangeError(TbentError, ValueError):
    exit_code = 4


class LabelCollisionError(TbentError, ValueError):
    """Two factors of a tensor product share a photon label."""


class DimensionError(TbentError, ValueError):
    pass


class UnresolvedDOFError(TbentError, ValueError):
    """A state still carries time-bin or path structure where a pure
    polarization register was required."""


class ArityError(TbentError, ValueError):
    pass


class OutOfModelError(ConfigError):
    """Mean pair number outside the perturbative regime (mu >= 1)."""


class UndefinedEstimateError(NumericError):
    pass


class FitError(NumericError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UnidentifiableError(NumericError):
    pass


class DegenerateDataError(NumericError):
    pass


class NoQPMSolutionError(NumericError):
    pass
