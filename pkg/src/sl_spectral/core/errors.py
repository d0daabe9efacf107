"""Exception hierarchy shared by the spectral services."""


class SpectralError(Exception):
    """Base class for every error raised by the toolkit."""


# Expressions

class ExprError(SpectralError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, position: int, expected: str, source: str = ""):
        self.position = position
        self.expected = expected
        self.source = source
        super().__init__(f"syntax error at byte {position}: expected {expected}")


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, position: int):
        self.name = name
        self.position = position
        super().__init__(f"unknown identifier '{name}' at byte {position}")


class SlotError(ExprError):
    """A symbol appears in a slot where it is not allowed."""


class IndicatorRangeError(ExprError):
    pass


class EvaluationError(ExprError):
    pass


# Problems and integration

class ProblemError(SpectralError):
    pass


class TrivialWeightError(ProblemError):
    pass


class CoefficientError(ProblemError):
    pass


class IntegrationError(SpectralError):
    pass


class StepSizeUnderflowError(IntegrationError):
    def __init__(self, x: float, message: str = ""):
        self.x = x
        super().__init__(f"step size underflow at x = {x!r}" + (f": {message}" if message else ""))


class QuadratureError(IntegrationError):
    pass


# Pairs and characteristic functions

class PairError(SpectralError):
    pass


class NonConvergentLimitError(PairError):
    def __init__(self, quantity: str, samples: list):
        self.quantity = quantity
        self.samples = samples
        super().__init__(f"limit of {quantity} did not stabilize along the ladder: {samples}")


class CharacteristicError(SpectralError):
    pass


class PoleHitError(CharacteristicError):
    pass


# Spectrum

class SpectrumError(SpectralError):
    pass


class CountMismatchError(SpectrumError):
    def __init__(self, scan_count: int, contour_count: float):
        self.scan_count = scan_count
        self.contour_count = contour_count
        super().__init__(
            f"scan found {scan_count} eigenvalues but the argument principle counts {contour_count:.3f}"
        )


class NonSimpleZeroError(SpectrumError):
    pass


class NevanlinnaViolationError(SpectrumError):
    pass


class RealnessError(SpectrumError):
    pass


# Expansion and oracle

class ExpansionError(SpectralError):
    pass


class MissingTargetDataError(ExpansionError):
    pass


class OracleError(SpectralError):
    pass


class OracleScopeError(OracleError):
    pass


class DefectivePencilError(OracleError):
    pass


class ProblemFileError(SpectralError):
    pass
