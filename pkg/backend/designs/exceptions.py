"""Errors raised by the design library.

Two families: ``DesignInputError`` for problems with what the caller
asked for (CLI exit code 2) and ``NumericalFailure`` for computations that
did not finish cleanly (CLI exit code 3).
"""


class DesignError(Exception):
    exit_code = 1


class DesignInputError(DesignError):
    exit_code = 2


class NumericalFailure(DesignError):
    exit_code = 3


class InvalidDesign(DesignInputError):
    pass


class InfeasibleDesign(DesignInputError):
    "The contrasts of interest are not estimable under the design."
    pass


class InvalidControlCount(DesignInputError):
    def __init__(self, v, g):
        super().__init__(f'number of controls must satisfy 0 < g < v/2, got v={v}, g={g}')
        self.v = v
        self.g = g


class InvalidContrasts(DesignInputError):
    pass


class InvalidP(DesignInputError):
    def __init__(self, p):
        super().__init__(f'criterion exponent must satisfy p <= 0, got p={p}')
        self.p = p


class UnsupportedCriterion(DesignInputError):
    pass


class SingularWeights(DesignInputError):
    pass


class ZeroTreatmentWeight(DesignInputError):
    def __init__(self, treatments):
        labels = ', '.join(str(u + 1) for u in treatments)
        super().__init__(f'treatment proportions are zero for treatment(s) {labels}')
        self.treatments = list(treatments)


class NonUniformAlpha(DesignInputError):
    pass


class DegreeTooHigh(DesignInputError):
    pass


class NonUnitColumn(DesignInputError):
    pass


class EnumerationTooLarge(DesignInputError):
    def __init__(self, count, cap, hint=''):
        message = f'enumeration would visit {count} designs, cap is {cap}'
        if hint:
            message = f'{message}; {hint}'
        super().__init__(message)
        self.count = count
        self.cap = cap


class SpecError(DesignInputError):
    pass


class NonConvergence(NumericalFailure):
    def __init__(self, message, best=None, value=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.value = value
        self.iterations = iterations


class LpInfeasible(NumericalFailure):
    pass


class LpUnbounded(NumericalFailure):
    pass


class LpNumericalError(NumericalFailure):
    pass
