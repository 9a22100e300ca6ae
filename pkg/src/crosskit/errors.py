"""Exception and warning types raised across crosskit."""


class CrosskitError(Exception):
    """Base class for all crosskit errors."""


class NumericalError(CrosskitError):
    """Base class for failures of a numerical procedure."""


class ResonancePole(NumericalError):
    """A perturbative denominator is too close to zero."""


class LabelAmbiguity(NumericalError):
    """Dressed eigenvectors are too hybridized to assign bare-state labels."""


class StepTooLarge(NumericalError):
    """Integrator step exceeds the stability/accuracy bound."""


class NoOscillation(NumericalError):
    """No oscillation found in a trace.

    The degenerate fit (frequency 0, infinite confidence interval) is kept
    on ``result`` so callers can still record the point.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NonConvergence(NumericalError):
    """Least-squares fit did not converge."""


class RegimeNotFound(NumericalError):
    """No amplitude prefix passes the linearity threshold."""


class NoPlateau(NumericalError):
    """Too few points form a saturation plateau."""


class DegenerateTheory(NumericalError):
    """Theory values are all zero, so a scale factor is undefined."""


class CurveRejected(NumericalError):
    """An amplitude sweep produced too few valid J_eff points."""


class ConfigError(CrosskitError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Malformed configuration text."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingKey(ConfigError):
    """Required configuration keys are absent."""


class SchemaError(CrosskitError):
    """Input table lacks a required column or has malformed rows."""


class MethodMismatchWarning(UserWarning):
    """Closed-form and matrix-element CR coefficients disagree by more than 2x."""
