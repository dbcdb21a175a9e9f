"""Exception types shared across the package."""


class AnaproxError(Exception):
    """Base class for all package errors."""


class ParseError(AnaproxError):
    """Malformed expression text; carries the offending position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvaluationDomainError(AnaproxError):
    """Evaluation left the mathematical domain (log of nonpositive, 0^negative, ...)."""


class OrderCapError(AnaproxError):
    """Requested jet order exceeds the configured cap."""


class JunctionMismatchError(AnaproxError):
    """Piecewise function jets disagree across a breakpoint beyond tolerance."""


class QuadratureError(AnaproxError):
    """Panel-doubling disagreement above tolerance, or invalid quadrature setup."""


class LambdaSearchError(AnaproxError):
    """Mollification sharpness search exhausted its ladder without success."""


class GlueError(AnaproxError):
    """A glueing hypothesis or certificate check failed; carries the stage index."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class CertificateError(AnaproxError):
    """A pipeline certificate inequality failed; names the violated inequality."""


class ConfigError(AnaproxError):
    """Invalid run configuration; names the offending field."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
