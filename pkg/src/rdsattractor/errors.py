"""Exception hierarchy. Every error carries a short machine-readable code."""


class RDSError(Exception):
    code = "rds"


class ConfigError(RDSError, ValueError):
    code = "config"


class AlignmentError(RDSError, ValueError):
    code = "alignment"


class WindowExhaustedError(RDSError):
    code = "window-exhausted"


class DivergenceError(RDSError, ArithmeticError):
    code = "divergence"


class EmptyInputError(RDSError, ValueError):
    code = "empty-input"


class DomainError(RDSError, ValueError):
    code = "domain"


class EstimationError(RDSError):
    code = "estimation"
