"""
Exception hierarchy for medmech.

CLI exit codes are derived from these classes (see main.py):
ConfigError -> 2, other MediatorError -> 3.
"""


class MediatorError(Exception):
    """Root of every error raised by the package."""


class ConfigError(MediatorError, ValueError):
    pass


class ExpressionSyntaxError(ConfigError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownIdentifierError(ExpressionSyntaxError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unknown identifier {name!r}, only 'q' is allowed", position)
        self.name = name


class ValidationError(ConfigError):
    def __init__(self, report):
        super().__init__(f"instance violates model assumptions: {report.summary()}")
        self.report = report


class EvaluationError(MediatorError, ArithmeticError):
    pass


class DomainError(MediatorError, ValueError):
    pass


class UndefinedBeliefError(MediatorError):
    pass


class EnvelopeError(MediatorError, ValueError):
    pass


class OracleError(MediatorError):
    pass
