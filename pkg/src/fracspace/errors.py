"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the CLI can emit a
JSON body and pick an exit status without string matching.
"""


class FracspaceError(Exception):
    code = "error"
    exit_status = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        body = {"error": self.code, "message": str(self)}
        body.update(self.details)
        return body


class MalformedInputError(FracspaceError, ValueError):
    code = "malformed_input"


class DomainError(FracspaceError, ValueError):
    code = "domain"


class FormatError(FracspaceError, ValueError):
    code = "format"


class ConfigurationError(FracspaceError, ValueError):
    code = "configuration"


class PreconditionError(FracspaceError, ValueError):
    code = "precondition"


class UnsupportedOperatorError(FracspaceError, TypeError):
    code = "unsupported_operator"


class NumericalError(FracspaceError, ArithmeticError):
    code = "numerical"
    exit_status = 2


class StepSizeError(NumericalError):
    code = "step_size"


class TruncationError(NumericalError):
    code = "truncation"


class GenerationError(DomainError):
    code = "generation"
