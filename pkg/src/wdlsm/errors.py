"""Exception hierarchy. Each class maps to a CLI exit code."""


class WDLSMError(Exception):
    exit_code = 1


class UsageError(WDLSMError, ValueError):
    """Invalid arguments or inconsistent inputs."""

    exit_code = 2


class DegenerateInputError(WDLSMError, ValueError):
    """Input data for which the requested quantity is undefined."""

    exit_code = 3


class ParseError(WDLSMError, ValueError):
    """Malformed input file."""

    exit_code = 3

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class NumericalError(WDLSMError, ArithmeticError):
    """Non-finite values encountered during sampling or simulation."""

    exit_code = 4
