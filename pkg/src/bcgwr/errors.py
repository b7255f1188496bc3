"""Exception types shared across the package.

Each carries the process exit code the command line maps it to.
"""


class BcgwrError(Exception):
    exit_code = 1


class ConfigurationError(BcgwrError, ValueError):
    exit_code = 2


class DataError(BcgwrError, ValueError):
    exit_code = 3


class NumericalError(BcgwrError, ArithmeticError):
    exit_code = 4
