class FuzzyCoarseError(Exception):
    pass


class DomainError(FuzzyCoarseError, ValueError):
    """A parameter lies outside the domain an operation is defined on."""


class ConvergenceError(FuzzyCoarseError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotPSDError(FuzzyCoarseError, ValueError):
    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class CertificateError(FuzzyCoarseError):
    """Input data failed a claim that an operation requires to hold."""

    def __init__(self, message, claim=None):
        super().__init__(message)
        self.claim = claim


class FormatError(DomainError):
    """Malformed input file; ``where`` names the offending field or line."""

    def __init__(self, message, where=None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where
