"""Exception hierarchy shared by every module."""


class TruthDiscoveryError(Exception):
    """Base class for all package errors."""


class DuplicateClaim(TruthDiscoveryError):
    pass


class EmptyDataset(TruthDiscoveryError):
    pass


class EmptyGoldStandard(TruthDiscoveryError):
    pass


class ZeroNorm(TruthDiscoveryError):
    """A trust vector with zero norm was passed to the convergence test."""


class NumericFailure(TruthDiscoveryError):
    """A score became NaN or infinite."""


class SourceCountExceeded(NumericFailure):
    """Too many sources for direct-space likelihood products."""


class RequiresReformat(TruthDiscoveryError):
    """Input must be split into atomic single-valued claims first."""


class ParseError(TruthDiscoveryError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class SpecError(TruthDiscoveryError):
    pass


class IoError(TruthDiscoveryError, OSError):
    pass
