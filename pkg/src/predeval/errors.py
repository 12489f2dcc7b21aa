"""Exception hierarchy. Each error carries the CLI exit code it maps to."""


class PredevalError(Exception):
    exit_code = 2


class DataError(PredevalError, ValueError):
    """Malformed, inconsistent or insufficient input data."""

    exit_code = 2


class ZeroActualError(DataError):
    """A relative-error statistic was asked to divide by a non-positive actual."""


class MismatchError(DataError):
    """Runs or baselines that should share an evaluation set do not."""


class FoldError(DataError):
    """A predictor could not be fitted on one validation fold."""

    def __init__(self, fold, cause):
        super().__init__(f"fit failed on fold {fold}: {cause}")
        self.fold = fold
        self.cause = cause


class DegenerateError(PredevalError, ValueError):
    """A statistic is undefined, e.g. a baseline with zero spread."""

    exit_code = 3


class CycleError(PredevalError):
    """Strict preferences contain a cycle."""

    exit_code = 4

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("preference cycle detected: " + " -> ".join(map(str, self.cycle)))
