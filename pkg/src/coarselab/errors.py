"""Exception hierarchy shared across the package.

Each class carries the process exit code the CLI maps it to, so library
errors translate into distinct shell-visible outcomes.
"""


class CoarseLabError(Exception):
    exit_code = 1


class InputError(CoarseLabError):
    """Malformed input: bad point ids, broken files, out-of-range parameters."""

    exit_code = 2


class CapacityError(CoarseLabError):
    """An exact-mode request exceeded a configured enumeration cap."""

    exit_code = 3


class NoWitnessError(CoarseLabError):
    """A search that the caller required to succeed came up empty."""

    exit_code = 4


class NotAchievedError(CoarseLabError):
    """A localization target was not reached at the requested scale."""

    exit_code = 4

    def __init__(self, message, best_ratio=None):
        super().__init__(message)
        self.best_ratio = best_ratio
