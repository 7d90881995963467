"""Exception taxonomy.

The CLI maps the four base classes onto distinct exit codes:
ConfigError -> 1, OSError -> 2, DataError -> 3, NumericError -> 4.
"""


class AfdetectError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(AfdetectError):
    """Invalid configuration or parameterization."""


class BadKError(ConfigError):
    """Neighbor count outside [1, number of stored rows]."""


class BadSubspaceError(ConfigError):
    """Subspace dimension or learner count out of range."""


class DataError(AfdetectError):
    """Input data violates a contract (format, labels, counts)."""


class NumericError(AfdetectError):
    """Numeric precondition violated (signal shape, band limits, degeneracy)."""


# -- data errors --------------------------------------------------------------

class MalformedRowError(DataError):
    """CSV row with the wrong column count or an unusable header."""


class BadLabelError(DataError):
    """Segment label outside {AF, NAF}."""


class DuplicateSegmentError(DataError):
    """Repeated (subject_id, segment_id) pair while merging."""


class EmptyDatasetError(DataError):
    """No segments left to work with."""


class DegenerateClassError(DataError):
    """A class has too few members to split."""


class LengthMismatchError(DataError):
    """Paired sequences differ in length."""


class TooFewRowsError(DataError):
    """Not enough rows to fit (e.g. a standardizer needs >= 2)."""


class TooFewPerClassError(DataError):
    """A class has fewer members than the requested fold count."""


class EmptyInputError(DataError):
    """An operation received zero rows."""


class SingleClassError(DataError):
    """Both classes are required but only one is present."""


# -- numeric errors ------------------------------------------------------------

class TooShortError(NumericError):
    """Signal shorter than the operation's minimum length."""


class BadCutoffError(NumericError):
    """Filter cutoff outside (0, fs/2)."""


class BadBandError(NumericError):
    """Band edges violate 0 <= lo < hi <= fs/2."""


class DegenerateSignalError(NumericError):
    """Constant signal where variation is required."""


class NegativeThresholdError(NumericError):
    """Shrinkage threshold must be >= 0."""


class UndefinedMetricError(NumericError):
    """Metric denominator is zero; nothing to report."""


# -- warnings ------------------------------------------------------------------

class NoConvergenceWarning(UserWarning):
    """Optimizer hit its work budget; best iterate returned."""
