"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LFSelectError(Exception):
    """Base class for all package errors."""


# series-core
class MalformedRow(LFSelectError, ValueError):
    pass


class NonUniformGrid(LFSelectError, ValueError):
    pass


class EmptyFile(LFSelectError, ValueError):
    pass


class Upsample(LFSelectError, ValueError):
    pass


class NonIntegralRatio(LFSelectError, ValueError):
    pass


class GridMismatch(LFSelectError, ValueError):
    pass


class TooShort(LFSelectError, ValueError):
    pass


# meta-features
class DegenerateSeries(LFSelectError, ValueError):
    """Raised when a statistic needs a non-constant series."""


class LagOutOfRange(LFSelectError, ValueError):
    pass


# model zoo
class Infeasible(LFSelectError, RuntimeError):
    pass


class NonConvergence(LFSelectError, RuntimeError):
    pass


class LengthMismatch(LFSelectError, ValueError):
    pass


# labeling / evaluation
class AllInfeasible(LFSelectError, RuntimeError):
    pass


class TooFew(LFSelectError, ValueError):
    pass


# metalearners / calibration
class SingleClass(LFSelectError, ValueError):
    pass


class TooFewSamples(LFSelectError, ValueError):
    pass


# taskgen / store / config
class EmptySpec(LFSelectError, ValueError):
    pass


class StoreVersionError(LFSelectError, ValueError):
    pass


class ConfigError(LFSelectError, ValueError):
    """Bad configuration; the message names the offending key."""
