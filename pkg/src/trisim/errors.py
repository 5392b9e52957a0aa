"""Exception hierarchy.

Every error raised by the toolkit carries a short machine-parsable
category that the CLI prints as ``error:<category>: <message>``.
"""

from __future__ import annotations


class TrisimError(Exception):
    """Base class; `category` is a stable one-word error class."""

    category = "internal"


class ConfigError(TrisimError):
    category = "config"


class GridError(TrisimError):
    category = "grid"


class FileFormatError(TrisimError):
    category = "io"


class OpticsError(TrisimError):
    category = "optics"


class PatternError(TrisimError):
    category = "pattern"


class SchemeError(TrisimError):
    category = "scheme"


class NoiseError(TrisimError):
    category = "noise"


class SolverError(TrisimError):
    category = "solver"


class GwfError(TrisimError):
    category = "gwf"


class PhantomError(TrisimError):
    category = "phantom"


class MetricsError(TrisimError):
    category = "metrics"
