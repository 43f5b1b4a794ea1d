"""Exception hierarchy for gatekeeping inputs and execution.

Every validation failure raises a distinct subclass of :class:`GatekeepError`
so callers (and the CLI) can map failures to diagnostics without string
matching.
"""


class GatekeepError(Exception):
    """Base class for all errors raised by this package."""


class NonZeroDiagonalError(GatekeepError):
    """A transition matrix has a nonzero diagonal entry."""


class RowSumError(GatekeepError):
    """A transition matrix row (or coefficient row) does not sum to one."""


class EntryRangeError(GatekeepError):
    """A matrix or coefficient entry lies outside [0, 1]."""


class LevelSumError(GatekeepError):
    """Initial family levels do not sum to the global level."""


class DimensionError(GatekeepError):
    """Mismatched dimensions between families, matrices, or p-values."""


class EmptyFamilyError(GatekeepError):
    """A family declares no hypotheses."""


class LabelError(GatekeepError):
    """Duplicate or unknown hypothesis/family labels."""


class PValueRangeError(GatekeepError):
    """A p-value lies outside [0, 1]."""


class ModelParameterError(GatekeepError):
    """An invalid simulation model parameter (e.g. correlation outside [0, 1))."""


class ConfigError(GatekeepError):
    """A configuration file is structurally invalid."""
