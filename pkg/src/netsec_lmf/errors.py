"""
Exception types raised across the package.
"""


class NetsecError(Exception):
    """Base class for all netsec_lmf errors."""


class ConfigError(NetsecError, ValueError):
    """Invalid experiment configuration (bad key, value or syntax)."""


class DomainError(NetsecError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RegimeError(NetsecError, ValueError):
    """Operation called outside the parameter regime it is defined for."""


class ConvergenceError(NetsecError, RuntimeError):
    """A numeric solver failed to reach its tolerance."""


class TreeTooLargeError(NetsecError, ValueError):
    """Galton-Watson tree exceeded the configured node cap."""


class BudgetExceededError(NetsecError, ValueError):
    """Exact enumeration would exceed its outcome budget."""
