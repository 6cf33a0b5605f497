"""Exception types shared across the package.

The CLI maps ValidationError to exit code 2 and InfeasibleError to exit
code 3; everything else is a genuine bug.
"""


class WacriskError(Exception):
    """Base class for all package errors."""


class ValidationError(WacriskError, ValueError):
    """Malformed or inconsistent input (bad network data, non-commuting
    gains, disconnected graph, dimension mismatches)."""


class InfeasibleError(WacriskError, RuntimeError):
    """Structurally valid input for which the requested quantity does not
    exist (unstable configuration, empty feasible gain set, divergent
    spectral integral on the stability boundary)."""
