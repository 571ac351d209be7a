"""Exception hierarchy shared by every rrt-lab module.

Each error carries the process exit code the CLI reports for it. Tolerance
failures are not errors: they show up as ``passed=False`` in a summary.
"""


class RrtLabError(Exception):
    """Base class for all rrt-lab failures."""

    exit_code = 2

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigurationError(RrtLabError):
    """Invalid model, increment, edge-length or experiment parameters."""


class DomainError(RrtLabError, ValueError):
    """An operation was called outside its precondition."""


class ResourceError(RrtLabError):
    """A request exceeds a configured computational cap."""


class UsageError(RrtLabError):
    """Bad command-line usage, e.g. an unknown experiment name."""


class OutputError(RrtLabError):
    """Result files could not be written."""
