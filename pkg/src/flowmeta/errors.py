"""Exception types raised across the package."""


class FlowMetaError(Exception):
    """Base class for package errors."""


class ConfigError(FlowMetaError, ValueError):
    """Invalid experiment or policy configuration."""


class DomainError(FlowMetaError, ValueError):
    """A level or value outside the domain an operation is defined on."""


class UsageError(FlowMetaError, RuntimeError):
    """An operation was called in a state that does not allow it."""


class ContractViolation(FlowMetaError, RuntimeError):
    """A pluggable policy broke the contract it was given."""


class EmptyCoverageError(FlowMetaError, RuntimeError):
    """Mining produced no covered level bins."""
