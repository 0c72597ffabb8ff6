"""Exception types shared across the package."""


class CnnLdpError(Exception):
    """Base class for all package errors."""


class ConfigError(CnnLdpError, ValueError):
    """A configuration cannot be satisfied."""


class DomainError(CnnLdpError, ValueError):
    """A numeric argument lies outside the function's domain."""


class ShapeError(CnnLdpError, ValueError):
    """Tensor dimensions do not match what a layer or model expects."""


class NonFiniteError(CnnLdpError, ArithmeticError):
    """A NaN or infinite value appeared during training."""


class NonTerminationError(CnnLdpError, RuntimeError):
    """Slot negotiation exceeded its round budget."""


class InactiveLinkError(CnnLdpError, ValueError):
    """An SINR was requested for a link that is not transmitting."""


class SizeError(CnnLdpError, ValueError):
    """Input too large for an exhaustive routine."""


class InvariantViolation(CnnLdpError, RuntimeError):
    """A post-run safety check found a broken invariant."""
