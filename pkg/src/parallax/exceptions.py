class ParallaxError(Exception):
    """Base class for errors raised by this package."""


class InputError(ParallaxError, ValueError):
    """Malformed or inconsistent user input."""


class DegenerateEdgeError(InputError):
    """An edge whose endpoints coincide."""


class OracleError(ParallaxError):
    """The membership oracle misbehaved (protocol violation, nondeterminism, crash)."""


class PreconditionError(ParallaxError):
    """A documented precondition of an operation does not hold."""


class StructuralError(ParallaxError):
    """A complex or diagram violates a structural invariant."""
