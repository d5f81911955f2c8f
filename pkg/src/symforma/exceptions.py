"""Exception hierarchy shared across the package."""


class SymformaError(Exception):
    """Base class for all package errors."""


class ArgumentError(SymformaError, ValueError):
    """Malformed argument (wrong length, not a bijection, bad shape)."""


class CapacityError(SymformaError):
    """A brute-force routine was asked to exceed its size guard."""


class RepresentationError(SymformaError):
    """Matrices assigned to group elements do not form an orthogonal homomorphism."""


class SymmetryError(SymformaError):
    """A permutation is not an automorphism, or a configuration is not symmetric."""


class UnsupportedActionError(SymformaError):
    """The group action is not free, which the orbit machinery requires."""


class AssumptionError(SymformaError):
    """A vertex orbit induces a disconnected subgraph."""


class ScenarioError(SymformaError):
    """Scenario document fails schema or semantic validation."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class IntegrationError(SymformaError):
    """Numerical integration produced a non-finite state."""

    def __init__(self, message, step):
        self.step = step
        super().__init__(f"{message} (step {step})")
