"""Exception hierarchy shared by all modules."""


class WaapmlError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(WaapmlError, ValueError):
    """Unsupported or inconsistent configuration (order, strategy, geometry)."""


class GeometryError(WaapmlError, ValueError):
    """Invalid mesh: inverted elements, unmatched faces, hanging nodes."""


class MeshFormatError(WaapmlError, ValueError):
    """Malformed mesh file. Carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CoefficientError(WaapmlError, ValueError):
    """PML coefficients that would make the update ill-posed (a <= 0, kappa < 1)."""


class ContractError(WaapmlError, ValueError):
    """Array shape or operator/element mismatch at a module boundary."""


class InstabilityError(WaapmlError, RuntimeError):
    """Non-finite values detected after a time step."""

    def __init__(self, time, element):
        super().__init__(
            f"non-finite field values at t={time:.6e} s in element {element}")
        self.time = time
        self.element = element
