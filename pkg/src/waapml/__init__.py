"""Nodal DGTD Maxwell solver on tetrahedra with a stretched-coordinate PML.

Submodules: ``reference`` (basis, nodes, quadrature), ``mesh``, ``pml``,
``solver`` and ``harness`` (reflection benchmarks, reports, CLI).
"""

from .errors import (CoefficientError, ConfigurationError, ContractError, GeometryError,
                     InstabilityError, MeshFormatError, WaapmlError)

__all__ = ["CoefficientError", "ConfigurationError", "ContractError", "GeometryError",
           "InstabilityError", "MeshFormatError", "WaapmlError"]
