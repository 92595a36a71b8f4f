"""Exception types shared across the toolkit.

Exit-code mapping used by the CLI: configuration problems -> 2,
certificate failures -> 3, numerical aborts -> 4.
"""


class CQSimError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(CQSimError):
    """Operator or grid dimensions do not match."""


class HermiticityError(CQSimError):
    """A matrix required to be Hermitian is not, beyond tolerance."""


class KernelConsistencyError(CQSimError):
    """Kernel inputs violate their symmetry/retardation contracts."""


class PositivityError(CQSimError):
    """Inputs to a positivity certificate are structurally invalid."""


class UnsupportedDirectionError(PositivityError):
    """A hybrid coupling points along a direction with zero classical diffusion."""

    def __init__(self, direction):
        self.direction = direction
        super().__init__(
            f"unsupported direction: hybrid vector d_{direction} is nonzero "
            f"while the matching diffusion constant vanishes"
        )


class ConfigError(CQSimError):
    """Invalid run configuration. Carries the full list of violations."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CFLError(ConfigError):
    """Requested time step violates the stability bound."""


class NumericalAbortError(CQSimError):
    """A runtime monitor tripped (trace drift, boundary mass, lost positivity)."""


class BoundaryLeakError(NumericalAbortError):
    """Phase-space mass reached the grid boundary."""
