"""
Exception hierarchy for JointPhaseSpace.

Every precondition failure raises one of these types so that the CLI can map
them onto its exit-code contract.
"""


class PhaseSpaceError(Exception):
    """Base class for all toolkit errors."""


class GridError(PhaseSpaceError, ValueError):
    """Invalid lattice parameters (odd or tiny n, non-positive spacing)."""


class GridMismatchError(GridError):
    """Operands live on different grids."""


class PositivityError(PhaseSpaceError, ValueError):
    """A Hermiticity, positivity or normalization invariant is broken."""


class TailMassError(PhaseSpaceError, ValueError):
    """A state or measure carries too much mass near the torus boundary."""

    def __init__(self, message: str, mass: float) -> None:
        super().__init__(message)
        self.mass = mass


class NotJointlyMeasurable(PhaseSpaceError):
    """Requested margin variances violate Var(rho) Var(nu) >= 1/4."""

    def __init__(self, var_q: float, var_p: float) -> None:
        self.var_q = var_q
        self.var_p = var_p
        self.deficit = 0.25 - var_q * var_p
        super().__init__(
            f"Var(rho)*Var(nu) = {var_q * var_p:.6g} < 1/4 "
            f"(deficit {self.deficit:.6g}); no joint observable has these margins"
        )


class ConfigError(PhaseSpaceError, ValueError):
    """Configuration could not be parsed; `field` is the dotted path at fault."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
