"""Exception types shared across the package.

Validation problems (bad arguments, malformed configs) raise ValueError or
UsageError; everything below signals a *numerical* failure and maps to exit
code 3 in the CLI.
"""


class LangdiffError(Exception):
    """Base class for numerical failures."""


class NonConvergence(LangdiffError):
    """A quadrature or iteration did not reach its tolerance."""


class DomainError(LangdiffError):
    """Parameter outside the mathematical domain of an operation."""


class OutOfRange(LangdiffError):
    """Energy coordinate outside the edge it was evaluated on."""


class DegeneratePotential(LangdiffError):
    """Potential fails the nondegeneracy (Morse) requirement."""


class TruncationError(LangdiffError):
    """Requested basis cannot represent the potential exactly."""


class SolverStall(LangdiffError):
    """Linear solve failed to reach the required residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InconsistentFormulas(LangdiffError):
    """The two diffusivity formulas disagree; basis is under-resolved."""


class EigSolverFailure(LangdiffError):
    """Eigenvalue iteration did not converge."""


class NotDiffusive(LangdiffError):
    """Trajectory statistics show no stable diffusive regime."""


class UsageError(ValueError):
    """Bad command-line or config input (CLI exit code 2)."""
