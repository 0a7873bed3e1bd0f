"""Exception types shared across the package."""


class MembraneForgeError(Exception):
    """Base class for all package errors."""


class MismatchedLengths(MembraneForgeError):
    """Configuration and shape lists have different lengths."""


class RootFindFailure(MembraneForgeError):
    """No radial root found while discretizing an implicit curve."""


class OutOfDomain(MembraneForgeError):
    """Evaluation point lies outside the computational box."""


class SingularGram(MembraneForgeError):
    """Rigid-mode Gram matrix is numerically singular."""


class Infeasible(MembraneForgeError):
    """Particle configuration has non-positive clearance."""


class SolverDivergence(MembraneForgeError):
    """Iterative solver exceeded its iteration cap."""


class DegenerateJacobian(MembraneForgeError):
    """Diffeomorphism Jacobian is not positive definite on the quadrature."""


class SingularMatrix(MembraneForgeError):
    """Matrix family is singular at the evaluation point."""


class SupportOverlap(MembraneForgeError):
    """Velocity cutoff supports of two active particles overlap."""


class ValidationError(MembraneForgeError):
    """Scenario document failed validation."""


class ParseError(MembraneForgeError):
    """Scenario document is not well-formed."""
