"""Exception hierarchy shared by all modules."""


class CptGameError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CptGameError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NotPositiveDefinite(CptGameError):
    """A matrix required to be positive definite is not."""


class NotHurwitz(CptGameError):
    """A matrix required to be Hurwitz has an eigenvalue with real part >= -tol."""

    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = spectrum


class QuadratureError(CptGameError):
    """Adaptive quadrature did not reach its accuracy target."""


class NotScenario1(CptGameError):
    """R^-1 - Pi^-1 is not positive definite."""


class SquareRootDomain(CptGameError):
    """An operand of the fixed-point map is not positive definite."""

    def __init__(self, message, condition=None, margin=None):
        super().__init__(message)
        self.condition = condition
        self.margin = margin


class GuardViolated(CptGameError):
    """The bound pair (d, D) does not satisfy the well-definedness guards."""


class NoConvergence(CptGameError):
    """An iterative solver exhausted its iteration budget."""


class PairingInfeasible(CptGameError):
    """The stacked construction found no admissible eigenvalue pairing."""


class ResidualTooLarge(CptGameError):
    """A candidate solution does not satisfy the coupled Riccati equations."""


class InconsistentScenario3(CptGameError):
    """The balance condition required when R = Pi does not hold."""


class InnerSolveFailed(CptGameError):
    """No admissible equilibrium for the Psi values at a given outer iterate."""


class NoBracket(CptGameError):
    """The scalar fixed-point function never changes sign on the scan."""

    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = samples or []


class DynamicsFormMismatch(CptGameError):
    """A check was applied to a trajectory generated under another dynamics form."""


class ConfigError(CptGameError):
    """Base for configuration problems."""


class ParseError(ConfigError):
    """The configuration file is syntactically malformed."""


class ValidationError(ConfigError):
    """The configuration parsed but holds invalid values."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
