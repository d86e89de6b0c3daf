class DomainError(ValueError):
    """An argument lies outside the domain of the model."""


class UnsupportedError(NotImplementedError):
    """The requested analysis is only defined for a narrower class of inputs."""


class NumericError(ArithmeticError):
    """Quadrature or search failed to converge; carries the best estimate."""

    def __init__(self, message: str, best_estimate: float):
        super().__init__(f"{message} (best estimate {best_estimate!r})")
        self.best_estimate = best_estimate


class PreconditionError(ValueError):
    """A caller-supplied price is not an equilibrium price where one is required."""


class ConsistencyError(RuntimeError):
    """An internal certificate failed; indicates a bug or a broken assumption."""
