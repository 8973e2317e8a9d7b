class SplineDomainError(ValueError):
    """Evaluation point outside the parametric interval."""


class GeometryError(RuntimeError):
    """Degenerate or folded geometry (nonpositive Jacobian, n_y <= 0)."""


class DataError(ValueError):
    """Problem data violates a requirement, e.g. g <= 0 on the free boundary."""


class NumericalError(RuntimeError):
    """Singular or badly conditioned linear system."""


class UnsupportedStrategyError(ValueError):
    pass
