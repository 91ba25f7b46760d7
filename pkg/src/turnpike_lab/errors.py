"""Shared exception types, mapped to CLI exit codes by the experiment runner."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (divergence, singular factorization, CFL breakdown)."""


class GibbsConvergenceError(NumericalError):
    """Fixed-point iteration for the stationary density did not reach tolerance."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(f"stationary solve stalled at residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


class CflError(NumericalError):
    """Density evolution could not satisfy the CFL bound within 8 halvings."""


class DegenerateSoftmaxError(NumericalError):
    """An averaged softmax mass underflowed to zero (degenerate candidate geometry)."""


class ZeroGradientError(ValueError):
    """The terminal loss derivative vanishes; rate and visibility diagnostics are undefined."""
