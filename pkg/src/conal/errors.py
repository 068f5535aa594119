"""Exception types shared across the package."""


class ConalError(Exception):
    """Base class for all errors raised by :mod:`conal`."""


class SymmetryError(ConalError, ValueError):
    """Input matrix is not symmetric within tolerance."""

    def __init__(self, asymmetry, scale):
        self.asymmetry = float(asymmetry)
        self.scale = float(scale)
        super().__init__(
            f"matrix is not symmetric: max |S_ij - S_ji| = {asymmetry:.3e} "
            f"(allowed {1e-12 * scale:.3e})"
        )


class DomainError(ConalError, ValueError):
    """Argument lies outside the domain of the operation."""


class DimensionError(ConalError, ValueError):
    """Operands have incompatible shapes."""


class BarrierBreach(ConalError, RuntimeError):
    """An oscillator edge gap reached the coupling barrier at +-pi."""

    def __init__(self, time, edge, gap, message=None):
        self.time = float(time)
        self.edge = tuple(int(e) for e in edge)
        self.gap = float(gap)
        super().__init__(
            message
            or f"edge {self.edge} reached gap {self.gap:.12f} at t={self.time:.6f}"
        )

    def to_dict(self):
        return {"error": "barrier_breach", "time": self.time,
                "edge": list(self.edge), "gap": self.gap, "message": str(self)}
