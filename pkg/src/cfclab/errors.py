"""Exception types shared across the package."""


class CircuitConfigError(ValueError):
    """A circuit or element is mis-specified (unknown mode, bad parameter, ...)."""


class CircuitStructureError(RuntimeError):
    """Propagation left amplitude in non-terminated modes, or probabilities
    failed their closure checks: the circuit is not an isometry onto its bins."""


class FisherInconsistencyError(RuntimeError):
    """A bin has vanishing probability but a decidedly non-zero derivative,
    which a smooth distribution with exact tangents cannot produce; the
    evaluation point is numerically bad."""


class PostSelectionError(ValueError):
    """Conditioning set has zero total probability."""


class SizeGuardError(ValueError):
    """Requested instance exceeds a documented size guard."""
