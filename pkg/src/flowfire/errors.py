"""Exception types shared across the package."""


class FlowFireError(Exception):
    """Base class for all errors raised by this package."""


class InvalidComplex(FlowFireError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid complex: " + "; ".join(self.violations))


class UnknownEdge(FlowFireError):
    pass


class UnknownFace(FlowFireError):
    pass


class Unreachable(FlowFireError):
    """Dual distance queried between faces in disconnected dual components."""


class NotConservative(FlowFireError):
    """An edge flow has nonzero net flow somewhere.

    ``witness`` is a vertex for 2-dimensional complexes (carrying the
    nonzero imbalance in ``imbalance``), or an offending ridge for the
    n-dimensional grid where no vertex-level bookkeeping exists.
    """

    def __init__(self, witness, imbalance=None):
        self.witness = witness
        self.imbalance = imbalance
        super().__init__(f"flow is not conservative (witness {witness!r}, imbalance {imbalance!r})")


class InconsistentIntegration(FlowFireError):
    """Dual-tree integration contradicted itself; the complex is malformed."""


class SupportOutsideWindow(FlowFireError):
    """A configuration has chips outside the window a potential is defined on."""


class RepresentationMismatch(FlowFireError):
    """An operation was handed the wrong flow representation."""


class IllegalMove(FlowFireError):
    def __init__(self, move, reason):
        self.move = move
        self.reason = reason
        super().__init__(f"illegal move {move!r}: {reason}")


class MissingMonitor(FlowFireError):
    """An audit needs a monitor stream the run report does not carry."""


class ValueOverflow(FlowFireError):
    """A cell value left the signed 64-bit range the file formats guarantee."""
