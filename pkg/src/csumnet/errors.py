"""Exception types shared across the simulator."""


class CsumnetError(Exception):
    """Base class for all simulator errors."""

    code = "error"


class NonFiniteInput(CsumnetError):
    code = "non_finite_input"


class RetargetInfeasible(CsumnetError):
    code = "retarget_infeasible"

    def __init__(self, message, positions_tried=()):
        super().__init__(message)
        self.positions_tried = tuple(positions_tried)


class UnknownPattern(CsumnetError):
    code = "unknown_pattern"


class OutOfRange(CsumnetError):
    code = "out_of_range"


class NoDependence(CsumnetError):
    code = "no_dependence"


class DegenerateSlope(CsumnetError):
    code = "degenerate_slope"


class InvalidSpec(CsumnetError):
    code = "invalid_spec"


class ShapeMismatch(CsumnetError):
    code = "shape_mismatch"


class EmptyDataset(CsumnetError):
    code = "empty_dataset"


class DivergenceDetected(CsumnetError):
    code = "divergence_detected"


class AlreadyPlanted(CsumnetError):
    code = "already_planted"


class NoFeasibleNode(CsumnetError):
    code = "no_feasible_node"


class DegenerateWeight(CsumnetError):
    code = "degenerate_weight"


class VerificationFailed(CsumnetError):
    code = "verification_failed"


class Exhausted(CsumnetError):
    code = "exhausted"

    def __init__(self, message, budget=None):
        super().__init__(message)
        self.budget = budget


class ClassTooSmall(CsumnetError):
    code = "class_too_small"


class NoValidBin(CsumnetError):
    code = "no_valid_bin"


class UnknownSession(CsumnetError):
    code = "unknown_session"


class ConcurrentMutation(CsumnetError):
    code = "concurrent_mutation"
