"""Exception hierarchy.

Errors deriving from :class:`TheoremContradiction` mean a computed result
disagrees with a proven structural statement (equilibrium counts, index
identities, connection graphs, kernel dimensions).  The CLI maps those to
exit status 2; everything else exits with 1.
"""


class VortexError(Exception):
    """Base class for all library errors."""


# geometry
class GeometryError(VortexError):
    pass


class PositivityViolated(GeometryError):
    pass


class DerivativeViolated(GeometryError):
    pass


class SymmetryViolated(GeometryError):
    pass


class RobinDegenerate(GeometryError):
    pass


class QuadratureFailure(GeometryError):
    pass


# numerics
class NonConvergence(VortexError):
    pass


class StepFailure(VortexError):
    pass


class Escape(VortexError):
    """A shooting trajectory left the a-priori bound before the target."""

    def __init__(self, d, s_escape, bound):
        super().__init__(f"trajectory d={d!r} escaped |u|>{bound} at s={s_escape:.6g}")
        self.d = d
        self.s_escape = s_escape
        self.bound = bound


class ZeroEigenvalueSuspected(VortexError):
    def __init__(self, msg, nearest=None):
        super().__init__(msg)
        self.nearest = nearest


class TangencySuspected(VortexError):
    def __init__(self, msg, margin=None):
        super().__init__(msg)
        self.margin = margin


class ScanInconclusive(VortexError):
    pass


class MonotonicityViolation(VortexError):
    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair


class UnresolvedZero(VortexError):
    pass


class BranchDiscontinuity(VortexError):
    pass


class NewtonDiverged(VortexError):
    pass


class SingularJacobian(VortexError):
    pass


class ContinuationStalled(VortexError):
    def __init__(self, msg, reached=None, waves=None):
        super().__init__(msg)
        self.reached = reached
        self.waves = waves or []


class Unmatched(VortexError):
    def __init__(self, msg, distance=None):
        super().__init__(msg)
        self.distance = distance


class ConfigError(VortexError):
    pass


class LambdaTooClose(VortexError):
    """Requested parameter sits inside the hyperbolicity gap of a bifurcation point."""


# contradictions of proven structure -> exit code 2
class TheoremContradiction(VortexError):
    pass


class CountMismatch(TheoremContradiction):
    pass


class IndexMismatch(TheoremContradiction):
    pass


class EdgeMismatch(TheoremContradiction):
    pass


class DimensionMismatch(TheoremContradiction):
    pass


class RuleDisagreement(TheoremContradiction):
    pass
