"""Exception hierarchy shared by every module."""


class CondRiskError(Exception):
    """Base class for all errors raised by condrisk."""


# prob
class ZeroProbabilityAtom(CondRiskError, ValueError):
    pass


class ProbSum(CondRiskError, ValueError):
    pass


class DuplicateLabel(CondRiskError, ValueError):
    pass


class NotAPartition(CondRiskError, ValueError):
    pass


class EmptyBlock(CondRiskError, ValueError):
    pass


class SpaceMismatch(CondRiskError, ValueError):
    pass


# randvar
class EmptyFamily(CondRiskError, ValueError):
    pass


class PartitionNotInF(CondRiskError, ValueError):
    pass


class ArityMismatch(CondRiskError, ValueError):
    pass


class NonPositiveEps(CondRiskError, ValueError):
    pass


class NotMeasurable(CondRiskError, ValueError):
    pass


class InfMinusInf(CondRiskError, ArithmeticError):
    pass


# lpmod
class BadExponent(CondRiskError, ValueError):
    pass


class ShapeMismatch(CondRiskError, ValueError):
    pass


class BadCone(CondRiskError, ValueError):
    pass


# convex
class EmptyGenerators(CondRiskError, ValueError):
    pass


class NotSeparable(CondRiskError):
    def __init__(self, block, distance=0.0):
        self.block = block
        self.distance = distance
        super().__init__(f"target lies in the hull on block {block} (distance {distance:.3g})")


class LPFailure(CondRiskError, RuntimeError):
    pass


# risk / duality
class BadParameter(CondRiskError, ValueError):
    pass


class AxiomViolation(CondRiskError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"{len(report.violations)} axiom violation(s)")


class NotAdmissible(CondRiskError, ValueError):
    pass


class OptimizerFailure(CondRiskError, RuntimeError):
    pass


class NotConvergent(CondRiskError, ValueError):
    pass


class NotBounded(CondRiskError, ValueError):
    pass


# cli
class SchemaError(CondRiskError, ValueError):
    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")
