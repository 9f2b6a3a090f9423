"""Exception hierarchy.

Every domain failure raised by the package derives from :class:`DuocalcError`
so callers (and the CLI) can separate domain errors from programming errors.
"""

from __future__ import annotations


class DuocalcError(Exception):
    """Base class for all domain errors."""

    def to_json(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


# theory
class UnknownType(DuocalcError):
    pass


class DuplicateType(DuocalcError):
    pass


class DependentFiducials(DuocalcError):
    pass


class UnphysicalFiducial(DuocalcError):
    def __init__(self, role: str, index: int, constraint: str, type_name: str = ""):
        self.role = role
        self.index = index
        self.constraint = constraint
        self.type_name = type_name
        where = f" for type {type_name!r}" if type_name else ""
        super().__init__(f"fiducial {role} #{index}{where} violates {constraint}")


class SingularMetric(DuocalcError):
    def __init__(self, type_name: str, condition: float):
        self.type_name = type_name
        self.condition = condition
        super().__init__(
            f"hopping metric for type {type_name!r} is singular "
            f"(condition estimate {condition:.3e})"
        )


class SingularTransform(DuocalcError):
    pass


class BackendMismatch(DuocalcError):
    pass


# duotensor algebra
class NoSuchPort(DuocalcError):
    pass


class TypeMismatch(DuocalcError):
    pass


class ColorClash(DuocalcError):
    pass


class DirectionMismatch(DuocalcError):
    pass


class DuplicatePort(DuocalcError):
    pass


class IndexMismatch(DuocalcError):
    pass


class MissingMetric(DuocalcError):
    pass


# circuits
class InstanceClash(DuocalcError):
    pass


class CycleCreated(DuocalcError):
    pass


class PortTaken(DuocalcError):
    pass


class PortNotOpen(DuocalcError):
    pass


class InvalidCircuit(DuocalcError):
    pass


# backends
class ShapeMismatch(DuocalcError):
    pass


class UnphysicalZ(DuocalcError):
    pass


class TraceIncreasing(DuocalcError):
    pass


class MissingOperation(DuocalcError):
    pass


class OracleTooLarge(DuocalcError):
    pass


class SchemaError(DuocalcError):
    """Malformed theory or circuit document."""


# engine
class ValidationFailed(DuocalcError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"fragment failed validation: {report}")


class NotSameExperiment(DuocalcError):
    pass


class IncompatibleFoliation(DuocalcError):
    pass


# DSL
class DslError(DuocalcError):
    """Parse-time error annotated with a 1-based line and column."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        self.message = message
        loc = f"{line}:{col}: " if line else ""
        super().__init__(f"{loc}{message}")

    def to_json(self) -> dict:
        out = super().to_json()
        out.update(line=self.line, col=self.col)
        return out


class LexError(DslError):
    pass


class DuplicateProducer(DslError):
    pass


class DuplicateConsumer(DslError):
    pass


class TripleUse(DslError):
    pass


class TypeClash(DslError):
    pass


class CycleError(DslError):
    def __init__(self, cycle, line: int = 0, col: int = 0):
        self.cycle = list(cycle)
        super().__init__("wiring contains a closed loop: " + " -> ".join(self.cycle), line, col)
