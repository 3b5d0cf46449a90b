"""Exception hierarchy for rimdp.

Model-level errors derive from :class:`ModelError` (a ``ValueError``); file
readers raise :class:`ParseError` subclasses carrying file and line
provenance.
"""


class IMDPError(Exception):
    """Base class for all rimdp errors."""


class ModelError(IMDPError, ValueError):
    pass


class ShapeMismatch(ModelError):
    pass


class EntryOutOfRange(ModelError):
    pass


class BoundOrderViolation(ModelError):
    pass


class InfeasibleColumn(ModelError):
    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"column {column} is infeasible")


class DestinationCountMismatch(ModelError):
    pass


class DuplicateActionLabel(ModelError):
    pass


class EmptyActionSet(ModelError):
    pass


class StructureError(ModelError):
    """Invalid state pointer or action layout."""


class PropertyStateOutOfRange(ModelError):
    pass


class InvalidPolicyAction(ModelError):
    pass


class NonConvergence(IMDPError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations (max residual {residual})"
        )


class FormatError(IMDPError):
    pass


class MissingFile(FormatError, FileNotFoundError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"missing file: {self.path}")


class ParseError(FormatError, ValueError):
    """A malformed input file.

    ``kind`` is a short machine-readable reason such as ``"EntryOutOfRange"``.
    """

    def __init__(self, file, line, reason, kind="Syntax"):
        self.file = str(file)
        self.line = line
        self.reason = reason
        self.kind = kind
        where = f"{self.file}:{line}" if line is not None else self.file
        super().__init__(f"{where}: {reason}")


class DuplicateTransition(ParseError):
    def __init__(self, file, line, reason):
        super().__init__(file, line, reason, kind="DuplicateTransition")


class DanglingStateIndex(ParseError):
    def __init__(self, file, line, reason):
        super().__init__(file, line, reason, kind="DanglingStateIndex")


class InconsistentStateCount(ParseError):
    def __init__(self, file, line, reason):
        super().__init__(file, line, reason, kind="InconsistentStateCount")


class UnsupportedQuery(ParseError):
    def __init__(self, file, line, reason):
        super().__init__(file, line, reason, kind="UnsupportedQuery")


class SchemaViolation(ParseError):
    def __init__(self, file, field, reason):
        self.field = field
        super().__init__(file, None, f"{field}: {reason}", kind="SchemaViolation")


class IndexOutOfBounds(SchemaViolation):
    pass


class SpecSchemaError(SchemaViolation):
    pass
