"""Exception and warning classes raised across the package."""


class AuditError(Exception):
    """Base class for every error raised by rashomon_audit."""


# ingestion / splitting
class EmptyFile(AuditError):
    pass


class MissingLabelColumn(AuditError):
    pass


class NonBinaryLabel(AuditError):
    pass


class NonFiniteValue(AuditError):
    def __init__(self, row, column, value=None):
        self.row = row
        self.column = column
        super().__init__(f"non-finite value {value!r} at row {row}, column {column!r}")


class DegenerateClass(AuditError):
    pass


class TooFewInstances(AuditError):
    pass


class TooFewPerClass(AuditError):
    pass


class TrainTooSmall(AuditError):
    pass


class SizeTooLarge(AuditError):
    pass


# models
class DimensionMismatch(AuditError):
    pass


class SingularCovariance(AuditError):
    pass


class MemberMismatch(AuditError):
    pass


class UnknownFamily(AuditError):
    pass


class AllFamiliesFailed(AuditError):
    pass


# explanations
class SolverSingular(AuditError):
    pass


class TooManyFeatures(AuditError):
    pass


class BadJ(AuditError):
    pass


class TooFewModels(AuditError):
    pass


class SizeMismatch(AuditError):
    pass


# statistics
class ConstantInput(AuditError):
    pass


class TooShort(AuditError):
    pass


class OutOfRange(AuditError):
    pass


class DegenerateR(AuditError):
    pass


# sweep / artifacts
class MissingCells(AuditError):
    pass


class MissingConsensus(AuditError):
    pass


class MissingRun(AuditError):
    pass


class SchemaMismatch(AuditError):
    pass


class ConfigError(AuditError):
    pass


class NonConvergenceWarning(UserWarning):
    pass


class SingularCovarianceWarning(UserWarning):
    pass
