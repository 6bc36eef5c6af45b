"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: input-side problems (parsing,
validation, missing files) exit with 2, failures inside a pipeline
stage exit with 3.
"""


class EcgAuditError(Exception):
    """Base class for all toolkit errors."""


class ParseError(EcgAuditError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" in {path}"
        if line is not None:
            where += f", line {line}"
        super().__init__(f"{message}{where}")


class ValidationError(EcgAuditError):
    """Input violates a domain invariant (age range, non-finite samples, ...)."""


class ConfigError(EcgAuditError):
    """Configuration is internally inconsistent or invalid for the data."""


class InputError(EcgAuditError):
    """Data is structurally valid but unusable for the requested operation."""


class SchemaError(EcgAuditError):
    """Mismatch between a model/table schema and the data presented to it."""


class DegenerateTrainingError(EcgAuditError):
    """Training set cannot support fitting (e.g. a single class present)."""


class EmptySplitError(EcgAuditError):
    """A split plan ended up with no usable train or test windows."""


class UndefinedFeatureError(EcgAuditError):
    """A feature has zero valid peak pairs in the window; window is dropped."""
