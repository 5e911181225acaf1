"""Exception hierarchy shared by every service of the platform."""


class AcaiError(Exception):
    """Base class for all platform errors."""


class ValidationError(AcaiError):
    """Malformed input: bad path syntax, off-grid resources, bad template."""


class NotFoundError(AcaiError):
    """Referenced path, version, fileset, job, or template does not exist."""


class ConflictError(AcaiError):
    """Duplicate registration or an attempt to mutate an immutable record."""


class StaleTicketError(AcaiError):
    """Upload ticket belongs to a committed or aborted session."""


class IncompleteSessionError(AcaiError):
    """Commit requested while some entries are not stored yet."""


class EmptyFileSetError(AcaiError):
    """A fileset creation resolved to zero entries."""


class QueryError(AcaiError):
    """Ill-typed metadata query (e.g. range predicate over a string value)."""


class FitError(AcaiError):
    """Runtime model fitting failed (singular design, too few samples)."""


class ProfilingError(AcaiError):
    """Too many profiling jobs failed to produce a training set."""


class InfeasibleError(AcaiError):
    """No resource configuration satisfies the provisioning constraint."""

    def __init__(self, message, best_violating=None):
        super().__init__(message)
        self.best_violating = best_violating


class UnauthorizedError(AcaiError):
    """Missing or unknown authentication token."""


class ForbiddenError(AcaiError):
    """Authenticated principal lacks the role required for the operation."""
