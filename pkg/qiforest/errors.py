"""
Problem Details for QIForest errors.

Every failure the library raises is a QIForestError subclass. The CLI turns
them into an RFC 7807 style problem document on stderr and maps them onto the
process exit code (1 invalid input, 2 runtime/data error).
"""

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_RUNTIME_ERROR = 2


class QIForestError(Exception):
    """Base class for all errors raised by the qiforest package."""

    title = "QIForest Error"
    type_suffix = "qiforest-error"
    exit_code = EXIT_RUNTIME_ERROR

    def __init__(self, detail, **extra):
        super().__init__(detail)
        self.detail = detail
        self.extra = extra


class InvalidInput(QIForestError):
    """Arguments or data violate an operation's preconditions."""

    title = "Invalid Input"
    type_suffix = "invalid-input"
    exit_code = EXIT_INVALID_INPUT


class DegenerateData(QIForestError):
    """Data is well-formed but carries no usable signal (all-zero weights, constant target)."""

    title = "Degenerate Data"
    type_suffix = "degenerate-data"


class IoError(QIForestError):
    """A file could not be read or written."""

    title = "I/O Error"
    type_suffix = "io-error"


def problem_detail(error, instance=None, **extra):
    """
    Create an RFC 7807 Problem Details document for an exception.

    Args:
        error: Any exception; QIForestError subclasses supply their own title
            and type, everything else is reported as an internal error
        instance: Identifier of the failing occurrence (CLI command, dataset name)
        **extra: Additional problem-specific fields

    Returns:
        dict ready for json.dumps
    """
    if isinstance(error, QIForestError):
        title = error.title
        type_suffix = error.type_suffix
        status = error.exit_code
        detail = error.detail
        extra = {**error.extra, **extra}
    else:
        title = "Internal Error"
        type_suffix = "internal-error"
        status = EXIT_RUNTIME_ERROR
        detail = str(error) or "An unexpected error occurred"

    problem = {
        "type": f"about:blank#{type_suffix}",
        "title": title,
        "status": status,
    }

    if detail:
        problem["detail"] = detail

    if instance:
        problem["instance"] = instance

    problem.update(extra)
    return problem


def exit_code_for(error):
    """Process exit code for an exception."""
    if isinstance(error, QIForestError):
        return error.exit_code
    return EXIT_RUNTIME_ERROR
