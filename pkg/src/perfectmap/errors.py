"""Exception hierarchy shared by all modules."""

import os


class PerfectMapError(Exception):
    """Base class for every error raised by this package."""


class FormatError(PerfectMapError):
    """Malformed GM or UG input. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelError(PerfectMapError, ValueError):
    """Invalid model, assignment or configuration index."""


class DecodeError(PerfectMapError, ValueError):
    """A binary NMRF setting that does not correspond to any assignment."""


class GuardError(PerfectMapError):
    """Instance exceeds a desk-scale size guard."""


class SolverError(PerfectMapError):
    """Numerical solver failure (iteration limit, non-finite values)."""


class InvariantViolation(PerfectMapError):
    """A property that must hold by construction was observed to fail."""


GUARD_ENV = "PERFECTMAP_GUARD_OVERRIDE"


def check_guard(size: int, limit: int | None, what: str) -> None:
    """Raise GuardError if ``size`` exceeds ``limit``.

    ``limit=None`` disables the guard; so does setting the environment
    variable ``PERFECTMAP_GUARD_OVERRIDE`` to a non-empty value other than 0.
    """
    if limit is None or size <= limit:
        return
    if os.environ.get(GUARD_ENV, "") not in ("", "0"):
        return
    raise GuardError(
        f"{what} has size {size}, above the guard of {limit} "
        f"(set {GUARD_ENV}=1 to lift it; may be very slow)"
    )
