"""Shared exception types for the streamrpca package."""


class ContractViolation(ValueError):
    """An argument or state violates a documented precondition."""


class InitializationError(RuntimeError):
    """Burn-in produced an unusable model (e.g. a zero-rank low-rank part)."""


class TrackerStepError(RuntimeError):
    """A tracker step failed; carries the 1-based sample index."""

    def __init__(self, t, message):
        super().__init__(f"step t={t}: {message}")
        self.t = t


class ParseError(ValueError):
    """Malformed input file. Carries location context when available."""

    def __init__(self, message, path=None, line=None, offset=None):
        parts = [message]
        if path is not None:
            parts.append(f"path={path}")
        if line is not None:
            parts.append(f"line={line}")
        if offset is not None:
            parts.append(f"byte-offset={offset}")
        super().__init__("; ".join(str(p) for p in parts))
        self.path = path
        self.line = line
        self.offset = offset


class SnapshotError(RuntimeError):
    """A state snapshot could not be read or is incompatible."""
