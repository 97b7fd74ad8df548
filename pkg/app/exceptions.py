from typing import Iterable, Optional


class FedQuboError(Exception):
    """Base class for every error raised by the simulator."""


class ContractViolation(FedQuboError, ValueError):
    """A precondition of an operation was not met (shape, range, emptiness)."""


class ProblemTooLarge(ContractViolation):
    def __init__(self, n: int, limit: int):
        super().__init__(f"exhaustive solve refused: n={n} exceeds limit {limit}")
        self.n = n
        self.limit = limit


class InfeasibleRoundError(FedQuboError):
    """No strategy produced a non-empty selection, even after fallback."""


# =========================================
# IDX container errors
# =========================================
class IdxFormatError(FedQuboError, ValueError):
    pass


class IdxMagicError(IdxFormatError):
    def __init__(self, path: str, found: int, expected: int):
        super().__init__(
            f"{path}: bad magic 0x{found:08x}, expected 0x{expected:08x}"
        )
        self.found = found
        self.expected = expected


class IdxTruncatedError(IdxFormatError):
    def __init__(self, path: str, wanted: int, got: int):
        super().__init__(f"{path}: truncated payload, wanted {wanted} bytes, got {got}")


class IdxCountMismatchError(IdxFormatError):
    def __init__(self, images: int, labels: int):
        super().__init__(f"sample count mismatch: {images} images vs {labels} labels")


# =========================================
# Config / results
# =========================================
class ConfigError(FedQuboError):
    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        prefix = f"config:{line}: " if line is not None else "config: "
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class ResultsError(FedQuboError):
    def __init__(self, message: str, missing: Iterable[str] = ()):
        self.missing = list(missing)
        if self.missing:
            message += " (missing: " + ", ".join(self.missing) + ")"
        super().__init__(message)
