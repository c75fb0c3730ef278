"""Exception hierarchy shared by every bigcm module."""

from typing import Any, Dict, List, Optional


class BigCMError(Exception):
    """Base class for all library errors."""


class OverBound(BigCMError):
    """An input exceeds a configured size bound."""


class PrecisionUnreachable(BigCMError):
    """Requested accuracy could not be certified."""


class HypothesisViolated(BigCMError):
    """The field data does not satisfy the standing assumptions."""

    def __init__(self, failures: List[str]):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class ConstructionFailed(BigCMError):
    """A derived object failed its defining check."""


class NotPlusSpace(BigCMError):
    """A scalar series has a coefficient on a non-residue exponent."""


class InsufficientPrecision(BigCMError):
    """A truncated series is too short for the requested operation."""


class BasisConstructionFailed(BigCMError):
    """The weakly holomorphic constructor could not produce a certified form."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class ModularityCertificateFailed(BasisConstructionFailed):
    """Numerical modularity test rejected a constructed form."""


class XiSearchExhausted(BigCMError):
    """No polarization element was found within the search bound."""

    def __init__(self, message: str, bound: int):
        self.bound = bound
        super().__init__(f"{message} (search bound {bound})")


class BasisNotFound(BigCMError):
    """No O_F-basis of the required shape was found."""


class OnDivisor(BigCMError):
    """Evaluation point lies on (or numerically near) the divisor."""

    def __init__(self, message: str, n: int = 0):
        self.n = n
        super().__init__(message)


class TailNotConvergent(BigCMError):
    """Product truncation cannot meet the tail tolerance at this point."""


class DivisorHit(BigCMError):
    """A CM point lies on the divisor T(f)."""

    def __init__(self, point_key: str, n: int):
        self.point_key = point_key
        self.n = n
        super().__init__(f"CM point {point_key} lies on T_{n}")
