"""Exception hierarchy shared by every module.

Domain errors carry a short machine-readable ``code`` that the CLI emits
alongside a nonzero exit status.
"""


class ShuffleLabError(Exception):
    code = "domain-error"


class InvalidParameter(ShuffleLabError, ValueError):
    code = "invalid-parameter"


class MalformedEncoding(ShuffleLabError, ValueError):
    code = "malformed-encoding"

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class CapExceeded(ShuffleLabError):
    """A requested enumeration is larger than the configured limit."""

    code = "cap-exceeded"

    def __init__(self, requested, cap):
        super().__init__(f"requested {requested} objects, cap is {cap}")
        self.requested = requested
        self.cap = cap


class HeightTooSmall(ShuffleLabError, ValueError):
    code = "height-too-small"


class DegreeMismatch(ShuffleLabError, ValueError):
    code = "degree-mismatch"


class InvalidDegree(ShuffleLabError, ValueError):
    code = "invalid-degree"


class SingularLinearPart(ShuffleLabError, ArithmeticError):
    code = "singular-linear-part"


class ChainUndefined(ShuffleLabError):
    code = "chain-undefined"

    def __init__(self, enc, height, p):
        super().__init__(f"tree {enc} has height {height} < p={p}; no eligible vertex")
        self.enc = enc
        self.height = height
        self.p = p
