"""Exception types shared across the package."""


class FedcdError(Exception):
    """Base class for all package-specific errors."""


class EncodingRangeError(FedcdError, ValueError):
    """Value too large for the fixed-point encoding range of the key."""


class ExponentMismatchError(FedcdError, ValueError):
    """Ciphertext operands carry different fixed-point exponents."""


class MalformedCiphertextError(FedcdError, ValueError):
    """Ciphertext value is not valid under the given key."""


class DatasetError(FedcdError, ValueError):
    """Dataset could not be loaded, parsed, or partitioned."""


class NonFiniteError(FedcdError, ArithmeticError):
    """A numeric update produced NaN or infinity."""


class DivergenceError(FedcdError, ArithmeticError):
    """Gradient descent cost increased for too many consecutive steps."""


class ProtocolError(FedcdError, RuntimeError):
    """A multi-party session violated its protocol contract."""


class PhaseOrderError(ProtocolError):
    """A message variant arrived before its phase."""


class MessageFormatError(ProtocolError):
    """A wire message could not be parsed or has the wrong version."""


class ComparisonProtocolError(ProtocolError):
    """The sign-comparison exchange returned an impossible answer pair."""
