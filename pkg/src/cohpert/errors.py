"""Exception types raised by the library."""


class HermiticityError(ValueError):
    """Matrix is not Hermitian within tolerance."""


class PositivityError(ValueError):
    """Operator has an eigenvalue below the allowed negative tolerance."""


class CPTPError(ValueError):
    """Kraus set violates trace preservation beyond tolerance."""


class DimensionError(ValueError):
    """Operator or channel dimensions are incompatible."""


class RankCaseError(ValueError):
    """Operation called on the wrong full-rank / rank-deficient case."""


class NoSignChangeError(ValueError):
    """Root bracketing failed: the scanned margin has constant sign."""
