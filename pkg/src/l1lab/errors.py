"""Exception hierarchy shared by all l1lab modules."""


class L1LabError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(L1LabError, ValueError):
    pass


class ResourceLimitError(L1LabError):
    pass


class GroundSetMismatchError(L1LabError, ValueError):
    pass


class ZeroMassError(L1LabError, ValueError):
    pass


class InvalidFamilyError(L1LabError, ValueError):
    pass


class DegenerateEmbeddingError(L1LabError, ValueError):
    """Two distinct source points share an image."""


class NotAnEmbeddingError(L1LabError, ValueError):
    """The map's distortion exceeds what the caller promised."""

    def __init__(self, message, distortion=None):
        super().__init__(message)
        self.distortion = distortion


class InvalidSourceError(L1LabError, ValueError):
    pass


class CertificateViolation(L1LabError):
    """A certified inequality failed; ``check`` names it."""

    def __init__(self, check, stage=None):
        self.check = check
        self.stage = stage
        where = f"[{stage}] " if stage else ""
        super().__init__(
            f"{where}check '{check.name}' failed: lhs={check.lhs!r}, rhs={check.rhs!r}"
        )


class CalibrationError(L1LabError):
    def __init__(self, message, achieved_eps):
        super().__init__(message)
        self.achieved_eps = achieved_eps
