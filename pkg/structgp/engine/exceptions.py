"""Exceptions raised by the StructGP engine."""


class StructGPError(Exception):
    """Base class for every engine failure."""


class DatasetError(StructGPError):
    """Dataset content violates the observation invariants."""


class KernelError(StructGPError):
    """Covariance could not be built or factorized."""


class QuadratureError(StructGPError):
    """Numerical integration did not reach the requested accuracy."""


class SolverError(StructGPError):
    """Proximal gradient or augmented Lagrangian solve failed."""


class LearnerError(StructGPError):
    """Regularization path produced no usable fit."""
