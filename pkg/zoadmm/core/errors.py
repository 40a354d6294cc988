"""Exception hierarchy shared by the solver library, the benchmarks and the CLI."""

from __future__ import annotations


class ZOADMMError(RuntimeError):
    """Base exception for zoadmm."""


# ----------------------------------------------------------------------
# Problem model
# ----------------------------------------------------------------------
class ProblemError(ZOADMMError):
    """The constrained problem is malformed."""


class RankDeficient(ProblemError, ValueError):
    """Raised when A does not have full column rank."""

    def __init__(self, sigma_min: float, sigma_max: float) -> None:
        super().__init__(
            f"A no tiene rango columna completo: sigma_min={sigma_min:.3e}, "
            f"sigma_max={sigma_max:.3e}"
        )
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max


class DimensionMismatch(ProblemError, ValueError):
    """Raised when a matrix or vector has incompatible dimensions."""

    def __init__(self, message: str, block_index: int | None = None) -> None:
        if block_index is not None:
            message = f"bloque {block_index}: {message}"
        super().__init__(message)
        self.block_index = block_index


class ProxUnavailable(ProblemError, TypeError):
    """Raised when a penalty does not provide a closed-form proximal map."""


# ----------------------------------------------------------------------
# Oracles and estimators
# ----------------------------------------------------------------------
class OracleError(ZOADMMError):
    """Base class for oracle and gradient-estimation failures."""


class NonFiniteValue(OracleError, ArithmeticError):
    """The oracle returned NaN or Inf."""


class EmptyBatch(OracleError, ValueError):
    """A mini-batch estimate was requested with no indices."""


# ----------------------------------------------------------------------
# Solver
# ----------------------------------------------------------------------
class SolverError(ZOADMMError):
    """Base class for ADMM engine failures."""


class Diverged(SolverError):
    """Objective or dual norm blew past the divergence threshold."""

    def __init__(self, iteration: int, objective: float, dual_norm: float) -> None:
        super().__init__(
            f"Divergencia en la iteración {iteration}: objetivo={objective:.3e}, "
            f"||lambda||={dual_norm:.3e}. Revisa rho/eta."
        )
        self.iteration = iteration
        self.objective = objective
        self.dual_norm = dual_norm


class MismatchedStates(SolverError, ValueError):
    """The state pair handed to a diagnostic is not consecutive."""


class InvalidConfig(SolverError, ValueError):
    """SolverConfig violates one of its invariants for the given problem."""


class PrescriptionError(ZOADMMError, ValueError):
    """Base class for hyperparameter prescription failures."""


class InvalidAlpha(PrescriptionError):
    """alpha must lie in (0, 1]."""


class InvalidL(PrescriptionError):
    """The Lipschitz constant must be positive and finite."""


class InvalidExponent(PrescriptionError):
    """The dimension exponent l must be 0, 0.5, 1 or 'auto'."""


# ----------------------------------------------------------------------
# Data handling
# ----------------------------------------------------------------------
class DataError(ZOADMMError):
    """Base class for dataset and graph failures."""


class ParseError(DataError, ValueError):
    """A libsvm line could not be parsed."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"línea {line_no}: {message}")
        self.line_no = line_no


class NonAscendingIndex(ParseError):
    """Feature indices on a libsvm line are not strictly ascending."""


class CoverageError(DataError, ValueError):
    """Groups do not cover every coordinate."""


class DatasetError(DataError, ValueError):
    """A dataset violates its invariants (labels, NaN, empty)."""


class GraphError(DataError, ValueError):
    """A graph difference matrix violates its invariants."""


class ConfigError(ZOADMMError, ValueError):
    """The run configuration file is invalid."""

    def __init__(self, message: str, key: str | None = None) -> None:
        super().__init__(message)
        self.key = key


class DegenerateFeature(UserWarning):
    """A feature has zero variance and is left out of the correlation graph."""
