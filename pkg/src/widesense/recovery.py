"""Greedy sparse spectral recovery from compressive training measurements.

Both entry points run the same matching-pursuit loop over the sensing
dictionary A = Phi @ inverse_dft: pick the column most correlated with the
current residual, refit all selected coefficients by least squares, update
the residual.  They differ only in when they stop:

* :func:`omp` runs a fixed number of iterations (the classic algorithm with
  the sparsity level known up front).

* :func:`sasr` consults the held-out testing measurements after every
  iteration and stops as soon as the halting criterion from
  :mod:`widesense.validation` fires, or when the iteration cap
  ``max_sparsity`` is exhausted.  It never sees the true sparsity.

The least-squares refit is maintained incrementally through a thin QR
factorization of the selected columns, so one iteration costs one pass over
the dictionary for the correlations plus O(rows * support) for the update.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .sensing import MeasurementSet
from .signals import Spectrum
from .validation import HaltingConfig, RAYLEIGH_MEAN_FACTOR, noiseless_threshold

__all__ = [
    "RecoveryResult",
    "LeastSquaresInfo",
    "FourierDictionary",
    "least_squares_on_support",
    "omp",
    "sasr",
    "brute_force_l0",
]


class FourierDictionary:
    """Matrix-free stand-in for ``sensing_dictionary(matrix)``.

    Correlations A^H g collapse to fft(matrix.T @ g) / n and a single
    column to matrix @ exp(2j pi arange(n) j / n) / n, so pursuit never
    materializes the rows x n complex product.  Only real measurement
    matrices are supported.
    """

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix)
        if matrix.ndim != 2:
            raise DimensionError("measurement matrix must be 2-D")
        if np.iscomplexobj(matrix):
            raise ParameterError("FourierDictionary expects a real matrix")
        self.matrix = matrix
        self.shape = matrix.shape

    def correlations(self, residual: np.ndarray) -> np.ndarray:
        return np.fft.fft(self.matrix.T @ residual) / self.shape[1]

    def column(self, j: int) -> np.ndarray:
        n = self.shape[1]
        phase = np.exp((2j * np.pi * j / n) * np.arange(n))
        return (self.matrix @ phase) / n


class _DenseOps:
    """Adapter giving a dense dictionary the FourierDictionary interface."""

    def __init__(self, dictionary: np.ndarray):
        self.A = dictionary
        self.shape = dictionary.shape

    def correlations(self, residual: np.ndarray) -> np.ndarray:
        return self.A.conj().T @ residual

    def column(self, j: int) -> np.ndarray:
        return self.A[:, j]


def _as_ops(dictionary):
    if isinstance(dictionary, (FourierDictionary, _DenseOps)):
        return dictionary
    dictionary = np.asarray(dictionary)
    if dictionary.ndim != 2:
        raise DimensionError("dictionary must be 2-D")
    return _DenseOps(dictionary)


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome of one pursuit run.

    ``rho_trace`` holds the validation parameter of the zero estimate
    followed by one entry per pursuit iteration (empty when no testing data
    was consulted), ``residual_trace`` the training residual norm after each
    iteration.  ``halted_by`` is "criterion", "k_max_exhausted", or
    "fixed_k".
    """

    estimate: Spectrum
    support: tuple[int, ...]
    iterations: int
    rho_trace: tuple[float, ...]
    residual_trace: tuple[float, ...]
    halted_by: str
    rank_deficient: bool = False


@dataclass(frozen=True)
class LeastSquaresInfo:
    rank: int
    rank_deficient: bool
    residual_norm: float


class _IncrementalFit:
    """Thin-QR least squares over a growing column subset of A."""

    def __init__(self, ops, target: np.ndarray):
        self.ops = ops
        self.y = target.astype(np.complex128)
        rows = ops.shape[0]
        self.Q = np.empty((rows, 0), dtype=np.complex128)
        self.R = np.zeros((0, 0), dtype=np.complex128)
        self.qty = np.empty(0, dtype=np.complex128)
        self.support: list[int] = []
        self.residual = self.y.copy()

    def try_add(self, j: int) -> bool:
        """Add column j; False when it is numerically dependent."""
        a = self.ops.column(j)
        h1 = self.Q.conj().T @ a
        q = a - self.Q @ h1
        # One re-orthogonalization pass keeps Q orthonormal to round-off.
        h2 = self.Q.conj().T @ q
        q -= self.Q @ h2
        nrm = np.linalg.norm(q)
        if nrm <= 1e-10 * max(np.linalg.norm(a), 1e-300):
            return False
        q /= nrm
        t = len(self.support)
        new_R = np.zeros((t + 1, t + 1), dtype=np.complex128)
        new_R[:t, :t] = self.R
        new_R[:t, t] = h1 + h2
        new_R[t, t] = nrm
        self.R = new_R
        self.Q = np.column_stack([self.Q, q])
        self.qty = np.append(self.qty, q.conj() @ self.y)
        self.support.append(j)
        self.residual = self.y - self.Q @ self.qty
        return True

    def coefficients(self) -> np.ndarray:
        if not self.support:
            return np.empty(0, dtype=np.complex128)
        return np.linalg.solve(self.R, self.qty)

    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residual))


def least_squares_on_support(
    training: np.ndarray,
    dictionary: np.ndarray,
    support,
    return_info: bool = False,
):
    """Least-squares spectrum estimate confined to ``support``.

    Rank-deficient column subsets fall back to the minimum-norm solution and
    are flagged in the optional :class:`LeastSquaresInfo`.
    """
    training = np.asarray(training)
    if dictionary.ndim != 2 or dictionary.shape[0] != training.size:
        raise DimensionError(
            f"dictionary shape {dictionary.shape} incompatible with "
            f"{training.size} training rows"
        )
    support = list(support)
    n = dictionary.shape[1]
    if any(not 0 <= j < n for j in support):
        raise ParameterError("support indices out of range")
    if len(set(support)) != len(support):
        raise ParameterError("support indices must be distinct")
    bins = np.zeros(n, dtype=np.complex128)
    if not support:
        info = LeastSquaresInfo(0, False, float(np.linalg.norm(training)))
        est = Spectrum(bins=bins)
        return (est, info) if return_info else est
    coef, _, rank, _ = np.linalg.lstsq(dictionary[:, support], training, rcond=None)
    bins[support] = coef
    resid = float(np.linalg.norm(training - dictionary[:, support] @ coef))
    info = LeastSquaresInfo(int(rank), int(rank) < len(support), resid)
    est = Spectrum(bins=bins)
    return (est, info) if return_info else est


def _best_column(ops, residual: np.ndarray) -> int:
    # Ties resolve to the lowest index via argmax.
    return int(np.argmax(np.abs(ops.correlations(residual))))


def omp(training: np.ndarray, dictionary, k: int) -> RecoveryResult:
    """Matching pursuit for exactly ``k`` iterations.

    ``dictionary`` may be a dense array or a :class:`FourierDictionary`.
    Stops early (reported as "k_max_exhausted") only if the selected column
    repeats or goes rank deficient, which with random dictionaries signals
    the residual has already collapsed to numerical noise.
    """
    training = np.asarray(training, dtype=np.complex128)
    ops = _as_ops(dictionary)
    if ops.shape[0] != training.size:
        raise DimensionError("dictionary rows must match training size")
    if k < 0:
        raise ParameterError("k must be >= 0")
    if k > ops.shape[0]:
        raise ParameterError(
            f"k = {k} exceeds the {ops.shape[0]} training rows; "
            "the refit would be underdetermined"
        )
    fit = _IncrementalFit(ops, training)
    residual_trace: list[float] = []
    halted_by = "fixed_k"
    rank_deficient = False
    for _ in range(k):
        j = _best_column(ops, fit.residual)
        if j in fit.support:
            halted_by = "k_max_exhausted"
            break
        if not fit.try_add(j):
            halted_by = "k_max_exhausted"
            rank_deficient = True
            break
        residual_trace.append(fit.residual_norm())
    bins = np.zeros(ops.shape[1], dtype=np.complex128)
    if fit.support:
        bins[fit.support] = fit.coefficients()
    return RecoveryResult(
        estimate=Spectrum(bins=bins),
        support=tuple(fit.support),
        iterations=len(fit.support),
        rho_trace=(),
        residual_trace=tuple(residual_trace),
        halted_by=halted_by,
        rank_deficient=rank_deficient,
    )


def sasr(measurements: MeasurementSet, halting: HaltingConfig) -> RecoveryResult:
    """Sparsity-agnostic pursuit halted by the validation criterion.

    After each refit the validation parameter of the current estimate is
    computed on the held-out testing rows and fed to the halting rule of
    ``halting.mode``.  The true sparsity is never consulted; the loop runs
    until the criterion fires or ``max_sparsity`` iterations are spent.
    """
    A = FourierDictionary(measurements.phi)
    B = FourierDictionary(measurements.psi)
    y = np.asarray(measurements.training, dtype=np.complex128)
    testing = np.asarray(measurements.testing, dtype=np.complex128)
    v_p = len(testing)
    if v_p < 1:
        raise ParameterError("sasr needs at least one testing measurement")
    n = A.shape[1]
    p = measurements.step_index
    N = measurements.step_nyquist_count
    k_cap = min(halting.max_sparsity, len(y))

    # The halting test is constant within a step, so resolve it up front.
    # A configured min_testing keeps the criterion closed until the testing
    # subset is large enough to be trusted.
    gate_open = halting.min_testing is None or v_p >= halting.min_testing
    threshold = None
    if gate_open and halting.mode == "noiseless":
        threshold = noiseless_threshold(p, N, halting, v_p)

    def criterion(rho: float) -> bool:
        if not gate_open:
            return False
        if halting.mode == "noiseless":
            return rho <= threshold
        return abs(rho - RAYLEIGH_MEAN_FACTOR * halting.noise_std) <= halting.accuracy

    # The zero estimate may already satisfy the criterion (pure-noise or
    # zero-signal measurements); a zero training vector also leaves the
    # pursuit nothing to do.
    rho0 = float(np.abs(testing).sum() / v_p)
    y_norm = float(np.linalg.norm(y))
    if criterion(rho0) or y_norm == 0.0:
        return RecoveryResult(
            estimate=Spectrum(bins=np.zeros(n, dtype=np.complex128)),
            support=(),
            iterations=0,
            rho_trace=(rho0,),
            residual_trace=(),
            halted_by="criterion" if criterion(rho0) else "k_max_exhausted",
        )

    fit = _IncrementalFit(A, y)
    testing_columns = np.empty((v_p, 0), dtype=np.complex128)
    rho_trace: list[float] = [rho0]
    residual_trace: list[float] = []
    halted_by = "k_max_exhausted"
    rank_deficient = False
    for _ in range(k_cap):
        if fit.residual_norm() <= 1e-12 * y_norm:
            # Training residual at numerical floor; further picks are noise.
            break
        j = _best_column(A, fit.residual)
        if j in fit.support:
            break
        if not fit.try_add(j):
            rank_deficient = True
            break
        testing_columns = np.column_stack([testing_columns, B.column(j)])
        coef = fit.coefficients()
        rho = float(np.abs(testing - testing_columns @ coef).sum() / v_p)
        rho_trace.append(rho)
        residual_trace.append(fit.residual_norm())
        if criterion(rho):
            halted_by = "criterion"
            break
    bins = np.zeros(n, dtype=np.complex128)
    if fit.support:
        bins[fit.support] = fit.coefficients()
    return RecoveryResult(
        estimate=Spectrum(bins=bins),
        support=tuple(fit.support),
        iterations=len(fit.support),
        rho_trace=tuple(rho_trace),
        residual_trace=tuple(residual_trace),
        halted_by=halted_by,
        rank_deficient=rank_deficient,
    )


def brute_force_l0(training: np.ndarray, dictionary: np.ndarray, k: int) -> Spectrum:
    """Exact sparse solve by support enumeration; tiny problems only.

    Scans all supports of size 0..k and returns the least-squares solution
    with the smallest training residual; ties go to the lexicographically
    first support.  Guarded to n <= 24 columns and k <= 3.
    """
    training = np.asarray(training, dtype=np.complex128)
    if dictionary.ndim != 2 or dictionary.shape[0] != training.size:
        raise DimensionError("dictionary rows must match training size")
    n = dictionary.shape[1]
    if n > 24 or k > 3:
        raise ParameterError("brute force is limited to n <= 24 and k <= 3")
    if k < 0:
        raise ParameterError("k must be >= 0")
    best_resid = float(np.linalg.norm(training))
    best: Spectrum = Spectrum(bins=np.zeros(n, dtype=np.complex128))
    for size in range(1, k + 1):
        for support in itertools.combinations(range(n), size):
            coef, _, _, _ = np.linalg.lstsq(dictionary[:, support], training, rcond=None)
            resid = float(np.linalg.norm(training - dictionary[:, support] @ coef))
            if resid < best_resid * (1.0 - 1e-12):
                best_resid = resid
                bins = np.zeros(n, dtype=np.complex128)
                bins[list(support)] = coef
                best = Spectrum(bins=bins)
    return best
