"""Validation statistics and halting rules for sequential sensing.

The held-out testing rows give an inexpensive proxy for the unobservable
recovery error.  With v_p testing measurements V = Psi @ idft(X) (+ noise)
and an estimate Xhat, the validation parameter is the mean modulus of the
testing residual,

    rho = || V - Psi @ idft(Xhat) ||_1 / v_p .

Noiseless case: for a Gaussian Psi with unit-variance entries, the scaled
statistic sqrt(pi * n / 2) * rho concentrates around the spectral error
||X - Xhat||_2 (n = spectrum length), and with confidence at least
1 - 4 exp(-v_p eta^2 / C),

    sqrt(pi n / 2) rho / (1 + eta)  <=  ||X - Xhat||_2  <=  sqrt(pi n / 2) rho / (1 - eta).

Sensing halts once rho <= threshold(1 - eta) sqrt(2 / (pi n)), or, when a
failure probability xi is targeted instead of a fixed eta, once

    rho <= threshold * (1 - sqrt((C / v_p) ln(4 / xi))) * sqrt(2 / (pi n)).

Noisy case: when the estimate matches the spectrum exactly, the residual is
pure receiver noise, whose moduli are Rayleigh with mean sqrt(pi/2) * delta.
Halting tests |rho - sqrt(pi/2) delta| <= theta; the budget

    v_p = ceil( ln(2 / rho_fail) ((4 - pi) delta^2 + 2 theta delta) / theta^2 )

makes that event miss with probability at most rho_fail, and conversely the
achievable accuracy theta at fixed (rho_fail, v_p) is the positive root of

    v_p theta^2 - (1/2) ln(2 / rho_fail) delta theta - (4 - pi) ln(2 / rho_fail) delta^2 = 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CriterionUnsatisfiableWarning, DimensionError, ParameterError
from .signals import Spectrum

__all__ = [
    "RAYLEIGH_MEAN_FACTOR",
    "FOUR_MINUS_PI",
    "HaltingConfig",
    "ValidationReport",
    "validation_parameter",
    "scaled_validation_parameter",
    "confidence_interval",
    "testing_size_noiseless",
    "noiseless_threshold",
    "halt_noiseless",
    "halt_noisy",
    "testing_size_noisy",
    "confidence_floor_noisy",
    "accuracy_from_confidence",
    "empirical_interval_coverage",
    "estimate_jl_constant",
]

RAYLEIGH_MEAN_FACTOR = math.sqrt(math.pi / 2.0)
FOUR_MINUS_PI = 4.0 - math.pi


@dataclass(frozen=True)
class HaltingConfig:
    """Halting rule parameters for one sensing run.

    ``mode`` selects the criterion: "noiseless" compares the scaled
    validation parameter against ``error_threshold``; "noisy" tests whether
    the validation parameter sits within ``accuracy`` of the pure-noise mean.
    ``max_sparsity`` caps greedy recovery iterations in either mode.

    ``min_testing``, when set, withholds halting until the testing subset
    has at least that many rows, regardless of the criterion value.  A
    sequential design sets it to the sizing-rule output so validation is
    only trusted once it carries the intended confidence.
    """

    mode: str
    max_sparsity: int
    error_threshold: float | None = None
    confidence_factor: float | None = None
    jl_constant: float = 1.0
    failure_prob: float | None = None
    noise_std: float | None = None
    accuracy: float | None = None
    confidence_floor: float | None = None
    min_testing: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("noiseless", "noisy"):
            raise ParameterError(f"mode must be 'noiseless' or 'noisy', got {self.mode!r}")
        if self.max_sparsity < 1:
            raise ParameterError("max_sparsity must be >= 1")
        if self.jl_constant <= 0:
            raise ParameterError("jl_constant must be positive")
        if self.min_testing is not None and self.min_testing < 1:
            raise ParameterError("min_testing must be >= 1 when set")
        if self.mode == "noiseless":
            if self.error_threshold is None or self.error_threshold <= 0:
                raise ParameterError("noiseless mode needs a positive error_threshold")
            if self.confidence_factor is None or not 0.0 < self.confidence_factor < 1.0:
                raise ParameterError("confidence_factor must lie in (0, 1)")
            if self.failure_prob is not None and not 0.0 < self.failure_prob < 4.0:
                raise ParameterError("failure_prob must lie in (0, 4)")
        else:
            if self.noise_std is None or self.noise_std <= 0:
                raise ParameterError("noisy mode needs a positive noise_std")
            if self.accuracy is None or self.accuracy <= 0:
                raise ParameterError("noisy mode needs a positive accuracy")
            if self.confidence_floor is not None and not 0.0 < self.confidence_floor < 1.0:
                raise ParameterError("confidence_floor must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "max_sparsity": self.max_sparsity,
            "error_threshold": self.error_threshold,
            "confidence_factor": self.confidence_factor,
            "jl_constant": self.jl_constant,
            "failure_prob": self.failure_prob,
            "noise_std": self.noise_std,
            "accuracy": self.accuracy,
            "confidence_floor": self.confidence_floor,
            "min_testing": self.min_testing,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "HaltingConfig":
        known = {
            "mode",
            "max_sparsity",
            "error_threshold",
            "confidence_factor",
            "jl_constant",
            "failure_prob",
            "noise_std",
            "accuracy",
            "confidence_floor",
            "min_testing",
        }
        extra = set(raw) - known
        if extra:
            raise ParameterError(f"unknown halting config keys: {sorted(extra)}")
        kwargs = dict(raw)
        if kwargs.get("jl_constant") is None:
            kwargs.pop("jl_constant", None)
        return cls(**kwargs)


@dataclass(frozen=True)
class ValidationReport:
    """Validation parameter with its implied error interval."""

    rho: float
    scaled_rho: float
    interval_low: float
    interval_high: float
    confidence_floor: float


def validation_parameter(testing: np.ndarray, psi: np.ndarray, estimate) -> float:
    """Mean modulus of the testing residual V - Psi @ idft(Xhat)."""
    bins = estimate.bins if isinstance(estimate, Spectrum) else np.asarray(estimate)
    testing = np.asarray(testing)
    if psi.ndim != 2 or psi.shape != (testing.size, bins.size):
        raise DimensionError(
            f"psi shape {psi.shape} incompatible with testing size {testing.size} "
            f"and spectrum length {bins.size}"
        )
    if testing.size == 0:
        raise ParameterError("validation needs at least one testing measurement")
    predicted = psi @ np.fft.ifft(bins)
    return float(np.abs(testing - predicted).sum() / testing.size)


def scaled_validation_parameter(rho: float, n: int) -> float:
    """Error-scale proxy sqrt(pi * n / 2) * rho for spectrum length n."""
    if n < 1:
        raise ParameterError("spectrum length must be positive")
    return math.sqrt(math.pi * n / 2.0) * rho


def confidence_interval(
    rho: float,
    p: int,
    N: int,
    eta: float,
    v_p: int,
    jl_constant: float = 1.0,
) -> ValidationReport:
    """Two-sided error interval implied by the validation parameter.

    The true spectral error lies in [scaled/(1+eta), scaled/(1-eta)] with
    probability at least 1 - 4 exp(-v_p eta^2 / C), reported clipped to
    [0, 1] as ``confidence_floor``.
    """
    if rho < 0:
        raise ParameterError("rho must be >= 0")
    if not 0.0 < eta < 0.5:
        raise ParameterError("eta must lie in (0, 0.5)")
    if v_p < 1:
        raise ParameterError("v_p must be >= 1")
    scaled = scaled_validation_parameter(rho, p * N)
    floor = 1.0 - 4.0 * math.exp(-v_p * eta * eta / jl_constant)
    return ValidationReport(
        rho=float(rho),
        scaled_rho=scaled,
        interval_low=scaled / (1.0 + eta),
        interval_high=scaled / (1.0 - eta),
        confidence_floor=min(max(floor, 0.0), 1.0),
    )


def testing_size_noiseless(eta: float, xi: float, jl_constant: float = 1.0) -> int:
    """Testing rows needed for interval confidence 1 - xi at factor eta."""
    if not 0.0 < eta <= 0.5:
        raise ParameterError("eta must lie in (0, 0.5]")
    if not 0.0 < xi < 4.0:
        raise ParameterError("xi must lie in (0, 4)")
    if jl_constant <= 0:
        raise ParameterError("jl_constant must be positive")
    return math.ceil(jl_constant / (eta * eta) * math.log(4.0 / xi))


def noiseless_threshold(p: int, N: int, cfg: HaltingConfig, v_p: int | None = None) -> float:
    """Halting threshold on rho for the noiseless criterion.

    With a fixed confidence factor the threshold is
    threshold * (1 - eta) * sqrt(2 / (pi p N)).  When ``cfg.failure_prob``
    is set the confidence bracket 1 - sqrt((C / v_p) ln(4 / xi)) replaces
    (1 - eta); a non-positive bracket means no residual, however small, can
    satisfy the criterion at this testing size, which is reported as a
    :class:`CriterionUnsatisfiableWarning` (the threshold is then <= 0).
    """
    if cfg.mode != "noiseless":
        raise ParameterError("noiseless_threshold needs a noiseless-mode config")
    if p < 1 or N < 1:
        raise ParameterError("p and N must be positive")
    scale = math.sqrt(2.0 / (math.pi * p * N))
    if cfg.failure_prob is None:
        bracket = 1.0 - cfg.confidence_factor
    else:
        if v_p is None or v_p < 1:
            raise ParameterError(
                "the fixed-confidence criterion needs the testing size v_p"
            )
        bracket = 1.0 - math.sqrt(cfg.jl_constant / v_p * math.log(4.0 / cfg.failure_prob))
        if bracket <= 0.0:
            warnings.warn(
                f"halting criterion unsatisfiable: confidence bracket "
                f"{bracket:.4f} <= 0 at v_p = {v_p}",
                CriterionUnsatisfiableWarning,
                stacklevel=2,
            )
    return cfg.error_threshold * bracket * scale


def halt_noiseless(rho: float, p: int, N: int, cfg: HaltingConfig, v_p: int | None = None) -> bool:
    """True when the noiseless halting criterion fires."""
    if rho < 0:
        raise ParameterError("rho must be >= 0")
    return rho <= noiseless_threshold(p, N, cfg, v_p)


def halt_noisy(rho: float, cfg: HaltingConfig) -> bool:
    """True when rho sits within ``accuracy`` of the pure-noise mean."""
    if cfg.mode != "noisy":
        raise ParameterError("halt_noisy needs a noisy-mode config")
    if rho < 0:
        raise ParameterError("rho must be >= 0")
    return abs(rho - RAYLEIGH_MEAN_FACTOR * cfg.noise_std) <= cfg.accuracy


def testing_size_noisy(theta: float, delta: float, failure_prob: float) -> int:
    """Testing rows for the noisy criterion to fire with miss rate <= failure_prob."""
    if theta <= 0 or delta <= 0:
        raise ParameterError("theta and delta must be positive")
    if not 0.0 < failure_prob < 2.0:
        raise ParameterError("failure_prob must lie in (0, 2)")
    num = math.log(2.0 / failure_prob) * (FOUR_MINUS_PI * delta * delta + 2.0 * theta * delta)
    return math.ceil(num / (theta * theta))


def confidence_floor_noisy(v_p: int, theta: float, delta: float) -> float:
    """Lower bound on the noisy criterion firing when the estimate is exact."""
    if v_p < 1:
        raise ParameterError("v_p must be >= 1")
    if theta <= 0 or delta <= 0:
        raise ParameterError("theta and delta must be positive")
    floor = 1.0 - 2.0 * math.exp(
        -v_p * theta * theta / (FOUR_MINUS_PI * delta * delta + 2.0 * theta * delta)
    )
    return min(max(floor, 0.0), 1.0)


def accuracy_from_confidence(failure_prob: float, delta: float, v_p: int) -> float:
    """Smallest accuracy theta achievable at (failure_prob, v_p).

    Positive root of v theta^2 - (1/2) L delta theta - (4 - pi) L delta^2 = 0
    with L = ln(2 / failure_prob).
    """
    if not 0.0 < failure_prob < 2.0:
        raise ParameterError("failure_prob must lie in (0, 2)")
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if v_p < 1:
        raise ParameterError("v_p must be >= 1")
    log_term = math.log(2.0 / failure_prob)
    disc = log_term * log_term + 16.0 * FOUR_MINUS_PI * log_term * v_p
    return (log_term * delta + delta * math.sqrt(disc)) / (4.0 * v_p)


def empirical_interval_coverage(
    eta: float,
    v_p: int,
    trials: int,
    seed: int = 0,
    distribution: str = "gaussian_standard",
) -> float:
    """Monte Carlo estimate of the interval coverage probability.

    Draws the testing matrix from the given ensemble against fixed unit
    directions and reports the fraction of draws whose scaled l1 statistic
    lands within (1 +/- eta) of the truth.  Useful for checking how sharp the
    analytic floor is, or for calibrating ``jl_constant`` on a non-Gaussian
    ensemble.
    """
    if not 0.0 < eta < 1.0:
        raise ParameterError("eta must lie in (0, 1)")
    if v_p < 1 or trials < 1:
        raise ParameterError("v_p and trials must be >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n = 64
    direction = rng.standard_normal(n)
    direction /= np.linalg.norm(direction)
    hits = 0
    batch = max(1, min(trials, 200_000 // max(v_p, 1)))
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        if distribution == "gaussian_standard":
            psi = rng.standard_normal((b, v_p, n))
        elif distribution == "bernoulli_symmetric":
            psi = rng.integers(0, 2, size=(b, v_p, n)).astype(np.float64) * 2.0 - 1.0
        else:
            raise ParameterError(f"unknown distribution {distribution!r}")
        proj = psi @ direction
        stat = RAYLEIGH_MEAN_FACTOR * np.abs(proj).sum(axis=1) / v_p
        hits += int(np.count_nonzero((stat >= 1.0 - eta) & (stat <= 1.0 + eta)))
        done += b
    return hits / trials


def estimate_jl_constant(
    eta: float,
    v_p: int,
    trials: int = 20000,
    seed: int = 0,
    distribution: str = "gaussian_standard",
) -> float:
    """Concentration constant C matching the observed coverage.

    Solves 1 - 4 exp(-v eta^2 / C) = observed coverage; wider-tailed
    ensembles come out with larger C.
    """
    coverage = empirical_interval_coverage(eta, v_p, trials, seed, distribution)
    miss = max(1.0 - coverage, 1.0 / (4.0 * trials))
    if miss >= 1.0:
        raise ParameterError("coverage too low to resolve a constant")
    return v_p * eta * eta / math.log(4.0 / miss)
