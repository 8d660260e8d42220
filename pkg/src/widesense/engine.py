"""Sequential sensing frames: sample step by step, halt early, detect bands.

A frame divides its sensing budget into steps of length ``time_step``.  Each
step extends the observation window, acquires fresh compressive measurements
of the longer signal, and reruns sparsity-agnostic recovery.  The frame
halts as soon as the validation criterion fires, banking the remaining
steps for data transmission; if the budget runs out first the outcome
carries a recommendation to raise the sampling rate next frame.

Spectral occupancy decisions come from per-band energy detection on the
final estimate.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpecError, ParameterError
from .recovery import RecoveryResult, sasr
from .rng import stream_seed
from .sensing import RandomMatrixSpec, acquire, draw_matrix
from .signals import (
    GridSpectrumSpec,
    Spectrum,
    WidebandSignalSpec,
    signal_time_series,
    _integer_count,
)
from .validation import HaltingConfig

__all__ = [
    "FrameConfig",
    "DetectorConfig",
    "BandDecision",
    "SensingOutcome",
    "max_steps",
    "iter_frame_steps",
    "run_frame",
    "energy_detect",
    "calibrate_lambda",
    "uniform_bands",
]


@dataclass(frozen=True)
class FrameConfig:
    """Timing and sampling-rate layout of one periodic sensing frame."""

    frame_length: float
    min_transmission: float
    time_step: float
    nyquist_rate: float
    sub_nyquist_rate: float
    testing_per_step: int

    def __post_init__(self) -> None:
        for name in ("frame_length", "min_transmission", "time_step",
                     "nyquist_rate", "sub_nyquist_rate"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if self.sub_nyquist_rate >= self.nyquist_rate:
            raise ParameterError("sub_nyquist_rate must stay below nyquist_rate")
        # Both per-step sample counts must come out integer.
        _integer_count(self.nyquist_rate * self.time_step,
                       "nyquist_rate * time_step")
        _integer_count(self.sub_nyquist_rate * self.time_step,
                       "sub_nyquist_rate * time_step")
        if self.frame_length - self.min_transmission < self.time_step * (1 - 1e-9):
            raise ParameterError(
                "frame must leave room for at least one sensing step"
            )
        if self.testing_per_step < 1:
            raise ParameterError("testing_per_step must be >= 1")
        if self.testing_per_step >= self.measurements_per_step:
            raise ParameterError(
                "testing_per_step must leave at least one training row per step"
            )

    @property
    def nyquist_per_step(self) -> int:
        return _integer_count(self.nyquist_rate * self.time_step, "N")

    @property
    def measurements_per_step(self) -> int:
        return _integer_count(self.sub_nyquist_rate * self.time_step, "M_1")

    def to_dict(self) -> dict:
        return {
            "frame_length": self.frame_length,
            "min_transmission": self.min_transmission,
            "time_step": self.time_step,
            "nyquist_rate": self.nyquist_rate,
            "sub_nyquist_rate": self.sub_nyquist_rate,
            "testing_per_step": self.testing_per_step,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "FrameConfig":
        extra = set(raw) - set(cls.__dataclass_fields__)
        if extra:
            raise ParameterError(f"unknown frame config keys: {sorted(extra)}")
        return cls(**raw)


@dataclass(frozen=True)
class DetectorConfig:
    """Energy-detection bands (Hz intervals) and the shared threshold."""

    bands: tuple[tuple[float, float], ...]
    threshold: float

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ParameterError("detection threshold must be positive")
        if not self.bands:
            raise ParameterError("detector needs at least one band")
        clean = []
        for band in self.bands:
            low, high = float(band[0]), float(band[1])
            if low < 0 or high <= low:
                raise ParameterError(f"invalid band ({low}, {high})")
            clean.append((low, high))
        object.__setattr__(self, "bands", tuple(clean))

    def to_dict(self) -> dict:
        return {"bands": [list(b) for b in self.bands],
                "threshold": self.threshold}

    @classmethod
    def from_dict(cls, raw: dict) -> "DetectorConfig":
        extra = set(raw) - {"bands", "threshold"}
        if extra:
            raise ParameterError(f"unknown detector config keys: {sorted(extra)}")
        return cls(bands=tuple(tuple(b) for b in raw["bands"]),
                   threshold=raw["threshold"])


@dataclass(frozen=True)
class BandDecision:
    low: float
    high: float
    energy: float
    decision: str  # "H0" or "H1"


@dataclass(frozen=True)
class SensingOutcome:
    """What one sensing frame produced."""

    halted: bool
    steps_used: int
    estimate: Spectrum
    recovery: RecoveryResult
    per_band_decisions: tuple[BandDecision, ...]
    saved_slots: int
    recommend_rate_increase: bool

    def occupied_bands(self) -> tuple[tuple[float, float], ...]:
        return tuple((d.low, d.high) for d in self.per_band_decisions
                     if d.decision == "H1")

    def to_json(self) -> str:
        bins = self.estimate.bins
        support = np.flatnonzero(bins != 0)
        payload = {
            "halted": self.halted,
            "steps_used": self.steps_used,
            "saved_slots": self.saved_slots,
            "recommend_rate_increase": self.recommend_rate_increase,
            "iterations": self.recovery.iterations,
            "halted_by": self.recovery.halted_by,
            "spectrum_length": len(bins),
            "spectrum_support": support.tolist(),
            "spectrum_values": [[float(bins[j].real), float(bins[j].imag)]
                                for j in support],
            "decisions": [
                {"low": d.low, "high": d.high, "energy": d.energy,
                 "decision": d.decision}
                for d in self.per_band_decisions
            ],
        }
        return json.dumps(payload)


def max_steps(frame: FrameConfig) -> int:
    """Largest step count leaving ``min_transmission`` for data."""
    budget = (frame.frame_length - frame.min_transmission) / frame.time_step
    return int(math.floor(budget + 1e-9))


def _check_spec(spec, frame: FrameConfig) -> None:
    if isinstance(spec, WidebandSignalSpec):
        if not math.isclose(spec.nyquist_rate, frame.nyquist_rate,
                            rel_tol=1e-9):
            raise InvalidSpecError(
                "signal nyquist_rate differs from the frame's"
            )
    elif isinstance(spec, GridSpectrumSpec):
        if not math.isclose(spec.nyquist_rate, frame.nyquist_rate,
                            rel_tol=1e-9):
            raise InvalidSpecError(
                "grid spectrum nyquist_rate differs from the frame's"
            )
        if spec.reference_length != frame.nyquist_per_step:
            raise InvalidSpecError(
                "grid spectrum reference_length must equal the per-step "
                "Nyquist count"
            )
    else:
        raise InvalidSpecError(f"unsupported signal spec {type(spec).__name__}")


def iter_frame_steps(spec, frame: FrameConfig, halting: HaltingConfig,
                     master_seed: int):
    """Yield ``(p, measurements, recovery)`` per step until halt or budget.

    Measurement matrices are drawn fresh each step (standard normal), with
    per-step noise when the halting mode is "noisy".  The generator stops
    after the step whose recovery reports ``halted_by == "criterion"``.
    """
    _check_spec(spec, frame)
    p_max = max_steps(frame)
    n_step = frame.nyquist_per_step
    m_step = frame.measurements_per_step
    v = frame.testing_per_step
    delta = halting.noise_std if halting.mode == "noisy" else 0.0
    for p in range(1, p_max + 1):
        ts = signal_time_series(spec, p * frame.time_step)
        cols = p * n_step
        r_p = (m_step - v) * p
        v_p = v * p
        phi = draw_matrix(RandomMatrixSpec(
            rows=r_p, cols=cols, seed=stream_seed(master_seed, "phi", p)))
        psi = draw_matrix(RandomMatrixSpec(
            rows=v_p, cols=cols, seed=stream_seed(master_seed, "psi", p)))
        ms = acquire(ts, phi, psi, noise_std=delta,
                     noise_seed=stream_seed(master_seed, "noise", p),
                     step_index=p)
        recovery = sasr(ms, halting)
        yield p, ms, recovery
        if recovery.halted_by == "criterion":
            return


def run_frame(spec, frame: FrameConfig, halting: HaltingConfig,
              detector: DetectorConfig, master_seed: int) -> SensingOutcome:
    """Run one complete sensing frame and decide band occupancy."""
    p_final = 0
    recovery: RecoveryResult | None = None
    for p, _, rec in iter_frame_steps(spec, frame, halting, master_seed):
        p_final, recovery = p, rec
    assert recovery is not None
    halted = recovery.halted_by == "criterion"
    bins = recovery.estimate.bins
    estimate = Spectrum(bins=bins,
                        bin_resolution=frame.nyquist_rate / len(bins))
    decisions = []
    for low, high in detector.bands:
        energy, decision = energy_detect(estimate, (low, high),
                                         detector.threshold)
        decisions.append(BandDecision(low=low, high=high, energy=energy,
                                      decision=decision))
    p_max = max_steps(frame)
    return SensingOutcome(
        halted=halted,
        steps_used=p_final,
        estimate=estimate,
        recovery=recovery,
        per_band_decisions=tuple(decisions),
        saved_slots=p_max - p_final,
        recommend_rate_increase=not halted,
    )


def energy_detect(estimate: Spectrum, band, threshold: float):
    """Energy of the estimate inside ``band`` and the H0/H1 decision.

    Bin i of an n-bin spectrum represents the frequency min(i, n - i)
    times the bin resolution, so a band collects each bin and its mirror.
    Decision is "H1" only for energy strictly above the threshold.
    """
    if threshold <= 0:
        raise ParameterError("detection threshold must be positive")
    if estimate.bin_resolution is None:
        raise ParameterError("estimate needs a bin_resolution for detection")
    low, high = float(band[0]), float(band[1])
    if low < 0 or high <= low:
        raise ParameterError(f"invalid band ({low}, {high})")
    bins = estimate.bins
    n = len(bins)
    idx = np.arange(n)
    freqs = np.minimum(idx, n - idx) * estimate.bin_resolution
    sel = (freqs >= low) & (freqs <= high)
    if not sel.any():
        warnings.warn(
            f"band ({low:.6g}, {high:.6g}) Hz contains no spectrum bins",
            UserWarning,
            stacklevel=2,
        )
        return 0.0, "H0"
    energy = float(np.sum(np.abs(bins[sel]) ** 2))
    return energy, "H1" if energy > threshold else "H0"


def uniform_bands(total_bandwidth: float, count: int):
    """``count`` equal-width contiguous bands covering [0, total_bandwidth]."""
    if total_bandwidth <= 0 or count < 1:
        raise ParameterError("need positive bandwidth and at least one band")
    edges = np.linspace(0.0, total_bandwidth, count + 1)
    return tuple((float(edges[i]), float(edges[i + 1])) for i in range(count))


def calibrate_lambda(frame: FrameConfig, halting: HaltingConfig, bands,
                     false_alarm: float, trials: int,
                     master_seed: int) -> float:
    """Detection threshold holding the false-alarm rate on noise-only frames.

    Runs ``trials`` frames against a zero signal, pools the per-band
    energies of the final estimates, and returns the (1 - false_alarm)
    quantile.  Sparse estimates leave most energies exactly zero; when the
    quantile lands there, half the smallest positive energy is returned so
    the threshold stays positive and still clears the observed noise floor.
    """
    if not 0.0 < false_alarm < 1.0:
        raise ParameterError("false_alarm must lie in (0, 1)")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if halting.mode != "noisy":
        raise ParameterError("lambda calibration needs a noisy halting mode")
    spec = GridSpectrumSpec(reference_length=frame.nyquist_per_step,
                            nyquist_rate=frame.nyquist_rate, tones=())
    # Threshold value is irrelevant during calibration; reuse a dummy one.
    detector = DetectorConfig(bands=tuple(bands), threshold=1.0)
    energies = []
    for t in range(trials):
        outcome = run_frame(spec, frame, halting, detector,
                            stream_seed(master_seed, "calibrate", t))
        energies.extend(d.energy for d in outcome.per_band_decisions)
    energies = np.asarray(energies)
    lam = float(np.quantile(energies, 1.0 - false_alarm, method="higher"))
    if lam <= 0.0:
        positive = energies[energies > 0]
        lam = float(positive.min() / 2) if positive.size else 1e-12
    return lam
