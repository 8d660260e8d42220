import json

import numpy as np
import pytest

from widesense.engine import (
    BandDecision,
    DetectorConfig,
    FrameConfig,
    calibrate_lambda,
    energy_detect,
    iter_frame_steps,
    max_steps,
    run_frame,
    uniform_bands,
)
from widesense.errors import InvalidSpecError, ParameterError
from widesense.signals import GridSpectrumSpec, GridTone, Spectrum, WidebandSignalSpec
from widesense.validation import HaltingConfig


def _frame(**kw):
    base = dict(
        frame_length=0.8e-6,
        min_transmission=0.48e-6,
        time_step=0.04e-6,
        nyquist_rate=5e9,
        sub_nyquist_rate=1e9,
        testing_per_step=10,
    )
    base.update(kw)
    return FrameConfig(**base)


def _halting(**kw):
    base = dict(mode="noiseless", max_sparsity=48, error_threshold=1.0, confidence_factor=0.2)
    base.update(kw)
    return HaltingConfig(**base)


FOUR_TONES = GridSpectrumSpec(
    200,
    5e9,
    (GridTone(12, 1.0), GridTone(33, 0.8, 1.1), GridTone(57, 1.2, 2.0), GridTone(88, 0.9, 0.4)),
)


class TestFrameConfig:
    def test_per_step_counts(self):
        frame = _frame()
        assert frame.nyquist_per_step == 200
        assert frame.measurements_per_step == 40

    def test_rejects_fractional_sample_counts(self):
        with pytest.raises(InvalidSpecError):
            _frame(time_step=0.0401e-6)

    def test_rejects_super_nyquist_sampling(self):
        with pytest.raises(ParameterError):
            _frame(sub_nyquist_rate=5e9)

    def test_rejects_frame_without_sensing_room(self):
        with pytest.raises(ParameterError):
            _frame(min_transmission=0.79e-6)

    def test_testing_must_leave_training(self):
        with pytest.raises(ParameterError):
            _frame(testing_per_step=40)

    def test_round_trip(self):
        frame = _frame()
        assert FrameConfig.from_dict(frame.to_dict()) == frame
        with pytest.raises(ParameterError):
            FrameConfig.from_dict({**frame.to_dict(), "rate": 1.0})


def test_max_steps_examples():
    assert max_steps(FrameConfig(4e-6, 2.4e-6, 0.2e-6, 5e9, 1e9, 60)) == 8
    assert max_steps(FrameConfig(1e-6, 0.9e-6, 0.1e-6, 5e9, 1e9, 60)) == 1
    assert max_steps(FrameConfig(4e-6, 2.5e-6, 0.2e-6, 5e9, 1e9, 60)) == 7


class TestDetectorConfig:
    def test_validates_bands(self):
        with pytest.raises(ParameterError):
            DetectorConfig(bands=(), threshold=1.0)
        with pytest.raises(ParameterError):
            DetectorConfig(bands=((10.0, 5.0),), threshold=1.0)
        with pytest.raises(ParameterError):
            DetectorConfig(bands=((0.0, 10.0),), threshold=0.0)

    def test_round_trip(self):
        det = DetectorConfig(bands=((0.0, 1e9), (1e9, 2.5e9)), threshold=2.0)
        assert DetectorConfig.from_dict(det.to_dict()) == det


def test_uniform_bands_cover_the_interval():
    bands = uniform_bands(2.5e9, 4)
    assert len(bands) == 4
    assert bands[0][0] == 0.0
    assert bands[-1][1] == 2.5e9
    for (_, hi), (lo, _) in zip(bands, bands[1:]):
        assert hi == lo
    with pytest.raises(ParameterError):
        uniform_bands(0.0, 4)


class TestIterFrameSteps:
    def test_step_shapes_grow_linearly(self):
        frame = _frame()
        seen = []
        for p, ms, _ in iter_frame_steps(FOUR_TONES, frame, _halting(min_testing=10_000), 5):
            seen.append(p)
            assert ms.phi.shape == (30 * p, 200 * p)
            assert ms.psi.shape == (10 * p, 200 * p)
            assert ms.step_index == p
            if p == 3:
                break
        assert seen == [1, 2, 3]

    def test_stops_after_criterion(self):
        frame = _frame()
        steps = list(iter_frame_steps(FOUR_TONES, frame, _halting(), 7))
        assert steps[-1][2].halted_by == "criterion"
        assert all(rec.halted_by != "criterion" for _, _, rec in steps[:-1])

    def test_fresh_matrices_each_step(self):
        frame = _frame()
        it = iter_frame_steps(FOUR_TONES, frame, _halting(min_testing=10_000), 5)
        _, ms1, _ = next(it)
        _, ms2, _ = next(it)
        assert not np.array_equal(ms1.phi[:, :200], ms2.phi[:30, :200])

    def test_rejects_mismatched_signal(self):
        frame = _frame()
        wrong_rate = GridSpectrumSpec(200, 4e9, ())
        with pytest.raises(InvalidSpecError):
            next(iter_frame_steps(wrong_rate, frame, _halting(), 0))
        wrong_length = GridSpectrumSpec(100, 5e9, ())
        with pytest.raises(InvalidSpecError):
            next(iter_frame_steps(wrong_length, frame, _halting(), 0))
        wideband_off = WidebandSignalSpec(total_bandwidth=1e9, subbands=())
        with pytest.raises(InvalidSpecError):
            next(iter_frame_steps(wideband_off, frame, _halting(), 0))


class TestRunFrame:
    def test_four_tone_frame_halts_early(self):
        out = run_frame(FOUR_TONES, _frame(), _halting(), DetectorConfig(uniform_bands(2.5e9, 4), 0.5), 7)
        assert out.halted
        assert out.steps_used == 2
        assert out.saved_slots == 6
        assert not out.recommend_rate_increase
        # every tone sits on its mirrored pair of the doubled grid
        p = out.steps_used
        expected = set()
        for tone in FOUR_TONES.tones:
            expected |= {p * tone.bin_index, 200 * p - p * tone.bin_index}
        assert set(out.recovery.support) == expected
        # one tone per detector band: 300, 825, 1425, 2200 MHz
        assert out.occupied_bands() == uniform_bands(2.5e9, 4)
        assert out.estimate.bin_resolution == pytest.approx(5e9 / 400)

    def test_zero_signal_halts_in_one_step(self):
        silent = GridSpectrumSpec(200, 5e9, ())
        out = run_frame(silent, _frame(), _halting(), DetectorConfig(uniform_bands(2.5e9, 4), 0.5), 7)
        assert out.halted
        assert out.steps_used == 1
        assert out.saved_slots == 7
        assert all(d.decision == "H0" for d in out.per_band_decisions)

    def test_exhausted_budget_recommends_rate_increase(self):
        halting = _halting(min_testing=10_000)
        out = run_frame(FOUR_TONES, _frame(), halting, DetectorConfig(uniform_bands(2.5e9, 4), 0.5), 7)
        assert not out.halted
        assert out.steps_used == 8
        assert out.saved_slots == 0
        assert out.recommend_rate_increase

    def test_outcome_json(self):
        out = run_frame(FOUR_TONES, _frame(), _halting(), DetectorConfig(uniform_bands(2.5e9, 4), 0.5), 7)
        payload = json.loads(out.to_json())
        assert payload["halted"] is True
        assert payload["steps_used"] == 2
        assert payload["halted_by"] == "criterion"
        assert sorted(payload["spectrum_support"]) == sorted(out.recovery.support)
        assert len(payload["spectrum_values"]) == len(payload["spectrum_support"])
        assert len(payload["decisions"]) == 4


class TestEnergyDetect:
    def test_mirror_bins_pool_into_the_band(self):
        bins = np.zeros(10, dtype=complex)
        bins[2] = 3.0
        bins[7] = 4.0  # mirror of bin 3
        spectrum = Spectrum(bins=bins, bin_resolution=1.0)
        energy, decision = energy_detect(spectrum, (2.0, 3.0), 24.0)
        assert energy == pytest.approx(25.0)
        assert decision == "H1"

    def test_strictly_above_threshold(self):
        bins = np.zeros(10, dtype=complex)
        bins[1] = 2.0
        spectrum = Spectrum(bins=bins, bin_resolution=1.0)
        energy, decision = energy_detect(spectrum, (0.9, 1.1), 4.0)
        assert energy == pytest.approx(4.0)
        assert decision == "H0"

    def test_empty_band_warns(self):
        spectrum = Spectrum(bins=np.ones(10, dtype=complex), bin_resolution=1.0)
        with pytest.warns(UserWarning):
            energy, decision = energy_detect(spectrum, (4.4, 4.6), 1.0)
        assert energy == 0.0 and decision == "H0"

    def test_needs_resolution(self):
        with pytest.raises(ParameterError):
            energy_detect(Spectrum(bins=np.ones(4, dtype=complex)), (0.0, 1.0), 1.0)


class TestCalibrateLambda:
    def test_zero_energy_fallback(self):
        # the wide-accuracy criterion halts at zero iterations, so every
        # noise-only estimate is exactly zero and the quantile falls back
        halting = HaltingConfig(mode="noisy", max_sparsity=8, noise_std=0.5, accuracy=0.3)
        lam = calibrate_lambda(_frame(), halting, uniform_bands(2.5e9, 4), 0.1, 5, 3)
        assert lam == 1e-12

    def test_positive_quantile_and_determinism(self):
        halting = HaltingConfig(mode="noisy", max_sparsity=8, noise_std=0.5, accuracy=0.05)
        lam = calibrate_lambda(_frame(), halting, uniform_bands(2.5e9, 4), 0.25, 5, 3)
        assert lam == pytest.approx(10.331295871551935)
        again = calibrate_lambda(_frame(), halting, uniform_bands(2.5e9, 4), 0.25, 5, 3)
        assert again == lam

    def test_requires_noisy_mode(self):
        with pytest.raises(ParameterError):
            calibrate_lambda(_frame(), _halting(), uniform_bands(2.5e9, 4), 0.1, 2, 0)

    def test_argument_ranges(self):
        halting = HaltingConfig(mode="noisy", max_sparsity=8, noise_std=0.5, accuracy=0.3)
        with pytest.raises(ParameterError):
            calibrate_lambda(_frame(), halting, uniform_bands(2.5e9, 4), 1.5, 2, 0)
        with pytest.raises(ParameterError):
            calibrate_lambda(_frame(), halting, uniform_bands(2.5e9, 4), 0.1, 0, 0)


def test_run_frame_determinism():
    det = DetectorConfig(uniform_bands(2.5e9, 4), 0.5)
    a = run_frame(FOUR_TONES, _frame(), _halting(), det, 11)
    b = run_frame(FOUR_TONES, _frame(), _halting(), det, 11)
    assert a.to_json() == b.to_json()
    c = run_frame(FOUR_TONES, _frame(), _halting(), det, 12)
    assert a.steps_used == b.steps_used
    assert c.to_json() != a.to_json() or c.steps_used != a.steps_used
