import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwsense.core import SPEED_OF_LIGHT
from pwsense.synth import (MotionModel, Reflector, Scene, WaveformSpec, apply_scene,
                           doppler_hz, gen_waveform, motion_displacement)

BURSTY = WaveformSpec(bandwidth_hz=100e3)


class TestWaveform:
    def test_cw(self):
        f = gen_waveform(WaveformSpec(kind="cw"), 1.0, 1000.0)
        assert len(f) == 1000 and np.all(f.samples == 1)

    def test_duty_cycle_bounds(self):
        f = gen_waveform(BURSTY, 1.0, 200e3, seed=4)
        duty = np.mean(f.samples != 0)
        assert 2 / 22 <= duty <= 2 / 7

    def test_mean_duty_cycle(self):
        duty = [np.mean(gen_waveform(BURSTY, 1.0, 200e3, seed=s).samples != 0)
                for s in range(20)]
        assert np.mean(duty) == pytest.approx(2 / (2 + 12.5), rel=0.1)

    def test_unit_modulus_chips(self):
        x = gen_waveform(BURSTY, 0.2, 200e3, seed=1).samples
        on = x[x != 0]
        assert np.allclose(np.abs(on), 1.0)
        # QPSK constellation at odd multiples of 45 degrees
        assert np.allclose(np.abs(on.real), np.sqrt(0.5))
        assert np.allclose(np.abs(on.imag), np.sqrt(0.5))

    def test_chip_rate(self):
        x = gen_waveform(BURSTY, 0.5, 200e3, seed=2).samples
        # two samples per chip at 200 kHz / 100 kHz
        on = np.flatnonzero(x != 0)
        pairs = on[(on % 2 == 0) & np.isin(on + 1, on)]
        assert np.array_equal(x[pairs], x[pairs + 1])

    def test_deterministic(self):
        a = gen_waveform(BURSTY, 0.3, 200e3, seed=9)
        b = gen_waveform(BURSTY, 0.3, 200e3, seed=9)
        c = gen_waveform(BURSTY, 0.3, 200e3, seed=10)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_rate_below_bandwidth(self):
        with pytest.raises(ValueError, match="bandwidth"):
            gen_waveform(WaveformSpec(), 0.1, 200e3)

    @pytest.mark.parametrize("kwargs", [dict(kind="ofdm"), dict(bandwidth_hz=0),
                                        dict(burst_len_s=0), dict(gap_min_s=-1),
                                        dict(gap_min_s=0.02, gap_max_s=0.01)])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            WaveformSpec(**kwargs)

    @pytest.mark.parametrize("dur,fs", [(0.0, 1e3), (1.0, 0.0), (1e-6, 1e3)])
    def test_bad_duration(self, dur, fs):
        with pytest.raises(ValueError):
            gen_waveform(WaveformSpec(kind="cw"), dur, fs)


class TestMotion:
    def test_breathing_starts_at_zero(self):
        m = MotionModel("breathing", 0.01, 14 / 60)
        assert motion_displacement(m, 0.0) == 0.0

    def test_tremor_with_jitter(self):
        m = MotionModel("tremor", 0.005, 5.0, jitter=(0.002, 11.0))
        t = 0.05
        expected = 0.005 * np.sin(2 * np.pi * 5 * t) + 0.002 * np.sin(2 * np.pi * 11 * t)
        assert motion_displacement(m, t) == pytest.approx(expected)

    def test_composite_and_velocity(self):
        parts = (MotionModel("gesture_sine", 0.1, 0.5), MotionModel("tremor", 0.01, 5.0))
        m = MotionModel("composite", components=parts)
        t = np.linspace(0, 2, 50)
        assert np.allclose(motion_displacement(m, t),
                           sum(motion_displacement(p, t) for p in parts))
        v = MotionModel("constant_velocity", velocity_mps=0.5)
        assert np.allclose(motion_displacement(v, t), 0.5 * t)

    @pytest.mark.parametrize("kwargs", [dict(kind="walk", amplitude_m=1, rate_hz=1),
                                        dict(kind="tremor", amplitude_m=0, rate_hz=1),
                                        dict(kind="tremor", amplitude_m=1, rate_hz=0),
                                        dict(kind="composite"),
                                        dict(kind="tremor", amplitude_m=1, rate_hz=1,
                                             jitter=(0, 1))])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            MotionModel(**kwargs)

    @settings(max_examples=50)
    @given(a=st.floats(1e-4, 1), rate=st.floats(0.01, 20), ja=st.floats(1e-4, 0.1),
           t=st.floats(0, 100))
    def test_bounded(self, a, rate, ja, t):
        m = MotionModel("gesture_sine", a, rate, jitter=(ja, 3.0))
        assert abs(motion_displacement(m, t)) <= m.peak_excursion_m + 1e-12


class TestScene:
    def test_identity_channel(self, rng):
        tx = gen_waveform(BURSTY, 0.05, 200e3, seed=1)
        ref, surv = apply_scene(tx, Scene(direct_path_gain_db=0.0))
        assert np.array_equal(ref.samples, tx.samples)
        assert np.array_equal(surv.samples, ref.samples)

    def test_doppler_formula(self):
        assert doppler_hz(0.625, 2.4e9) == pytest.approx(10.0, rel=1e-3)
        assert doppler_hz(1.0, SPEED_OF_LIGHT) == 2.0

    def test_constant_velocity_line(self):
        fs, n = 1000.0, 4000
        v = 0.625
        tx = gen_waveform(WaveformSpec(kind="cw"), n / fs, fs)
        scene = Scene(direct_path_gain_db=-300.0,
                      reflectors=(Reflector(0.0, MotionModel("constant_velocity", velocity_mps=v)),))
        ref, surv = apply_scene(tx, scene)
        spec = np.abs(np.fft.fft(surv.samples * np.conj(ref.samples)))
        freqs = np.fft.fftfreq(n, 1 / fs)
        assert abs(freqs[np.argmax(spec)] - doppler_hz(v, 2.4e9)) <= fs / n

    def test_gesture_swing(self):
        # instantaneous Doppler of a 0.02 m, 0.5 Hz sway swings about +-1 Hz
        fs = 1000.0
        m = MotionModel("gesture_sine", 0.02, 0.5)
        tx = gen_waveform(WaveformSpec(kind="cw"), 4.0, fs)
        scene = Scene(direct_path_gain_db=-300.0, reflectors=(Reflector(0.0, m),))
        _, surv = apply_scene(tx, scene)
        inst = np.diff(np.unwrap(np.angle(surv.samples))) * fs / (2 * np.pi)
        expected = 4 * np.pi * 0.02 * 0.5 / scene.wavelength_m
        assert np.max(np.abs(inst)) == pytest.approx(expected, rel=1e-3)
        assert expected == pytest.approx(1.0, abs=0.01)

    def test_noise_power(self):
        tx = gen_waveform(WaveformSpec(kind="cw"), 1.0, 100e3)
        _, surv = apply_scene(tx, Scene(direct_path_gain_db=-300.0, noise_power_db=-20.0), seed=3)
        assert np.mean(np.abs(surv.samples) ** 2) == pytest.approx(0.01, rel=0.03)

    def test_gain_scaling(self):
        for seed in range(5):
            tx = gen_waveform(BURSTY, 0.2, 200e3, seed=seed)
            scene = Scene(direct_path_gain_db=-7.0)
            ref, surv = apply_scene(tx, scene)
            ratio_db = 10 * np.log10(np.sum(np.abs(surv.samples) ** 2)
                                     / np.sum(np.abs(ref.samples) ** 2))
            assert ratio_db == pytest.approx(-7.0, abs=0.1)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 1000), a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_linear_in_tx(self, seed, a, b):
        rng = np.random.default_rng(seed)
        x1 = rng.standard_normal(256) + 1j * rng.standard_normal(256)
        x2 = rng.standard_normal(256) + 1j * rng.standard_normal(256)
        base = gen_waveform(WaveformSpec(kind="cw"), 256 / 1e3, 1e3)
        scene = Scene(reflectors=(Reflector(-6.0, MotionModel("tremor", 0.01, 3.0)),))
        f = lambda x: apply_scene(base.with_samples(x), scene)[1].samples
        assert np.allclose(f(a * x1 + b * x2), a * f(x1) + b * f(x2), atol=1e-9)

    def test_scene_validation(self):
        with pytest.raises(ValueError):
            Scene(carrier_hz=0)
        with pytest.raises(ValueError):
            Scene(direct_path_gain_db=np.inf)
        assert Scene().reflectors == ()
