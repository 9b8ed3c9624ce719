"""Synthetic illuminators and two-channel passive sensing scenes.

Stands in for the RF front end: a transmitter waveform is generated, then a
scene turns it into a clean reference channel and a surveillance channel that
carries direct-signal leakage, moving reflectors and receiver noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import SPEED_OF_LIGHT, IqFrame

WAVEFORM_KINDS = ("wifi_bursts", "cw")
MOTION_KINDS = ("gesture_sine", "tremor", "breathing", "composite", "constant_velocity")


@dataclass(frozen=True)
class WaveformSpec:
    """Transmitter waveform description.

    Waveforms are generated at unit amplitude; ``power_dbm`` is the nominal
    emitter level and is folded into the scene gains rather than the samples.
    """

    kind: str = "wifi_bursts"
    bandwidth_hz: float = 11e6
    burst_len_s: float = 2e-3
    gap_min_s: float = 5e-3
    gap_max_s: float = 20e-3
    power_dbm: float = 15.0

    def __post_init__(self):
        if self.kind not in WAVEFORM_KINDS:
            raise ValueError(f"unknown waveform kind {self.kind!r}")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.burst_len_s <= 0:
            raise ValueError("burst_len_s must be positive")
        if self.gap_min_s < 0 or self.gap_max_s < self.gap_min_s:
            raise ValueError("need 0 <= gap_min_s <= gap_max_s")


@dataclass(frozen=True)
class MotionModel:
    """Displacement of a reflector along the line of sight.

    Positive displacement shortens the propagation path. ``jitter`` is an
    optional ``(amplitude_m, rate_hz)`` sinusoid added on top of the primary
    motion (tremor riding on a slower hand movement). ``composite`` sums its
    ``components``; ``constant_velocity`` moves at ``velocity_mps``.
    """

    kind: str
    amplitude_m: float = 0.0
    rate_hz: float = 0.0
    jitter: tuple[float, float] | None = None
    components: tuple["MotionModel", ...] = ()
    velocity_mps: float = 0.0
    phase_rad: float = 0.0

    def __post_init__(self):
        if self.kind not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {self.kind!r}")
        if self.kind == "composite":
            if not self.components:
                raise ValueError("composite motion needs components")
        elif self.kind != "constant_velocity":
            if not self.amplitude_m > 0 or not self.rate_hz > 0:
                raise ValueError(f"{self.kind} motion needs amplitude_m > 0 and rate_hz > 0")
        if self.jitter is not None:
            a, r = self.jitter
            if not a > 0 or not r > 0:
                raise ValueError("jitter needs positive amplitude and rate")

    @property
    def peak_excursion_m(self) -> float:
        """Upper bound on ``|displacement|`` for periodic motions."""
        if self.kind == "composite":
            total = sum(c.peak_excursion_m for c in self.components)
        elif self.kind == "constant_velocity":
            return np.inf
        else:
            total = self.amplitude_m
        if self.jitter is not None:
            total += self.jitter[0]
        return total


@dataclass(frozen=True)
class Reflector:
    gain_db: float
    motion: MotionModel


@dataclass(frozen=True)
class Scene:
    """Propagation paths into the surveillance antenna.

    ``noise_power_db`` is complex AWGN power relative to a unit-power signal;
    ``None`` disables noise.
    """

    carrier_hz: float = 2.4e9
    direct_path_gain_db: float = -10.0
    reflectors: tuple[Reflector, ...] = field(default_factory=tuple)
    noise_power_db: float | None = None

    def __post_init__(self):
        if not self.carrier_hz > 0:
            raise ValueError("carrier_hz must be positive")
        gains = [self.direct_path_gain_db] + [r.gain_db for r in self.reflectors]
        if not all(np.isfinite(g) for g in gains):
            raise ValueError("path gains must be finite")
        object.__setattr__(self, "reflectors", tuple(self.reflectors))

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz


def _burst_gate(n: int, fs: float, spec: WaveformSpec, rng: np.random.Generator) -> np.ndarray:
    gate = np.zeros(n, dtype=bool)
    burst = max(1, int(round(spec.burst_len_s * fs)))
    t = rng.uniform(spec.gap_min_s, spec.gap_max_s)
    while True:
        start = int(round(t * fs))
        if start >= n:
            break
        gate[start:start + burst] = True
        t += burst / fs + rng.uniform(spec.gap_min_s, spec.gap_max_s)
    return gate


def gen_waveform(spec: WaveformSpec, duration_s: float, sample_rate_hz: float,
                 seed: int = 0, carrier_hz: float = 2.4e9) -> IqFrame:
    """Generate ``duration_s`` of the transmitted waveform.

    ``wifi_bursts`` yields unit-modulus QPSK chips at ``bandwidth_hz`` chip
    rate, gated into bursts separated by uniformly drawn gaps. ``cw`` yields a
    constant unit sample stream. Output is a deterministic function of the
    arguments.
    """
    if not duration_s > 0:
        raise ValueError("duration_s must be positive")
    if not sample_rate_hz > 0:
        raise ValueError("sample_rate_hz must be positive")
    n = int(round(duration_s * sample_rate_hz))
    if n < 1:
        raise ValueError("duration shorter than one sample")
    if spec.kind == "cw":
        return IqFrame(np.ones(n, dtype=np.complex128), sample_rate_hz, carrier_hz)

    if sample_rate_hz < spec.bandwidth_hz:
        raise ValueError(
            f"sample rate {sample_rate_hz:g} Hz is below the {spec.bandwidth_hz:g} Hz bandwidth")
    rng = np.random.default_rng(seed)
    chip_idx = np.floor(np.arange(n) * (spec.bandwidth_hz / sample_rate_hz)).astype(np.int64)
    symbols = rng.integers(0, 4, size=int(chip_idx[-1]) + 1)
    chips = np.exp(1j * (np.pi / 4 + np.pi / 2 * symbols))
    x = chips[chip_idx]
    x[~_burst_gate(n, sample_rate_hz, spec, rng)] = 0.0
    return IqFrame(x, sample_rate_hz, carrier_hz)


def motion_displacement(model: MotionModel, t):
    """Line-of-sight displacement [m] at time(s) ``t``."""
    t = np.asarray(t, dtype=np.float64)
    if model.kind == "composite":
        d = sum(motion_displacement(c, t) for c in model.components)
    elif model.kind == "constant_velocity":
        d = model.velocity_mps * t
    else:
        d = model.amplitude_m * np.sin(2 * np.pi * model.rate_hz * t + model.phase_rad)
    if model.jitter is not None:
        a, r = model.jitter
        d = d + a * np.sin(2 * np.pi * r * t)
    return d if d.ndim else float(d)


def apply_scene(tx: IqFrame, scene: Scene, seed: int = 0) -> tuple[IqFrame, IqFrame]:
    """Split a transmitted frame into ``(reference, surveillance)`` channels.

    The reference is the transmitted signal itself. Each reflector imposes the
    round-trip phase ``2 * 2 * pi * d(t) / wavelength``, so a reflector closing
    at ``v`` m/s produces a Doppler line at ``+2 * v / wavelength``.
    """
    x = tx.samples
    t = tx.times()
    surv = 10 ** (scene.direct_path_gain_db / 20) * x
    for refl in scene.reflectors:
        phase = 4 * np.pi * motion_displacement(refl.motion, t) / scene.wavelength_m
        surv = surv + 10 ** (refl.gain_db / 20) * x * np.exp(1j * phase)
    if scene.noise_power_db is not None:
        rng = np.random.default_rng(seed)
        sigma = np.sqrt(10 ** (scene.noise_power_db / 10) / 2)
        surv = surv + sigma * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    ref = IqFrame(x, tx.sample_rate_hz, scene.carrier_hz, tx.start_time_s)
    return ref, IqFrame(surv, tx.sample_rate_hz, scene.carrier_hz, tx.start_time_s)


def doppler_hz(velocity_mps: float, carrier_hz: float) -> float:
    """Quasi-monostatic Doppler shift ``2 v f0 / c`` [Hz]."""
    return 2.0 * velocity_mps * carrier_hz / SPEED_OF_LIGHT
