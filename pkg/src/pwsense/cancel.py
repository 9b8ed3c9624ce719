"""Direct-signal interference cancellation.

Two complementary routes: CLEAN subtracts scaled copies of the reference
self-ambiguity surface from a computed CAF, and NLMS removes the
reference-correlated part of the surveillance stream before any CAF is formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .caf import CafSurface, caf_direct
from .core import DelayGrid, DopplerGrid, IqFrame, check_pair

# Zero-Doppler peaks this far below the surface maximum count as already removed.
_NUMERICAL_FLOOR = 1e-12


@dataclass(frozen=True)
class CleanConfig:
    max_iterations: int = 10
    stop_threshold_db: float = 40.0
    loop_gain: float = 1.0

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be an integer >= 1")
        if not 0 < self.loop_gain <= 1:
            raise ValueError("loop_gain must be in (0, 1]")


@dataclass(frozen=True)
class NlmsConfig:
    num_taps: int = 32
    step_mu: float = 0.5
    regularizer_eps: float = 1e-9

    def __post_init__(self):
        if int(self.num_taps) != self.num_taps or self.num_taps < 1:
            raise ValueError("num_taps must be an integer >= 1")
        if not 0 < self.step_mu < 2:
            raise ValueError("step_mu must be in (0, 2)")
        if not self.regularizer_eps > 0:
            raise ValueError("regularizer_eps must be positive")


def self_ambiguity(ref: IqFrame, delays: DelayGrid | None = None,
                   dopplers: DopplerGrid | None = None) -> CafSurface:
    """Ambiguity surface of the reference against itself."""
    return caf_direct(ref, ref, delays, dopplers)


def _shifted_reference(ref_surface: CafSurface, shift: int) -> np.ndarray:
    """Reference surface re-centred so its zero lag sits at lag ``shift``.

    Negative lags use ``A(-m, f) = exp(2j*pi*f*m/fs) * conj(A(m, -f))``, which
    needs a Doppler grid symmetric about zero; otherwise they are left at 0.
    """
    lags = ref_surface.delay_grid.lags_samples
    row_of = {int(l): i for i, l in enumerate(lags)}
    bins = ref_surface.doppler_grid.bins_hz
    mirror_ok = ref_surface.doppler_grid.symmetric and ref_surface.sample_rate_hz is not None
    out = np.zeros_like(ref_surface.values)
    for i, lag in enumerate(lags):
        m = int(lag) - shift
        if m >= 0:
            if m in row_of:
                out[i] = ref_surface.values[row_of[m]]
        elif mirror_ok and -m in row_of:
            flipped = np.conj(ref_surface.values[row_of[-m], ::-1])
            out[i] = np.exp(-2j * np.pi * bins * m / ref_surface.sample_rate_hz) * flipped
    return out


def clean(surface: CafSurface, ref_surface: CafSurface,
          cfg: CleanConfig = CleanConfig()) -> tuple[CafSurface, int]:
    """Iteratively remove the zero-Doppler ridge with the reference surface.

    Each pass finds the strongest zero-Doppler cell over all lags and subtracts
    ``loop_gain * peak / ref_peak`` times the reference surface aligned to that
    lag. Stops after ``max_iterations``, once the ridge is
    ``stop_threshold_db`` below its starting level, or if a pass would raise
    the ridge maximum.

    Returns
    -------
    cleaned : CafSurface
    iterations_used : int
    """
    if not surface.same_grid(ref_surface):
        raise ValueError("surface and reference surface must share delay and Doppler grids")
    if 0 not in ref_surface.delay_grid.lags_samples:
        raise ValueError("reference surface must contain lag 0")
    z = surface.zero_doppler_index
    ref0 = ref_surface.values[0, z]
    if ref0 == 0:
        raise ValueError("reference surface has no energy at zero lag / zero Doppler")

    values = surface.values.copy()
    floor = _NUMERICAL_FLOOR * np.abs(values).max()
    initial = np.abs(values[:, z]).max()
    stop_level = initial * 10 ** (-cfg.stop_threshold_db / 20)
    iterations = 0
    peak_mag = initial
    for _ in range(int(cfg.max_iterations)):
        if peak_mag <= floor:
            break
        row = int(np.argmax(np.abs(values[:, z])))
        shift = int(surface.delay_grid.lags_samples[row])
        scale = cfg.loop_gain * values[row, z] / ref0
        candidate = values - scale * _shifted_reference(ref_surface, shift)
        new_peak = np.abs(candidate[:, z]).max()
        if new_peak > peak_mag:
            break
        values = candidate
        peak_mag = new_peak
        iterations += 1
        if peak_mag <= stop_level:
            break
    return surface.with_values(values), iterations


@njit(cache=True)
def _nlms_run(x_hist, d, w, mu, eps):
    # x_hist holds (taps - 1) past reference samples followed by the new block.
    taps = w.size
    e = np.empty(d.size, dtype=np.complex128)
    for n in range(d.size):
        y = 0j
        power = 0.0
        for i in range(taps):
            xv = x_hist[n + taps - 1 - i]
            y += w[i] * xv
            power += xv.real * xv.real + xv.imag * xv.imag
        err = d[n] - y
        g = mu * err / (eps + power)
        for i in range(taps):
            w[i] += g * np.conj(x_hist[n + taps - 1 - i])
        e[n] = err
    return e


class NlmsStream:
    """Stateful NLMS canceller fed block by block.

    Feeding a stream in pieces gives bit-identical output to feeding it whole.
    """

    def __init__(self, cfg: NlmsConfig = NlmsConfig(), weights=None):
        self.cfg = cfg
        taps = int(cfg.num_taps)
        self.weights = (np.zeros(taps, dtype=np.complex128) if weights is None
                        else np.array(weights, dtype=np.complex128).copy())
        if self.weights.shape != (taps,):
            raise ValueError(f"expected {taps} initial weights, got {self.weights.shape}")
        self._history = np.zeros(taps - 1, dtype=np.complex128)

    def process(self, ref: np.ndarray, surv: np.ndarray) -> np.ndarray:
        ref = np.ascontiguousarray(ref, dtype=np.complex128)
        surv = np.ascontiguousarray(surv, dtype=np.complex128)
        if ref.shape != surv.shape:
            raise ValueError(f"reference has {ref.size} samples, surveillance has {surv.size}")
        x_hist = np.concatenate([self._history, ref])
        e = _nlms_run(x_hist, surv, self.weights, float(self.cfg.step_mu),
                      float(self.cfg.regularizer_eps))
        taps = self.weights.size
        if taps > 1:
            self._history = x_hist[x_hist.size - (taps - 1):].copy()
        return e


def nlms_filter(ref: IqFrame, surv: IqFrame,
                cfg: NlmsConfig = NlmsConfig()) -> tuple[IqFrame, np.ndarray]:
    """Subtract the adaptively estimated reference-borne component from ``surv``.

    Returns the error signal as the filtered surveillance frame, together with
    the final tap weights.
    """
    check_pair(ref, surv)
    stream = NlmsStream(cfg)
    e = stream.process(ref.samples, surv.samples)
    return surv.with_samples(e), stream.weights.copy()
