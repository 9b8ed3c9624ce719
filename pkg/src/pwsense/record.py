"""Sliding-window Doppler records (time x Doppler spectrograms).

The per-window steps live here as small stage primitives so the offline
:func:`doppler_record` and the concurrent pipeline share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .caf import CafSurface, caf_batched, caf_direct, num_batches
from .cancel import CleanConfig, NlmsConfig, NlmsStream, clean
from .core import DopplerGrid, IqFrame, check_pair

ENGINES = ("direct", "batched")
_DB_FLOOR = 1e-30


@dataclass(frozen=True)
class EngineConfig:
    """How each window's zero-delay Doppler profile is produced.

    ``batches=None`` derives the segment count from ``v_max_mps`` (a radial
    speed; the round-trip path rate ``2 * v_max_mps`` is what sets the Doppler
    span). ``nlms`` and ``clean`` switch on pre- and post-CAF cancellation.
    """

    engine: str = "direct"
    portion: float = 0.10
    batches: int | None = None
    v_max_mps: float = 3.0
    max_doppler_hz: float | None = 50.0
    hann: bool = False
    downsample: int = 1
    nlms: NlmsConfig | None = None
    clean: CleanConfig | None = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if not 0 < self.portion <= 1:
            raise ValueError("portion must be in (0, 1]")
        if self.batches is not None and self.batches < 2:
            raise ValueError("batches must be >= 2")
        if not self.v_max_mps > 0:
            raise ValueError("v_max_mps must be positive")
        if self.max_doppler_hz is not None and self.max_doppler_hz < 0:
            raise ValueError("max_doppler_hz must be non-negative")
        if int(self.downsample) != self.downsample or self.downsample < 1:
            raise ValueError("downsample must be an integer >= 1")

    def segments_for(self, window: IqFrame) -> int:
        if self.batches is not None:
            return int(self.batches)
        return num_batches(2 * self.v_max_mps, window.center_freq_hz, window.duration_s)


@dataclass(frozen=True, eq=False)
class DopplerRecord:
    """Doppler magnitude [dB] per window, rows in time order."""

    times_s: np.ndarray
    rows_db: np.ndarray
    doppler_grid: DopplerGrid
    window_s: float
    hop_s: float

    def __post_init__(self):
        t = np.asarray(self.times_s, dtype=np.float64)
        rows = np.asarray(self.rows_db, dtype=np.float64)
        if rows.ndim != 2 or rows.shape != (t.size, len(self.doppler_grid)):
            raise ValueError(f"rows shape {rows.shape} does not match "
                             f"{t.size} times x {len(self.doppler_grid)} bins")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("record times must be strictly increasing")
        object.__setattr__(self, "times_s", t)
        object.__setattr__(self, "rows_db", rows)

    def __len__(self) -> int:
        return self.times_s.size

    @property
    def bins_hz(self) -> np.ndarray:
        return self.doppler_grid.bins_hz

    def power(self) -> np.ndarray:
        """Linear power ``|CAF|^2`` per cell."""
        return 10 ** (self.rows_db / 10)

    def peak_trace(self, exclude_zero: bool = False) -> np.ndarray:
        """Doppler [Hz] of the strongest bin in every row.

        Ties resolve to the lowest absolute Doppler.
        """
        rows = self.rows_db.copy()
        if exclude_zero:
            rows[:, np.abs(self.bins_hz) < 1e-12] = -np.inf
        order = np.argsort(np.abs(self.bins_hz), kind="stable")
        best = np.argmax(rows[:, order], axis=1)
        return self.bins_hz[order][best]

    def centroid_trace(self, band_hz: float) -> np.ndarray:
        """Power-weighted mean Doppler within ``|f| <= band_hz`` for every row."""
        sel = np.abs(self.bins_hz) <= band_hz + 1e-12
        p = self.power()[:, sel]
        return p @ self.bins_hz[sel] / p.sum(axis=1)


def dominant_rate_hz(trace, sample_interval_s: float, fmin: float = 0.0,
                     fmax: float | None = None, oversample: int = 8) -> float:
    """Strongest periodicity [Hz] of a uniformly sampled trace within ``[fmin, fmax]``."""
    x = np.asarray(trace, dtype=np.float64)
    x = (x - x.mean()) * np.hanning(x.size)
    nfft = oversample * x.size
    spec = np.abs(np.fft.rfft(x, nfft))
    freqs = np.fft.rfftfreq(nfft, sample_interval_s)
    band = freqs >= fmin
    if fmax is not None:
        band &= freqs <= fmax
    if not np.any(band):
        raise ValueError("empty frequency band")
    return float(freqs[band][np.argmax(spec[band])])


def zero_crossing_rate_hz(trace, sample_interval_s: float) -> float:
    """Cycles per second from sign changes, ignoring exact zeros.

    Measured between the first and last crossing, so partial cycles at the
    ends of the trace do not bias the estimate. Fewer than two crossings
    give 0.
    """
    x = np.asarray(trace, dtype=np.float64)
    pos = np.flatnonzero(x != 0)
    change = np.flatnonzero(np.diff(np.sign(x[pos])))
    if change.size < 2:
        return 0.0
    t = 0.5 * (pos[change] + pos[change + 1]) * sample_interval_s
    return (change.size - 1) / 2.0 / (t[-1] - t[0])


class StreamConditioner:
    """Turns contiguous (ref, surv) blocks into analysis windows.

    Applies NLMS on the full-rate stream, then decimation, then cuts windows of
    ``window_s`` every ``hop_s``. Feeding a stream in arbitrary blocks yields
    exactly the windows produced by feeding it whole.
    """

    def __init__(self, cfg: EngineConfig, window_s: float, hop_s: float):
        if not hop_s > 0 or not window_s > 0:
            raise ValueError("window_s and hop_s must be positive")
        if hop_s > window_s:
            raise ValueError("hop_s must not exceed window_s")
        self.cfg = cfg
        self.window_s = window_s
        self.hop_s = hop_s
        self._nlms = NlmsStream(cfg.nlms) if cfg.nlms is not None else None
        self._meta = None
        self._seen = 0          # full-rate samples consumed
        self._buf_start = 0     # decimated index of _ref_buf[0]
        self._ref_buf = np.empty(0, dtype=np.complex128)
        self._surv_buf = np.empty(0, dtype=np.complex128)
        self._next_window = 0

    def _setup(self, ref: IqFrame) -> None:
        fs = ref.sample_rate_hz / self.cfg.downsample
        self._meta = (fs, ref.center_freq_hz, ref.start_time_s)
        self.win_n = int(round(self.window_s * fs))
        self.hop_n = int(round(self.hop_s * fs))
        if self.win_n < 1 or self.hop_n < 1:
            raise ValueError("window or hop shorter than one (decimated) sample")

    @property
    def sample_rate_hz(self) -> float:
        return self._meta[0]

    def push(self, ref: IqFrame, surv: IqFrame) -> list[tuple[IqFrame, IqFrame]]:
        check_pair(ref, surv)
        if self._meta is None:
            self._setup(ref)
        r, s = ref.samples, surv.samples
        if self._nlms is not None:
            s = self._nlms.process(r, s)
        d = self.cfg.downsample
        first = (-self._seen) % d
        self._seen += r.size
        self._ref_buf = np.concatenate([self._ref_buf, r[first::d]])
        self._surv_buf = np.concatenate([self._surv_buf, s[first::d]])
        return self._drain()

    def _drain(self) -> list[tuple[IqFrame, IqFrame]]:
        fs, f0, t0 = self._meta
        out = []
        while True:
            start = self._next_window * self.hop_n
            lo = start - self._buf_start
            if lo + self.win_n > self._ref_buf.size:
                break
            t_start = t0 + start / fs
            out.append((IqFrame(self._ref_buf[lo:lo + self.win_n], fs, f0, t_start),
                        IqFrame(self._surv_buf[lo:lo + self.win_n], fs, f0, t_start)))
            self._next_window += 1
        drop = self._next_window * self.hop_n - self._buf_start
        if drop > 0:
            drop = min(drop, self._ref_buf.size)
            self._ref_buf = self._ref_buf[drop:]
            self._surv_buf = self._surv_buf[drop:]
            self._buf_start += drop
        return out

    def window_time(self, window: IqFrame) -> float:
        """Time stamp of a window's row: its centre."""
        return window.start_time_s + 0.5 * self.win_n / window.sample_rate_hz


def window_surfaces(ref: IqFrame, surv: IqFrame,
                    cfg: EngineConfig) -> tuple[CafSurface, CafSurface | None]:
    """Zero-delay CAF of one window, plus the reference self-surface if CLEAN is on."""
    T = ref.duration_s
    if cfg.engine == "direct":
        if cfg.max_doppler_hz is None:
            grid = DopplerGrid.centered(T, num_bins=len(ref))
        else:
            grid = DopplerGrid.centered(T, max_hz=cfg.max_doppler_hz)
        surface = caf_direct(ref, surv, dopplers=grid)
        ref_surface = caf_direct(ref, ref, dopplers=grid) if cfg.clean is not None else None
    else:
        J = cfg.segments_for(ref)
        surface = _trim(caf_batched(ref, surv, J, cfg.portion, hann=cfg.hann), cfg)
        ref_surface = None
        if cfg.clean is not None:
            ref_surface = _trim(caf_batched(ref, ref, J, cfg.portion, hann=cfg.hann), cfg)
    return surface, ref_surface


def _trim(surface: CafSurface, cfg: EngineConfig) -> CafSurface:
    if cfg.max_doppler_hz is None:
        return surface
    keep = np.abs(surface.doppler_grid.bins_hz) <= cfg.max_doppler_hz + 1e-9
    return CafSurface(surface.values[:, keep], surface.delay_grid,
                      DopplerGrid(surface.doppler_grid.bins_hz[keep]),
                      surface.integration_time_s, surface.origin_time_s,
                      surface.sample_rate_hz)


def window_profile(surface: CafSurface, ref_surface: CafSurface | None,
                   cfg: EngineConfig) -> np.ndarray:
    """Complex zero-delay Doppler profile after optional CLEAN."""
    if cfg.clean is not None and ref_surface is not None:
        surface, _ = clean(surface, ref_surface, cfg.clean)
    return surface.values[0]


def to_db(profile: np.ndarray) -> np.ndarray:
    return 20 * np.log10(np.maximum(np.abs(profile), _DB_FLOOR))


def doppler_record(ref: IqFrame, surv: IqFrame, window_s: float, hop_s: float,
                   engine_cfg: EngineConfig = EngineConfig()) -> DopplerRecord:
    """Slide a ``window_s`` window in ``hop_s`` steps and stack Doppler profiles."""
    check_pair(ref, surv)
    if window_s > ref.duration_s + 1e-12:
        raise ValueError(
            f"window of {window_s} s is longer than the {ref.duration_s} s frame")
    cond = StreamConditioner(engine_cfg, window_s, hop_s)
    windows = cond.push(ref, surv)
    if not windows:
        raise ValueError("frame too short for a single window")
    times, rows, grid = [], [], None
    for r_w, s_w in windows:
        surface, ref_surface = window_surfaces(r_w, s_w, engine_cfg)
        grid = surface.doppler_grid if grid is None else grid
        times.append(cond.window_time(r_w))
        rows.append(to_db(window_profile(surface, ref_surface, engine_cfg)))
    return DopplerRecord(np.array(times), np.vstack(rows), grid, window_s, hop_s)
