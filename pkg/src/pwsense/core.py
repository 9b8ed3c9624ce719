"""Sample-domain value types shared by every processing stage."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

#: Propagation speed used for all wavelength and Doppler conversions [m/s].
SPEED_OF_LIGHT = 299_792_458.0


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class IqFrame:
    """A timed block of complex baseband samples.

    Parameters
    ----------
    samples : array_like of complex
        Baseband samples. Stored as read-only ``complex128``.
    sample_rate_hz : float
        Sampling rate [Hz].
    center_freq_hz : float
        RF centre frequency the samples were taken around [Hz].
    start_time_s : float
        Time of the first sample [s].
    """

    samples: np.ndarray
    sample_rate_hz: float
    center_freq_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.complex128, copy=True).ravel()
        if x.size == 0:
            raise ValueError("IqFrame needs at least one sample")
        if not (np.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not (np.isfinite(self.center_freq_hz) and self.center_freq_hz > 0):
            raise ValueError(f"center_freq_hz must be positive, got {self.center_freq_hz}")
        if not (np.isfinite(self.start_time_s) and self.start_time_s >= 0):
            raise ValueError(f"start_time_s must be non-negative, got {self.start_time_s}")
        object.__setattr__(self, "samples", _frozen(x))
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "center_freq_hz", float(self.center_freq_hz))
        object.__setattr__(self, "start_time_s", float(self.start_time_s))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.center_freq_hz

    def times(self) -> np.ndarray:
        """Absolute time of every sample [s]."""
        return self.start_time_s + np.arange(self.samples.size) / self.sample_rate_hz

    def with_samples(self, samples) -> "IqFrame":
        """Same timing metadata, new sample payload."""
        return replace(self, samples=samples)


@dataclass(frozen=True, eq=False)
class DopplerGrid:
    """Doppler frequencies [Hz] at which a CAF is evaluated."""

    bins_hz: np.ndarray

    def __post_init__(self):
        b = np.array(self.bins_hz, dtype=np.float64, copy=True).ravel()
        if b.size == 0:
            raise ValueError("DopplerGrid needs at least one bin")
        if not np.all(np.isfinite(b)):
            raise ValueError("Doppler bins must be finite")
        if b.size > 1 and np.any(np.diff(b) <= 0):
            raise ValueError("Doppler bins must be strictly increasing")
        object.__setattr__(self, "bins_hz", _frozen(b))

    @classmethod
    def centered(cls, integration_time_s: float, max_hz: float | None = None,
                 num_bins: int | None = None) -> "DopplerGrid":
        """Two-sided grid on the natural ``k / T`` lattice.

        With ``max_hz`` the grid covers every ``k / T`` with ``|k / T| <= max_hz``
        (always symmetric). With ``num_bins`` it holds ``k = -num_bins // 2 ...
        (num_bins - 1) // 2``, i.e. the FFT ordering of a length-``num_bins``
        transform shifted to DC-centre.
        """
        if integration_time_s <= 0:
            raise ValueError("integration time must be positive")
        if (max_hz is None) == (num_bins is None):
            raise ValueError("give exactly one of max_hz or num_bins")
        if max_hz is not None:
            if max_hz < 0:
                raise ValueError("max_hz must be non-negative")
            kmax = int(np.floor(max_hz * integration_time_s + 1e-9))
            k = np.arange(-kmax, kmax + 1)
        else:
            if num_bins < 1:
                raise ValueError("num_bins must be >= 1")
            k = np.arange(-(num_bins // 2), (num_bins - 1) // 2 + 1)
        return cls(k / integration_time_s)

    def __len__(self) -> int:
        return self.bins_hz.size

    @property
    def symmetric(self) -> bool:
        return bool(np.allclose(self.bins_hz, -self.bins_hz[::-1], rtol=0, atol=1e-9))

    @property
    def spacing_hz(self) -> float:
        if self.bins_hz.size < 2:
            return np.inf
        return float(np.min(np.diff(self.bins_hz)))

    def check_resolution(self, integration_time_s: float) -> None:
        """Reject grids finer than the ``1 / T`` resolution limit."""
        if self.spacing_hz < (1.0 - 1e-9) / integration_time_s:
            raise ValueError(
                f"Doppler bin spacing {self.spacing_hz:.6g} Hz is finer than the "
                f"1/T = {1.0 / integration_time_s:.6g} Hz resolution")

    def index_of(self, freq_hz: float, tol_hz: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.bins_hz - freq_hz)))
        if abs(self.bins_hz[i] - freq_hz) > tol_hz:
            raise ValueError(f"{freq_hz} Hz is not on the Doppler grid")
        return i

    def same_as(self, other: "DopplerGrid") -> bool:
        return (self.bins_hz.shape == other.bins_hz.shape
                and bool(np.allclose(self.bins_hz, other.bins_hz, rtol=1e-12, atol=1e-12)))


@dataclass(frozen=True, eq=False)
class DelayGrid:
    """Correlation lags [samples]; the default is the single zero lag."""

    lags_samples: np.ndarray = (0,)

    def __post_init__(self):
        lags = np.array(self.lags_samples, copy=True).ravel()
        if lags.size == 0:
            raise ValueError("DelayGrid needs at least one lag")
        if not np.issubdtype(lags.dtype, np.integer):
            if not np.all(lags == np.round(lags)):
                raise ValueError("lags must be integers")
        lags = lags.astype(np.int64)
        if lags[0] != 0:
            raise ValueError("the first lag must be 0")
        if lags.size > 1 and np.any(np.diff(lags) <= 0):
            raise ValueError("lags must be strictly increasing")
        object.__setattr__(self, "lags_samples", _frozen(lags))

    @classmethod
    def upto(cls, max_lag: int) -> "DelayGrid":
        return cls(np.arange(max_lag + 1))

    def __len__(self) -> int:
        return self.lags_samples.size

    @property
    def max_lag(self) -> int:
        return int(self.lags_samples[-1])

    def same_as(self, other: "DelayGrid") -> bool:
        return np.array_equal(self.lags_samples, other.lags_samples)


def slice_frame(frame: IqFrame, start_idx: int, length: int) -> IqFrame:
    """Sub-frame of ``length`` samples beginning at ``start_idx``."""
    n = len(frame)
    if start_idx < 0 or length < 1 or start_idx + length > n:
        raise IndexError(
            f"slice [{start_idx}, {start_idx + length}) out of range for {n} samples")
    return replace(
        frame,
        samples=frame.samples[start_idx:start_idx + length],
        start_time_s=frame.start_time_s + start_idx / frame.sample_rate_hz,
    )


def down_sample(frame: IqFrame, factor: int) -> IqFrame:
    """Keep every ``factor``-th sample, starting with the first.

    No anti-alias filter is applied: the Doppler band of interest sits far
    below the decimated Nyquist rate, and nothing is demodulated.
    """
    if int(factor) != factor or factor < 1:
        raise ValueError(f"down-sampling factor must be an integer >= 1, got {factor}")
    factor = int(factor)
    if factor == 1:
        return frame
    return replace(frame, samples=frame.samples[::factor],
                   sample_rate_hz=frame.sample_rate_hz / factor)


def check_pair(ref: IqFrame, surv: IqFrame) -> None:
    """Raise ``ValueError`` unless both channels share length and sample rate."""
    if len(ref) != len(surv):
        raise ValueError(f"reference has {len(ref)} samples, surveillance has {len(surv)}")
    if ref.sample_rate_hz != surv.sample_rate_hz:
        raise ValueError(
            f"sample rates differ: {ref.sample_rate_hz} vs {surv.sample_rate_hz} Hz")
