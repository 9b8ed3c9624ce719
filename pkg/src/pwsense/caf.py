"""Cross ambiguity function: direct and batch-accelerated evaluation.

Grid convention
---------------
A :class:`~pwsense.core.DopplerGrid` frequency ``f`` is the Doppler shift of
the surveillance channel relative to the reference. For a frame of ``N``
samples spanning ``T`` seconds, ``f`` is evaluated through the sum

    sum_n r[n] * conj(s[n + lag]) * exp(-2j*pi*fd*n/N),   fd = -f*T

so a surveillance echo ``s[n] = r[n] * exp(+2j*pi*k*n/N)`` peaks at ``f = k/T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SPEED_OF_LIGHT, DelayGrid, DopplerGrid, IqFrame, check_pair

# Bins within this distance of an integer multiple of 1/T are served by FFT.
_LATTICE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CafSurface:
    """Complex CAF values indexed ``[delay lag, doppler bin]``."""

    values: np.ndarray
    delay_grid: DelayGrid
    doppler_grid: DopplerGrid
    integration_time_s: float
    origin_time_s: float = 0.0
    sample_rate_hz: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (len(self.delay_grid), len(self.doppler_grid)):
            raise ValueError(
                f"values shape {v.shape} does not match grids "
                f"({len(self.delay_grid)}, {len(self.doppler_grid)})")
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "CafSurface":
        return CafSurface(values, self.delay_grid, self.doppler_grid,
                          self.integration_time_s, self.origin_time_s, self.sample_rate_hz)

    def same_grid(self, other: "CafSurface") -> bool:
        return (self.delay_grid.same_as(other.delay_grid)
                and self.doppler_grid.same_as(other.doppler_grid))

    @property
    def zero_doppler_index(self) -> int:
        return self.doppler_grid.index_of(0.0, tol_hz=1e-9 / self.integration_time_s)

    def peak(self) -> tuple[int, int]:
        """``(delay index, doppler index)`` of the largest magnitude.

        Ties go to the bin with the lowest absolute Doppler.
        """
        mag = np.abs(self.values)
        best = mag.max()
        rows, cols = np.nonzero(mag == best)
        order = np.lexsort((rows, np.abs(self.doppler_grid.bins_hz[cols])))
        return int(rows[order[0]]), int(cols[order[0]])


def _lag_products(r: np.ndarray, s: np.ndarray, lag: int) -> np.ndarray:
    n = r.size
    return r[:n - lag] * np.conj(s[lag:])


def _dft_at(p: np.ndarray, k: np.ndarray, n_total: int) -> np.ndarray:
    """``sum_n p[n] exp(+2j*pi*k*n/n_total)`` for each (possibly fractional) ``k``."""
    on_lattice = np.abs(k - np.round(k)) < _LATTICE_TOL
    out = np.empty(k.size, dtype=np.complex128)
    if np.any(on_lattice):
        spec = np.fft.ifft(p, n_total) * n_total
        out[on_lattice] = spec[np.round(k[on_lattice]).astype(np.int64) % n_total]
    if not np.all(on_lattice):
        idx = np.arange(p.size)
        for i in np.flatnonzero(~on_lattice):
            out[i] = np.sum(p * np.exp(2j * np.pi * k[i] * idx / n_total))
    return out


def _check_grids(ref: IqFrame, delays: DelayGrid, dopplers: DopplerGrid, T: float) -> None:
    if delays.max_lag >= len(ref):
        raise ValueError(f"max lag {delays.max_lag} must be below N = {len(ref)}")
    dopplers.check_resolution(T)


def caf_direct(ref: IqFrame, surv: IqFrame, delays: DelayGrid | None = None,
               dopplers: DopplerGrid | None = None) -> CafSurface:
    """Full-length CAF over the given delay and Doppler grids.

    Each lag's product sequence is transformed once with an FFT; grid
    frequencies off the ``k / T`` lattice fall back to an explicit sum.
    The default Doppler grid is every ``k / T`` bin (``N`` bins).
    """
    check_pair(ref, surv)
    n = len(ref)
    T = n / ref.sample_rate_hz
    delays = DelayGrid() if delays is None else delays
    dopplers = DopplerGrid.centered(T, num_bins=n) if dopplers is None else dopplers
    _check_grids(ref, delays, dopplers, T)

    k = dopplers.bins_hz * T
    values = np.empty((len(delays), len(dopplers)), dtype=np.complex128)
    for i, lag in enumerate(delays.lags_samples):
        values[i] = _dft_at(_lag_products(ref.samples, surv.samples, int(lag)), k, n)
    return CafSurface(values, delays, dopplers, T, ref.start_time_s, ref.sample_rate_hz)


def num_batches(v_max: float, f0: float, t_sample: float) -> int:
    """Number of slow-time segments ``J = 2 * ceil(v_max / c * f0 * t_sample)``.

    Never less than 2.
    """
    for name, val in (("v_max", v_max), ("f0", f0), ("t_sample", t_sample)):
        if not (np.isfinite(val) and val > 0):
            raise ValueError(f"{name} must be positive, got {val}")
    return max(2, 2 * int(np.ceil(v_max / SPEED_OF_LIGHT * f0 * t_sample)))


def batched_grid(num_segments: int, integration_time_s: float) -> DopplerGrid:
    """The ``J`` Doppler bins produced by :func:`caf_batched`."""
    return DopplerGrid.centered(integration_time_s, num_bins=num_segments)


def caf_batched(ref: IqFrame, surv: IqFrame, J: int, portion: float = 0.10,
                delays: DelayGrid | None = None, hann: bool = False) -> CafSurface:
    """Batch-processed CAF.

    Both channels are cut into ``J`` equal segments of ``L = N // J`` samples
    (any remainder is dropped). Only the leading ``floor(portion * N / J)``
    samples of each segment are correlated; the per-segment sums then go
    through a length-``J`` DFT, giving ``J`` Doppler bins spaced ``1 / T``.

    Parameters
    ----------
    J : int
        Number of segments, ``2 <= J <= N``.
    portion : float
        Fraction of every segment that is kept, in ``(0, 1]``.
    hann : bool
        Taper the segment sums with a Hann window before the DFT.
    """
    check_pair(ref, surv)
    n = len(ref)
    if int(J) != J or J < 2 or J > n:
        raise ValueError(f"need 2 <= J <= N = {n}, got J = {J}")
    if not 0 < portion <= 1:
        raise ValueError(f"portion must be in (0, 1], got {portion}")
    J = int(J)
    seg_len = n // J
    keep = int(np.floor(portion * n / J))
    if keep < 1:
        raise ValueError(f"portion * N / J = {portion * n / J:.3g} keeps no samples per segment")
    keep = min(keep, seg_len)
    delays = DelayGrid() if delays is None else delays
    if delays.max_lag >= n:
        raise ValueError(f"max lag {delays.max_lag} must be below N = {n}")

    T = J * seg_len / ref.sample_rate_hz
    grid = batched_grid(J, T)
    idx = (np.arange(J) * seg_len)[:, None] + np.arange(keep)[None, :]
    r = ref.samples[idx]
    taper = np.hanning(J) if hann else None
    kbins = np.round(grid.bins_hz * T).astype(np.int64) % J
    values = np.empty((len(delays), J), dtype=np.complex128)
    for i, lag in enumerate(delays.lags_samples):
        shifted = idx + int(lag)
        valid = shifted < n
        s = surv.samples[np.minimum(shifted, n - 1)]
        seg_sums = np.sum(np.where(valid, r * np.conj(s), 0.0), axis=1)
        if taper is not None:
            seg_sums = seg_sums * taper
        values[i] = (np.fft.ifft(seg_sums) * J)[kbins]
    return CafSurface(values, delays, grid, T, ref.start_time_s, ref.sample_rate_hz)
