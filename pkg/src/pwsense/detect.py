"""Cell-averaging CFAR detection on Doppler power profiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CfarConfig:
    """CA-CFAR window.

    ``num_train`` and ``num_guard`` are totals, split evenly on both sides of
    the cell under test.
    """

    num_train: int = 16
    num_guard: int = 4
    pfa: float = 1e-3

    def __post_init__(self):
        if int(self.num_train) != self.num_train or self.num_train < 2 or self.num_train % 2:
            raise ValueError(f"num_train must be an even integer >= 2, got {self.num_train}")
        if int(self.num_guard) != self.num_guard or self.num_guard < 0 or self.num_guard % 2:
            raise ValueError(f"num_guard must be a non-negative even integer, got {self.num_guard}")
        if not 0 < self.pfa < 1:
            raise ValueError(f"pfa must lie in (0, 1), got {self.pfa}")


@dataclass(frozen=True)
class Detection:
    time_s: float
    doppler_hz: float
    power_db: float
    threshold_db: float


def cfar_alpha(pfa: float, num_train: int) -> float:
    """Threshold multiplier ``N * (pfa ** (-1/N) - 1)`` for exponential cell powers."""
    if not 0 < pfa < 1:
        raise ValueError(f"pfa must lie in (0, 1), got {pfa}")
    if int(num_train) != num_train or num_train < 1:
        raise ValueError(f"num_train must be a positive integer, got {num_train}")
    return num_train * (pfa ** (-1.0 / num_train) - 1.0)


def cfar_threshold(power, cfg: CfarConfig) -> np.ndarray:
    """Per-cell CA-CFAR threshold in linear power.

    Near an edge, training cells missing on one side are taken from the
    other, so every cell averages exactly ``num_train`` neighbours.
    """
    p = np.asarray(power, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("power profile must be one-dimensional")
    half_t = cfg.num_train // 2
    half_g = cfg.num_guard // 2
    n = p.size
    if n <= cfg.num_train + cfg.num_guard + 1:
        raise ValueError(
            f"profile of {n} cells is too short for {cfg.num_train} training and "
            f"{cfg.num_guard} guard cells")
    csum = np.concatenate([[0.0], np.cumsum(p)])

    def window_sum(lo, hi):  # sum of p[lo:hi]
        return csum[hi] - csum[lo]

    i = np.arange(n)
    left_avail = np.maximum(0, i - half_g)
    right_avail = np.maximum(0, n - 1 - i - half_g)
    n_left = np.minimum(half_t, left_avail)
    n_right = np.minimum(cfg.num_train - n_left, right_avail)
    n_left = cfg.num_train - n_right
    left_end = np.maximum(0, i - half_g)
    right_start = np.minimum(n, i + half_g + 1)
    total = (window_sum(left_end - n_left, left_end)
             + window_sum(right_start, right_start + n_right))
    return cfar_alpha(cfg.pfa, cfg.num_train) * total / cfg.num_train


def cfar_mask(power, cfg: CfarConfig) -> np.ndarray:
    """Boolean mask of cells whose power exceeds their CA-CFAR threshold."""
    p = np.asarray(power, dtype=np.float64)
    return p > cfar_threshold(p, cfg)


def ca_cfar(power, doppler_hz, cfg: CfarConfig = CfarConfig(),
            time_s: float = 0.0) -> list[Detection]:
    """Detections on one Doppler power profile.

    Runs of adjacent exceedances collapse into a single detection at the
    strongest cell of the run.
    """
    p = np.asarray(power, dtype=np.float64)
    f = np.asarray(doppler_hz, dtype=np.float64)
    if f.shape != p.shape:
        raise ValueError("power and Doppler axis lengths differ")
    thr = cfar_threshold(p, cfg)
    hit = p > thr
    detections = []
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        return detections
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    for run in runs:
        k = run[np.argmax(p[run])]
        detections.append(Detection(float(time_s), float(f[k]),
                                    float(10 * np.log10(p[k])),
                                    float(10 * np.log10(thr[k]))))
    return detections
