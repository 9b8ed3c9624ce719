"""Timing comparison of the CAF engines on identical inputs."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .caf import caf_batched, caf_direct
from .core import SPEED_OF_LIGHT, DopplerGrid, down_sample
from .synth import MotionModel, Reflector, Scene, WaveformSpec, apply_scene, gen_waveform


@dataclass(frozen=True)
class BenchSettings:
    sizes: tuple[int, ...] = (2**16, 2**20)
    sample_rate_hz: float = 22e6
    bandwidth_hz: float = 11e6
    carrier_hz: float = 2.4e9
    portion: float = 0.10
    batches: int = 64
    downsample_factors: tuple[int, ...] = (1, 8)
    repeats: int = 3
    target_bin: int = 5
    seed: int = 0
    burst_len_s: float = 2e-3
    gap_min_s: float = 1e-4
    gap_max_s: float = 5e-4

    def __post_init__(self):
        if not self.sizes or min(self.sizes) < 2:
            raise ValueError("sizes must list frame lengths >= 2")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not self.downsample_factors or min(self.downsample_factors) < 1:
            raise ValueError("downsample factors must be >= 1")
        if self.batches < 2:
            raise ValueError("batches must be >= 2")


def _best_time(fn, repeats: int):
    best, out = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _peak_bin(surface, T: float) -> int:
    _, col = surface.peak()
    return int(round(surface.doppler_grid.bins_hz[col] * T))


def bench_size(n: int, s: BenchSettings) -> dict:
    fs = s.sample_rate_hz
    T = n / fs
    spec = WaveformSpec(bandwidth_hz=min(s.bandwidth_hz, fs), burst_len_s=s.burst_len_s,
                        gap_min_s=s.gap_min_s, gap_max_s=s.gap_max_s)
    tx = gen_waveform(spec, T, fs, seed=s.seed, carrier_hz=s.carrier_hz)
    J = int(min(s.batches, max(2, np.floor(s.portion * n))))
    # tiny frames: keep at least one sample per segment
    portion = min(1.0, max(s.portion, J / n))
    target_bin = int(np.clip(s.target_bin, -(J // 2) + 1, J // 2 - 1))
    velocity = target_bin / T * SPEED_OF_LIGHT / (2 * s.carrier_hz)
    scene = Scene(carrier_hz=s.carrier_hz, direct_path_gain_db=-40.0, noise_power_db=-20.0,
                  reflectors=(Reflector(0.0, MotionModel("constant_velocity",
                                                         velocity_mps=velocity)),))
    ref, surv = apply_scene(tx, scene, seed=s.seed + 1)
    grid = DopplerGrid.centered(T, num_bins=J)

    t_direct, direct = _best_time(lambda: caf_direct(ref, surv, dopplers=grid), s.repeats)
    t_batched, batched = _best_time(lambda: caf_batched(ref, surv, J, portion), s.repeats)
    direct_bin = _peak_bin(direct, T)
    row = {
        "n": n,
        "segments": J,
        "portion": portion,
        "target_bin": target_bin,
        "direct_s": t_direct,
        "batched_s": t_batched,
        "speedup": t_direct / t_batched if t_batched > 0 else float("inf"),
        "peak_bin_direct": direct_bin,
        "peak_bin_batched": _peak_bin(batched, batched.integration_time_s),
        "downsample": [],
    }
    row["peak_agree"] = row["peak_bin_direct"] == row["peak_bin_batched"]

    base_time = None
    for factor in sorted(s.downsample_factors):
        m = -(-n // factor)
        if m < 2:
            row["downsample"].append({"factor": factor, "skipped": True})
            continue
        ds_grid = DopplerGrid.centered(m * factor / fs, num_bins=J)

        def run(factor=factor, ds_grid=ds_grid):
            return caf_direct(down_sample(ref, factor), down_sample(surv, factor),
                              dopplers=ds_grid)
        t_ds, surf = _best_time(run, s.repeats)
        if factor == 1:
            base_time = t_ds
        peak = _peak_bin(surf, surf.integration_time_s)
        row["downsample"].append({
            "factor": factor,
            "time_s": t_ds,
            "time_ratio": t_ds / base_time if base_time else None,
            "peak_bin": peak,
            "peak_agree": peak == direct_bin,
        })
    return row


def run_bench(settings: BenchSettings) -> dict:
    return {
        "sample_rate_hz": settings.sample_rate_hz,
        "portion": settings.portion,
        "repeats": settings.repeats,
        "results": [bench_size(int(n), settings) for n in settings.sizes],
    }
