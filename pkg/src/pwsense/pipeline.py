"""Concurrent three-stage processing chain.

Stages follow the passive sensing front end: *sampling* (block ingest, NLMS,
decimation, windowing), *caf* (zero-delay CAF per window) and *cancel*
(CLEAN, dB conversion, CA-CFAR). Each stage runs in its own thread and hands
windows on through a bounded FIFO; a full queue blocks the producer, so no
window is ever discarded. In steady state the output interval approaches the
slowest stage's service time.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from .core import DopplerGrid, IqFrame, slice_frame
from .detect import CfarConfig, Detection, ca_cfar
from .record import (DopplerRecord, EngineConfig, StreamConditioner, to_db,
                     window_profile, window_surfaces)

logger = logging.getLogger(__name__)

STAGE_NAMES = ("sampling", "caf", "cancel")
_END = object()
_POLL_S = 0.05


@dataclass(frozen=True)
class PipelineConfig:
    """Pipeline settings.

    ``stage_delays_s`` adds a fixed sleep per window to each stage; it exists
    to exercise the latency model and is ``None`` in normal operation.
    """

    window_s: float = 1.0
    hop_s: float = 0.1
    queue_capacity: int = 8
    engine: EngineConfig = field(default_factory=EngineConfig)
    cfar: CfarConfig = field(default_factory=CfarConfig)
    stage_delays_s: tuple[float, float, float] | None = None

    def __post_init__(self):
        if not self.window_s > 0 or not self.hop_s > 0:
            raise ValueError("window_s and hop_s must be positive")
        if self.hop_s > self.window_s:
            raise ValueError("hop_s must not exceed window_s")
        if int(self.queue_capacity) != self.queue_capacity or self.queue_capacity < 1:
            raise ValueError("queue_capacity must be an integer >= 1")
        if self.stage_delays_s is not None:
            if len(self.stage_delays_s) != len(STAGE_NAMES) or min(self.stage_delays_s) < 0:
                raise ValueError("stage_delays_s needs three non-negative values")


@dataclass
class WindowResult:
    index: int
    time_s: float
    row_db: np.ndarray
    doppler_hz: np.ndarray
    detections: list[Detection]


@dataclass
class StageTiming:
    name: str
    frames_processed: int
    mean_latency_s: float
    max_latency_s: float


@dataclass
class StageStats:
    stages: list[StageTiming]
    frames_in: int
    frames_out: int
    throughput_fps: float
    mean_output_interval_s: float
    elapsed_s: float

    def to_text(self) -> str:
        """``key=value`` lines, one stage per prefix."""
        lines = [f"frames_in={self.frames_in}",
                 f"frames_out={self.frames_out}",
                 f"throughput_fps={self.throughput_fps:.6f}",
                 f"mean_output_interval_s={self.mean_output_interval_s:.6f}",
                 f"elapsed_s={self.elapsed_s:.6f}",
                 f"pipeline_latency_s={pipeline_latency(self):.6f}"]
        for st in self.stages:
            lines += [f"stage.{st.name}.frames_processed={st.frames_processed}",
                      f"stage.{st.name}.mean_latency_s={st.mean_latency_s:.6f}",
                      f"stage.{st.name}.max_latency_s={st.max_latency_s:.6f}"]
        return "\n".join(lines) + "\n"


class PipelineError(RuntimeError):
    """A stage failed; ``stats`` holds what was measured up to the failure."""

    def __init__(self, message: str, stats: StageStats):
        super().__init__(message)
        self.stats = stats


def pipeline_latency(stats: StageStats) -> float:
    """Predicted steady-state output interval: the slowest stage's mean latency."""
    if not stats.stages:
        raise ValueError("no stage statistics")
    return max(st.mean_latency_s for st in stats.stages)


def chunked_source(ref: IqFrame, surv: IqFrame,
                   chunk_s: float) -> Iterator[tuple[IqFrame, IqFrame]]:
    """Cut a recorded channel pair into consecutive blocks of ``chunk_s``."""
    step = max(1, int(round(chunk_s * ref.sample_rate_hz)))
    for start in range(0, len(ref), step):
        length = min(step, len(ref) - start)
        yield slice_frame(ref, start, length), slice_frame(surv, start, length)


class RecordCollector:
    """Sink that gathers results back into a record and a detection list."""

    def __init__(self):
        self.results: list[WindowResult] = []

    def __call__(self, result: WindowResult) -> None:
        self.results.append(result)

    def record(self, cfg: PipelineConfig) -> DopplerRecord:
        if not self.results:
            raise ValueError("no windows were produced")
        return DopplerRecord(np.array([r.time_s for r in self.results]),
                             np.vstack([r.row_db for r in self.results]),
                             DopplerGrid(self.results[0].doppler_hz),
                             cfg.window_s, cfg.hop_s)

    @property
    def detections(self) -> list[Detection]:
        return [d for r in self.results for d in r.detections]


class _Stages:
    """The per-window work of each stage, shared by threaded and sequential runs."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.conditioner = StreamConditioner(cfg.engine, cfg.window_s, cfg.hop_s)
        self.delays = cfg.stage_delays_s or (0.0, 0.0, 0.0)
        self.latencies: list[list[float]] = [[] for _ in STAGE_NAMES]
        self.next_index = 0

    def _pause(self, stage: int) -> None:
        if self.delays[stage] > 0:
            time.sleep(self.delays[stage])

    def sampling(self, block) -> list[tuple[int, IqFrame, IqFrame]]:
        t0 = time.perf_counter()
        windows = self.conditioner.push(*block)
        if not windows:
            return []
        share = (time.perf_counter() - t0) / len(windows)
        out = []
        for ref_w, surv_w in windows:
            t1 = time.perf_counter()
            self._pause(0)
            self.latencies[0].append(share + time.perf_counter() - t1)
            out.append((self.next_index, ref_w, surv_w))
            self.next_index += 1
        return out

    def caf(self, item):
        t0 = time.perf_counter()
        index, ref_w, surv_w = item
        surfaces = window_surfaces(ref_w, surv_w, self.cfg.engine)
        self._pause(1)
        self.latencies[1].append(time.perf_counter() - t0)
        return index, self.conditioner.window_time(ref_w), surfaces

    def cancel(self, item) -> WindowResult:
        t0 = time.perf_counter()
        index, t_mid, (surface, ref_surface) = item
        profile = window_profile(surface, ref_surface, self.cfg.engine)
        bins = surface.doppler_grid.bins_hz
        dets = ca_cfar(np.abs(profile) ** 2, bins, self.cfg.cfar, time_s=t_mid)
        result = WindowResult(index, t_mid, to_db(profile), bins, dets)
        self._pause(2)
        self.latencies[2].append(time.perf_counter() - t0)
        return result


def _steady(values: list[float]) -> np.ndarray:
    a = np.asarray(values, dtype=np.float64)
    trim = int(0.1 * a.size)
    core = a[trim:a.size - trim] if a.size - 2 * trim > 0 else a
    return core


def _build_stats(stages: _Stages, frames_out: int, out_times: list[float],
                 elapsed: float) -> StageStats:
    timings = []
    for name, lat in zip(STAGE_NAMES, stages.latencies):
        steady = _steady(lat)
        timings.append(StageTiming(name, len(lat),
                                   float(steady.mean()) if steady.size else 0.0,
                                   float(max(lat)) if lat else 0.0))
    intervals = _steady(list(np.diff(out_times))) if len(out_times) > 1 else np.empty(0)
    interval = float(intervals.mean()) if intervals.size else 0.0
    return StageStats(timings, len(stages.latencies[0]), frames_out,
                      1.0 / interval if interval > 0 else 0.0, interval, elapsed)


def run_sequential(source: Iterable, config: PipelineConfig,
                   sink: Callable[[WindowResult], None]) -> StageStats:
    """Reference execution: every stage in turn on one thread."""
    stages = _Stages(config)
    out_times = []
    t_start = time.perf_counter()
    n_out = 0
    for block in source:
        for item in stages.sampling(block):
            sink(stages.cancel(stages.caf(item)))
            out_times.append(time.perf_counter())
            n_out += 1
    return _build_stats(stages, n_out, out_times, time.perf_counter() - t_start)


def run_pipeline(source: Iterable, config: PipelineConfig,
                 sink: Callable[[WindowResult], None]) -> StageStats:
    """Run the chain with one thread per stage and bounded queues between them.

    Every window reaches ``sink`` exactly once, in input order. If a stage
    raises, the remaining stages are stopped and :class:`PipelineError` is
    raised carrying the partial statistics.
    """
    stages = _Stages(config)
    q_caf: queue.Queue = queue.Queue(maxsize=config.queue_capacity)
    q_cancel: queue.Queue = queue.Queue(maxsize=config.queue_capacity)
    abort = threading.Event()
    failures: list[tuple[str, BaseException]] = []
    out_times: list[float] = []
    n_out = [0]

    def put(q: queue.Queue, item) -> bool:
        while not abort.is_set():
            try:
                q.put(item, timeout=_POLL_S)
                return True
            except queue.Full:
                continue
        return False

    def get(q: queue.Queue):
        while not abort.is_set():
            try:
                return q.get(timeout=_POLL_S)
            except queue.Empty:
                continue
        return _END

    def guarded(name: str, body: Callable[[], None]) -> Callable[[], None]:
        def run():
            try:
                body()
            except BaseException as exc:  # noqa: BLE001 - reported via PipelineError
                logger.error("stage %s failed: %r", name, exc)
                failures.append((name, exc))
                abort.set()
        return run

    def sampling_body():
        for block in source:
            for item in stages.sampling(block):
                if not put(q_caf, item):
                    return
            if abort.is_set():
                return
        put(q_caf, _END)

    def caf_body():
        while True:
            item = get(q_caf)
            if item is _END:
                put(q_cancel, _END)
                return
            if not put(q_cancel, stages.caf(item)):
                return

    def cancel_body():
        while True:
            item = get(q_cancel)
            if item is _END:
                return
            sink(stages.cancel(item))
            out_times.append(time.perf_counter())
            n_out[0] += 1

    threads = [threading.Thread(target=guarded(name, body), name=f"pwsense-{name}", daemon=True)
               for name, body in zip(STAGE_NAMES, (sampling_body, caf_body, cancel_body))]
    t_start = time.perf_counter()
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    stats = _build_stats(stages, n_out[0], out_times, time.perf_counter() - t_start)
    if failures:
        name, exc = failures[0]
        raise PipelineError(f"stage '{name}' failed: {exc!r}", stats) from exc
    return stats
