"""File formats: raw IQ captures, scenario configs and CSV exports."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cancel import CleanConfig, NlmsConfig
from .core import IqFrame
from .detect import CfarConfig, Detection
from .pipeline import PipelineConfig
from .record import DopplerRecord, EngineConfig
from .synth import MotionModel, Reflector, Scene, WaveformSpec

SPECTROGRAM_FLOOR_DB = -80.0


class ValidationError(ValueError):
    """Bad user input: config, file contents or command-line values."""


# --------------------------------------------------------------------- IQ files

def meta_path(path) -> Path:
    return Path(str(path) + ".meta")


def write_iq(path, frame: IqFrame) -> None:
    """Interleaved little-endian float32 I/Q plus a ``key=value`` sidecar."""
    inter = np.empty(2 * len(frame), dtype="<f4")
    inter[0::2] = frame.samples.real
    inter[1::2] = frame.samples.imag
    Path(path).write_bytes(inter.tobytes())
    meta_path(path).write_text(
        f"sample_rate_hz={frame.sample_rate_hz!r}\n"
        f"center_freq_hz={frame.center_freq_hz!r}\n"
        f"start_time_s={frame.start_time_s!r}\n")


def read_meta(path) -> dict[str, float]:
    mp = meta_path(path)
    if not mp.exists():
        raise ValidationError(f"{mp}: sidecar metadata file not found")
    meta = {}
    for lineno, line in enumerate(mp.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in ("sample_rate_hz", "center_freq_hz", "start_time_s"):
            raise ValidationError(f"{mp}:{lineno}: unexpected line {line!r}")
        try:
            meta[key] = float(value)
        except ValueError:
            raise ValidationError(f"{mp}:{lineno}: {key} is not a number: {value.strip()!r}")
    for key in ("sample_rate_hz", "center_freq_hz"):
        if key not in meta:
            raise ValidationError(f"{mp}: missing {key}")
        if not meta[key] > 0:
            raise ValidationError(f"{mp}: {key} must be positive")
    meta.setdefault("start_time_s", 0.0)
    return meta


def read_iq(path) -> IqFrame:
    raw = Path(path).read_bytes()
    if len(raw) % 8:
        raise ValidationError(f"{path}: {len(raw)} bytes is not a whole number of I/Q pairs")
    if not raw:
        raise ValidationError(f"{path}: file holds no samples")
    meta = read_meta(path)
    inter = np.frombuffer(raw, dtype="<f4")
    samples = inter[0::2].astype(np.float64) + 1j * inter[1::2].astype(np.float64)
    return IqFrame(samples, meta["sample_rate_hz"], meta["center_freq_hz"], meta["start_time_s"])


# ----------------------------------------------------------------------- CSVs

def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_spectrogram_csv(path, record: DopplerRecord) -> None:
    """Rows of ``time_s`` then dB per Doppler bin, floored 80 dB below the row max."""
    lines = [",".join(["time_s"] + [_fmt(f) for f in record.bins_hz])]
    for t, row in zip(record.times_s, record.rows_db):
        row = np.maximum(row, row.max() + SPECTROGRAM_FLOOR_DB)
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_spectrogram_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(times_s, bins_hz, rows_db)`` from a spectrogram CSV."""
    data = np.loadtxt(path, delimiter=",", dtype=str)
    bins = data[0, 1:].astype(np.float64)
    body = data[1:].astype(np.float64)
    return body[:, 0], bins, body[:, 1:]


def write_detections_csv(path, detections: list[Detection]) -> None:
    lines = ["time_s,doppler_hz,power_db,threshold_db"]
    lines += [",".join(_fmt(v) for v in (d.time_s, d.doppler_hz, d.power_db, d.threshold_db))
              for d in detections]
    Path(path).write_text("\n".join(lines) + "\n")


# -------------------------------------------------------------------- configs

def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("off", "none", "") else float(text)


def _batches(text: str) -> int | None:
    return None if text.strip().lower() == "auto" else int(text)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(float(v)) for v in text.split(",") if v.strip())


def _components(text: str) -> tuple[MotionModel, ...]:
    out = []
    for item in text.split(","):
        parts = item.strip().split(":")
        if len(parts) != 3:
            raise ValueError(f"component {item.strip()!r} is not kind:amplitude_m:rate_hz")
        out.append(MotionModel(parts[0].strip(), float(parts[1]), float(parts[2])))
    return tuple(out)


# Section kind -> key -> value parser. Anything not listed is rejected.
SCHEMA: dict[str, dict[str, object]] = {
    "waveform": {"kind": str, "bandwidth_hz": float, "burst_len_s": float,
                 "gap_min_s": float, "gap_max_s": float, "power_dbm": float},
    "capture": {"sample_rate_hz": float, "duration_s": float},
    "scene": {"carrier_hz": float, "direct_path_gain_db": float,
              "noise_power_db": _optional_float},
    "reflector": {"gain_db": float, "kind": str, "amplitude_m": float, "rate_hz": float,
                  "velocity_mps": float, "phase_rad": float, "jitter_amplitude_m": float,
                  "jitter_rate_hz": float, "components": _components},
    "pipeline": {"window_s": float, "hop_s": float, "queue_capacity": int, "chunk_s": float,
                 "engine": str, "portion": float, "batches": _batches, "v_max_mps": float,
                 "max_doppler_hz": _optional_float, "hann": _bool, "downsample": int,
                 "stage_delays_s": _floats},
    "nlms": {"enabled": _bool, "num_taps": int, "step_mu": float, "regularizer_eps": float},
    "clean": {"enabled": _bool, "max_iterations": int, "stop_threshold_db": float,
              "loop_gain": float},
    "cfar": {"num_train": int, "num_guard": int, "pfa": float},
    "bench": {"sizes": _ints, "sample_rate_hz": float, "bandwidth_hz": float,
              "carrier_hz": float, "portion": float, "batches": int,
              "downsample_factors": _ints, "repeats": int, "target_bin": int, "seed": int,
              "burst_len_s": float, "gap_min_s": float, "gap_max_s": float},
}


@dataclass
class ConfigFile:
    """Parsed, schema-checked config with line numbers for error messages."""

    path: str
    values: dict[str, dict[str, object]]
    lines: dict[tuple[str, str | None], int]

    def where(self, section: str, key: str | None = None) -> str:
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        return f"{self.path}:{line}" if line else self.path

    def error(self, section: str, key: str | None, message: str) -> ValidationError:
        return ValidationError(f"{self.where(section, key)}: [{section}] {message}")

    def section(self, name: str) -> dict[str, object]:
        return self.values.get(name, {})

    def sections(self, prefix: str) -> list[str]:
        return [s for s in self.values if s == prefix or s.startswith(prefix + ".")]


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    index: dict[tuple[str, str | None], int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), lineno)
        elif section and line and line[0] not in "#;":
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            index.setdefault((section, key), lineno)
    return index


def parse_config_text(text: str, path: str = "<config>") -> ConfigFile:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        prefix = f"{path}:{lineno}" if lineno else path
        raise ValidationError(f"{prefix}: {exc.message.splitlines()[0]}") from None
    lines = _line_index(text)
    cfg = ConfigFile(path, {}, lines)
    for section in parser.sections():
        kind = section.split(".", 1)[0]
        if kind not in SCHEMA:
            raise cfg.error(section, None, f"unknown section (known: {', '.join(SCHEMA)})")
        schema = SCHEMA[kind]
        parsed = {}
        for key, raw in parser.items(section):
            if key not in schema:
                raise cfg.error(section, key, f"unknown key {key!r}")
            try:
                parsed[key] = schema[key](raw)
            except (TypeError, ValueError) as exc:
                raise cfg.error(section, key, f"bad value for {key}: {exc}") from None
        cfg.values[section] = parsed
    return cfg


def load_config(path) -> ConfigFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config_text(text, str(path))


def empty_config() -> ConfigFile:
    return ConfigFile("<defaults>", {}, {})


@dataclass(frozen=True)
class SynthSettings:
    waveform: WaveformSpec
    scene: Scene
    sample_rate_hz: float
    duration_s: float


def synth_settings(cfg: ConfigFile) -> SynthSettings:
    """Waveform, capture and scene sections as model objects."""
    cap = cfg.section("capture")
    for key in ("sample_rate_hz", "duration_s"):
        if key not in cap:
            raise cfg.error("capture", None, f"missing required key {key!r}")
        if not cap[key] > 0:
            raise cfg.error("capture", key, f"{key} must be positive, got {cap[key]}")
    try:
        waveform = WaveformSpec(**cfg.section("waveform"))
    except (TypeError, ValueError) as exc:
        raise cfg.error("waveform", None, str(exc)) from None
    if waveform.kind == "wifi_bursts" and cap["sample_rate_hz"] < waveform.bandwidth_hz:
        raise cfg.error("capture", "sample_rate_hz",
                        f"sample rate {cap['sample_rate_hz']:g} Hz is below the "
                        f"{waveform.bandwidth_hz:g} Hz waveform bandwidth")

    reflectors = []
    for name in cfg.sections("reflector"):
        sec = dict(cfg.section(name))
        try:
            gain = sec.pop("gain_db")
        except KeyError:
            raise cfg.error(name, None, "missing required key 'gain_db'") from None
        ja, jr = sec.pop("jitter_amplitude_m", None), sec.pop("jitter_rate_hz", None)
        if (ja is None) != (jr is None):
            raise cfg.error(name, None, "give both jitter_amplitude_m and jitter_rate_hz")
        if ja is not None:
            sec["jitter"] = (ja, jr)
        if "kind" not in sec:
            raise cfg.error(name, None, "missing required key 'kind'")
        try:
            reflectors.append(Reflector(gain, MotionModel(**sec)))
        except (TypeError, ValueError) as exc:
            raise cfg.error(name, None, str(exc)) from None
    try:
        scene = Scene(reflectors=tuple(reflectors), **cfg.section("scene"))
    except (TypeError, ValueError) as exc:
        raise cfg.error("scene", None, str(exc)) from None
    return SynthSettings(waveform, scene, cap["sample_rate_hz"], cap["duration_s"])


@dataclass(frozen=True)
class ProcessSettings:
    pipeline: PipelineConfig
    chunk_s: float


def process_settings(cfg: ConfigFile, overrides: dict | None = None) -> ProcessSettings:
    """Pipeline, NLMS, CLEAN and CFAR sections, with command-line overrides applied.

    ``overrides`` keys: window_s, hop_s, engine, portion, downsample, nlms,
    clean (bools) and pfa.
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    pipe = dict(cfg.section("pipeline"))
    chunk_s = pipe.pop("chunk_s", None)
    delays = pipe.pop("stage_delays_s", None)
    engine_keys = ("engine", "portion", "batches", "v_max_mps", "max_doppler_hz", "hann",
                   "downsample")
    engine_kw = {k: pipe.pop(k) for k in engine_keys if k in pipe}
    for k in ("engine", "portion", "downsample"):
        if k in overrides:
            engine_kw[k] = overrides[k]
    for k in ("window_s", "hop_s"):
        if k in overrides:
            pipe[k] = overrides[k]

    nlms_sec = dict(cfg.section("nlms"))
    nlms_on = overrides.get("nlms", nlms_sec.pop("enabled", False))
    clean_sec = dict(cfg.section("clean"))
    clean_on = overrides.get("clean", clean_sec.pop("enabled", False))
    cfar_sec = dict(cfg.section("cfar"))
    if "pfa" in overrides:
        cfar_sec["pfa"] = overrides["pfa"]

    try:
        nlms = NlmsConfig(**nlms_sec) if nlms_on else None
    except (TypeError, ValueError) as exc:
        raise cfg.error("nlms", None, str(exc)) from None
    try:
        clean = CleanConfig(**clean_sec) if clean_on else None
    except (TypeError, ValueError) as exc:
        raise cfg.error("clean", None, str(exc)) from None
    try:
        cfar = CfarConfig(**cfar_sec)
    except (TypeError, ValueError) as exc:
        raise cfg.error("cfar", None, str(exc)) from None
    try:
        engine = EngineConfig(nlms=nlms, clean=clean, **engine_kw)
        pipeline = PipelineConfig(engine=engine, cfar=cfar, stage_delays_s=delays, **pipe)
    except (TypeError, ValueError) as exc:
        raise cfg.error("pipeline", None, str(exc)) from None
    if chunk_s is None:
        chunk_s = pipeline.hop_s
    if not chunk_s > 0:
        raise cfg.error("pipeline", "chunk_s", "chunk_s must be positive")
    return ProcessSettings(pipeline, chunk_s)
