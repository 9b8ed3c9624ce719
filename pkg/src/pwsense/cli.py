"""``pwsense`` command line: synth, process, bench.

Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .bench import BenchSettings, run_bench
from .pipeline import RecordCollector, chunked_source, run_pipeline
from .synth import apply_scene, gen_waveform

logger = logging.getLogger("pwsense")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _check_writable(*paths) -> None:
    for path in paths:
        if path and not Path(path).resolve().parent.is_dir():
            raise io.ValidationError(f"{path}: output directory does not exist")


def cmd_synth(args) -> int:
    cfg = io.load_config(args.config)
    settings = io.synth_settings(cfg)
    _check_writable(args.out_ref, args.out_surv)
    wave_seed, noise_seed = np.random.SeedSequence(args.seed).generate_state(2)
    try:
        tx = gen_waveform(settings.waveform, settings.duration_s, settings.sample_rate_hz,
                          seed=int(wave_seed), carrier_hz=settings.scene.carrier_hz)
    except ValueError as exc:
        raise io.ValidationError(f"{args.config}: {exc}") from None
    ref, surv = apply_scene(tx, settings.scene, seed=int(noise_seed))
    io.write_iq(args.out_ref, ref)
    io.write_iq(args.out_surv, surv)
    logger.info("wrote %d samples per channel (%.3f s at %g Hz)",
                len(ref), ref.duration_s, ref.sample_rate_hz)
    return EXIT_OK


def cmd_process(args) -> int:
    cfg = io.load_config(args.config) if args.config else io.empty_config()
    overrides = {"window_s": args.window_s, "hop_s": args.hop_s, "engine": args.engine,
                 "portion": args.portion, "downsample": args.downsample,
                 "nlms": args.nlms, "clean": args.clean, "pfa": args.pfa}
    settings = io.process_settings(cfg, overrides)
    _check_writable(args.out_spectrogram, args.out_detections, args.out_stats)
    ref = io.read_iq(args.ref)
    surv = io.read_iq(args.surv)
    if len(ref) != len(surv):
        raise io.ValidationError(
            f"length mismatch: reference {args.ref} has {len(ref)} samples, "
            f"surveillance {args.surv} has {len(surv)}")
    if ref.sample_rate_hz != surv.sample_rate_hz:
        raise io.ValidationError(
            f"sample rate mismatch: {ref.sample_rate_hz} vs {surv.sample_rate_hz} Hz")
    pipe = settings.pipeline
    if pipe.window_s > ref.duration_s:
        raise io.ValidationError(
            f"window of {pipe.window_s} s exceeds the {ref.duration_s:.6g} s capture")
    nyquist = ref.sample_rate_hz / pipe.engine.downsample / 2
    span = pipe.engine.max_doppler_hz
    if span is not None and span > nyquist / 10:
        logger.warning("Doppler span %.3g Hz exceeds a tenth of the decimated Nyquist "
                       "rate (%.3g Hz); aliasing is possible", span, nyquist)

    sink = RecordCollector()
    stats = run_pipeline(chunked_source(ref, surv, settings.chunk_s), pipe, sink)
    record = sink.record(pipe)
    io.write_spectrogram_csv(args.out_spectrogram, record)
    io.write_detections_csv(args.out_detections, sink.detections)
    if args.out_stats:
        Path(args.out_stats).write_text(stats.to_text())
    logger.info("processed %d windows, %d detections", stats.frames_out, len(sink.detections))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = io.load_config(args.config)
    _check_writable(args.out_report)
    try:
        settings = BenchSettings(**cfg.section("bench"))
    except (TypeError, ValueError) as exc:
        raise cfg.error("bench", None, str(exc)) from None
    report = run_bench(settings)
    Path(args.out_report).write_text(json.dumps(report, indent=2) + "\n")
    for row in report["results"]:
        logger.info("N=%d speedup=%.1fx peak_agree=%s", row["n"], row["speedup"],
                    row["peak_agree"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwsense",
                                     description="Passive Wi-Fi Doppler sensing toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesise a reference/surveillance IQ pair")
    p.add_argument("--config", required=True)
    p.add_argument("--out-ref", required=True)
    p.add_argument("--out-surv", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("process", help="run the sensing pipeline on an IQ pair")
    p.add_argument("--ref", required=True)
    p.add_argument("--surv", required=True)
    p.add_argument("--config")
    p.add_argument("--out-spectrogram", required=True)
    p.add_argument("--out-detections", required=True)
    p.add_argument("--out-stats")
    p.add_argument("--window-s", type=float)
    p.add_argument("--hop-s", type=float)
    p.add_argument("--engine", choices=("direct", "batched"))
    p.add_argument("--portion", type=float)
    p.add_argument("--downsample", type=int)
    p.add_argument("--nlms", type=_on_off)
    p.add_argument("--clean", type=_on_off)
    p.add_argument("--pfa", type=float)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("bench", help="time direct vs batched vs down-sampled CAF")
    p.add_argument("--config", required=True)
    p.add_argument("--out-report", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except io.ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
