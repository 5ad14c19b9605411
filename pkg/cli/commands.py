"""Subcommands. Each `cmd_*` does the work on files and returns its result;
the `run_*` wrappers adapt argparse namespaces and print status lines."""

import argparse
import json
import logging
from pathlib import Path

from cli.pipeline_config import PipelineConfig
from ctmc.fit import fit_generator
from ctmc.generator import GeneratorMatrix, stationary, strip_movement_state
from ctmc.model_io import BreathingModel, ModelMeta, load_model, load_schedule, save_model, save_schedule, save_servo_schedule
from ctmc.simulate import SojournSchedule, simulate
from errors import ConfigurationError, InvalidInputError, UnsupportedStateError
from evaluation.detection import confusion_times, roc, sens_spec_dor, threshold_sweep
from evaluation.events import apnea_event_summary, truth_timeline
from evaluation.metrics import kl_divergence, occupancy_pmf, rr_accuracy
from evaluation.reference_detector import reference_apnea_detector
from evaluation.report import (
    detection_metrics,
    event_metrics,
    load_labels,
    load_scores,
    metric,
    roc_metrics,
    rr_accuracy_metrics,
    save_labels,
    save_scores,
    write_report,
    write_roc_csv,
)
from quantizer.quantize import quantize
from quantizer.state_space import StateSpace, build_state_space
from respiration.csv_io import load_pneumogram, load_trajectory, save_pneumogram, save_trajectory
from respiration.rr_trajectory import estimate_rr_trajectory
from synth.frames import Region, read_fseq, write_fseq
from synth.motion_signal import synth_motion_signal
from synth.warp import NoiseOptions, normalize_rates, plan_warp, warp_frames

logger = logging.getLogger(__name__)

DEFAULT_SIGNAL_RATE_HZ = 32.0
DEFAULT_AMPLITUDE_UV = 100.0


# ==================== COMMANDS ====================


def cmd_estimate_rr(pneumogram_path, output_path, cfg: PipelineConfig):
    record = load_pneumogram(pneumogram_path)
    traj = estimate_rr_trajectory(
        record, cfg.window_config(record.sample_rate), cfg.eta_uv, cfg.bounds(), cfg.amp_threshold
    )
    save_trajectory(output_path, traj, cfg.echo())
    return traj


def cmd_fit(trajectory_path, output_path, cfg: PipelineConfig) -> BreathingModel:
    traj = load_trajectory(trajectory_path)
    ss = build_state_space(traj, cfg.n_states, cfg.include_apnea, cfg.include_movement, cfg.bounds())
    gen = fit_generator(quantize(traj, ss))
    model = BreathingModel(
        generator=gen,
        state_space=ss,
        stationary=stationary(gen, allow_partial=bool(gen.unvisited)),
        meta=ModelMeta(source=Path(trajectory_path).name, fit_step_s=traj.window_step_s, config=cfg.model_dump()),
    )
    save_model(output_path, model)
    return model


def _active_model(model: BreathingModel, strip_movement: bool) -> tuple[GeneratorMatrix, StateSpace]:
    if strip_movement:
        return strip_movement_state(model.generator, model.state_space)
    return model.generator, model.state_space


def cmd_simulate(
    model_path,
    output_path,
    duration: float,
    cfg: PipelineConfig,
    strip_movement: bool = False,
    servo_path=None,
) -> SojournSchedule:
    gen, ss = _active_model(load_model(model_path), strip_movement)
    schedule = simulate(gen, ss, duration, cfg.seed, allow_partial=bool(gen.unvisited))
    save_schedule(output_path, schedule, cfg.echo(duration_s=duration, strip_movement=strip_movement))
    if servo_path is not None:
        save_servo_schedule(servo_path, schedule)
    return schedule


def _schedule_without_movement(schedule_path, model: BreathingModel) -> tuple[SojournSchedule, GeneratorMatrix]:
    """Load a schedule for synthesis, which has no waveform for movement."""
    gen, ss = model.generator, model.state_space
    schedule = load_schedule(schedule_path, ss)
    if ss.has_movement:
        if (schedule.states == ss.movement_index).any():
            raise UnsupportedStateError("schedule visits the movement state; simulate with --strip-movement")
        gen, ss = strip_movement_state(gen, ss)
        schedule = SojournSchedule(schedule.states, schedule.sojourns, ss, schedule.seed)
    return schedule, gen


def cmd_synth_signal(
    schedule_path,
    model_path,
    output_path,
    cfg: PipelineConfig,
    sample_rate: float = DEFAULT_SIGNAL_RATE_HZ,
    amplitude: float = DEFAULT_AMPLITUDE_UV,
    noise_sigma: float = 0.0,
    apnea_breathing: bool = False,
):
    schedule, _ = _schedule_without_movement(schedule_path, load_model(model_path))
    record = synth_motion_signal(
        schedule,
        schedule.state_space,
        sample_rate,
        amplitude,
        apnea_rate=cfg.apnea_rate_hz if apnea_breathing else None,
        noise_sigma=noise_sigma,
        seed=cfg.seed,
    )
    run = {
        "sample_rate_hz": sample_rate,
        "amplitude_uv": amplitude,
        "noise_sigma": noise_sigma,
        "apnea_breathing": apnea_breathing,
    }
    save_pneumogram(output_path, record, cfg.echo(**run))
    return record


def sidecar_path(output_path) -> Path:
    return Path(f"{output_path}.json")


def _write_sidecar(output_path, cfg: PipelineConfig, **run) -> None:
    """Run record for binary outputs, which have no comment header."""
    doc = {"config": cfg.model_dump(), **run}
    sidecar_path(output_path).write_text(json.dumps(doc, indent=2) + "\n")


def cmd_synth_frames(
    schedule_path,
    model_path,
    source_path,
    output_path,
    cfg: PipelineConfig,
    video_rate: float,
    noise: NoiseOptions = NoiseOptions(),
    scale_to_dominant: bool = False,
):
    schedule, gen = _schedule_without_movement(schedule_path, load_model(model_path))
    src = read_fseq(source_path)
    rates = normalize_rates(schedule.state_space, video_rate, cfg.apnea_rate_hz)
    plan = plan_warp(schedule, rates, src.frame_rate, src.n_frames, gen.exit_rates, scale_to_dominant)
    out = warp_frames(src, plan, noise, cfg.seed)
    write_fseq(output_path, out)
    _write_sidecar(
        output_path,
        cfg,
        video_rate_hz=video_rate,
        noise_enabled=noise.enabled,
        noise_region=None if noise.region is None else str(noise.region),
        scale_to_dominant=scale_to_dominant,
    )
    return out


def cmd_eval_rr(pred_path, truth_path, report_path, cfg: PipelineConfig) -> dict:
    acc = rr_accuracy(load_trajectory(pred_path), load_trajectory(truth_path), cfg.tolerance)
    metrics = rr_accuracy_metrics(acc)
    write_report(report_path, metrics, cfg.model_dump())
    return metrics


def cmd_eval_apnea(
    report_path,
    cfg: PipelineConfig,
    pred_path=None,
    scores_path=None,
    pneumogram_path=None,
    truth_path=None,
    schedule_path=None,
    model_path=None,
    roc_path=None,
    direction: str = "greater",
) -> dict:
    """Score an apnea detector. Predictions come from label/score files or
    from running the reference detector on a pneumogram; truth comes from a
    label file or from a schedule and its model. File scores are read with
    `direction`; the reference detector always scores low for apnea."""
    if pneumogram_path is not None:
        record = load_pneumogram(pneumogram_path)
        scores, pred = reference_apnea_detector(
            record,
            cfg.window_config(record.sample_rate),
            cfg.eta_uv,
            cfg.bounds(),
            cfg.amp_threshold,
            cfg.min_event_s,
        )
        direction = "less"
        stem = Path(report_path).with_suffix("")
        save_labels(f"{stem}.pred.csv", pred, cfg.echo())
        save_scores(f"{stem}.scores.csv", scores, cfg.echo())
    elif pred_path is not None:
        pred = load_labels(pred_path)
        scores = load_scores(scores_path) if scores_path is not None else None
    else:
        raise ConfigurationError("give --pred or --pneumogram")

    metrics = {}
    if truth_path is not None:
        truth = load_labels(truth_path)
    elif schedule_path is not None and model_path is not None:
        schedule = load_schedule(schedule_path, load_model(model_path).state_space)
        truth = truth_timeline(schedule, pred.step_s, pred.origin_s, len(pred), cfg.min_event_s)
        metrics.update(event_metrics(apnea_event_summary(schedule, cfg.min_event_s)))
    else:
        raise ConfigurationError("give --truth, or --schedule together with --model")

    ct = confusion_times(pred, truth)
    metrics.update(detection_metrics(ct, sens_spec_dor(ct)))
    if scores is not None:
        curve = roc(scores, truth, threshold_sweep(scores.scores, cfg.roc_thresholds), direction)
        metrics.update(roc_metrics(curve))
        if roc_path is not None:
            write_roc_csv(roc_path, curve)
    write_report(report_path, metrics, cfg.model_dump())
    return metrics


def cmd_kl(model_path, cfg: PipelineConfig, schedule_path=None, trajectory_path=None, report_path=None) -> float:
    """KL divergence in bits from an observed occupancy to the model's pi."""
    model = load_model(model_path)
    if schedule_path is not None:
        gen, ss = model.generator, model.state_space
        schedule = load_schedule(schedule_path, ss)
        if ss.has_movement and not (schedule.states == ss.movement_index).any():
            # schedules simulated from the stripped model
            gen, ss = strip_movement_state(gen, ss)
            schedule = SojournSchedule(schedule.states, schedule.sojourns, ss, schedule.seed)
        observed = schedule.occupancy()
        pi = stationary(gen, allow_partial=bool(gen.unvisited)).probabilities
    elif trajectory_path is not None:
        observed = occupancy_pmf(quantize(load_trajectory(trajectory_path), model.state_space))
        pi = model.stationary.probabilities
    else:
        raise ConfigurationError("give --schedule or --trajectory")
    bits = kl_divergence(observed, pi / pi.sum())
    if report_path is not None:
        write_report(report_path, {"kl_divergence": metric(bits, "bits")}, cfg.model_dump())
    return bits


# ==================== ARGPARSE WIRING ====================


def _config(args) -> PipelineConfig:
    flags = {
        "window_s": args.window_s,
        "overlap": args.overlap,
        "eta_uv": args.eta_uv,
        "preset": args.preset,
        "r_low": args.r_low,
        "r_high": args.r_high,
        "apnea_rate_hz": args.apnea_rate,
        "amp_threshold": args.amp_threshold,
        "n_states": args.n_states,
        "seed": args.seed,
        "roc_thresholds": args.roc_thresholds,
        "min_event_s": args.min_event_s,
    }
    if args.no_apnea:
        flags["include_apnea"] = False
    if args.no_movement:
        flags["include_movement"] = False
    return PipelineConfig.resolve(flags, args.config)


def run_estimate_rr(args) -> None:
    traj = cmd_estimate_rr(args.input, args.output, _config(args))
    print(f"✅ Estimated RR on {len(traj)} windows -> {args.output}")


def run_fit(args) -> None:
    model = cmd_fit(args.input, args.output, _config(args))
    rates = ", ".join(f"{r:.3g}" for r in model.state_space.rates)
    print(f"✅ Fitted {model.generator.n_states}-state model ({rates} Hz) -> {args.output}")


def run_simulate(args) -> None:
    cfg = _config(args)
    schedule = cmd_simulate(args.model, args.output, args.duration, cfg, args.strip_movement, args.servo)
    print(f"✅ Simulated {len(schedule)} sojourns over {schedule.duration:.1f} s -> {args.output}")


def run_synth(args) -> None:
    cfg = _config(args)
    if args.frames is not None:
        if args.video_rate is None:
            raise InvalidInputError("--frames needs --video-rate")
        noise = NoiseOptions(
            enabled=not args.no_noise,
            region=Region.parse(args.noise_region) if args.noise_region else None,
        )
        out = cmd_synth_frames(
            args.schedule, args.model, args.frames, args.output, cfg, args.video_rate, noise, args.scale_to_dominant
        )
        print(f"🎞️ Wrote {out.n_frames} frames at {out.frame_rate:g} fps -> {args.output}")
    else:
        record = cmd_synth_signal(
            args.schedule,
            args.model,
            args.output,
            cfg,
            args.sample_rate,
            args.amplitude,
            args.noise_sigma,
            args.apnea_breathing,
        )
        print(f"✅ Wrote {len(record)} samples at {record.sample_rate:g} Hz -> {args.output}")


def run_eval(args) -> None:
    cfg = _config(args)
    if args.mode == "rr":
        if args.pred is None or args.truth is None:
            raise InvalidInputError("eval rr needs --pred and --truth trajectories")
        metrics = cmd_eval_rr(args.pred, args.truth, args.report, cfg)
    else:
        metrics = cmd_eval_apnea(
            args.report,
            cfg,
            pred_path=args.pred,
            scores_path=args.scores,
            pneumogram_path=args.pneumogram,
            truth_path=args.truth,
            schedule_path=args.schedule,
            model_path=args.model,
            roc_path=args.roc,
            direction=args.direction,
        )
    print(f"📊 {len(metrics)} metrics -> {args.report}")
    for name, entry in sorted(metrics.items()):
        print(f"   {name}: {entry['value']} {entry['unit']}")


def run_kl(args) -> None:
    bits = cmd_kl(args.model, _config(args), args.schedule, args.trajectory, args.report)
    print(f"📊 KL divergence: {bits:.6g} bits")


def _shared_options() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON object whose keys override these flags")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--window-s", type=float)
    shared.add_argument("--overlap", type=float)
    shared.add_argument("--eta-uv", type=float, help="movement threshold in µV")
    shared.add_argument("--preset", choices=["newborn", "adult"])
    shared.add_argument("--r-low", type=float)
    shared.add_argument("--r-high", type=float)
    shared.add_argument("--apnea-rate", type=float, help="slow rate standing in for apnea, Hz")
    shared.add_argument("--amp-threshold", type=float)
    shared.add_argument("--n-states", type=int)
    shared.add_argument("--no-apnea", action="store_true")
    shared.add_argument("--no-movement", action="store_true")
    shared.add_argument("--roc-thresholds", type=int)
    shared.add_argument("--min-event-s", type=float)
    return shared


def build_parser() -> argparse.ArgumentParser:
    shared = _shared_options()
    parser = argparse.ArgumentParser(prog="breathsim", description="Breathing-pattern models for apnea detector testing")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-rr", parents=[shared], help="pneumogram CSV -> RR trajectory CSV")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=run_estimate_rr)

    p = sub.add_parser("fit", parents=[shared], help="RR trajectory CSV -> model JSON")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=run_fit)

    p = sub.add_parser("simulate", parents=[shared], help="model JSON -> sojourn schedule CSV")
    p.add_argument("model")
    p.add_argument("--duration", type=float, required=True, help="seconds")
    p.add_argument("--strip-movement", action="store_true")
    p.add_argument("--servo", help="also write the manikin servo command CSV here")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=run_simulate)

    p = sub.add_parser("synth", parents=[shared], help="schedule -> motion signal or warped frames")
    p.add_argument("schedule")
    p.add_argument("--model", required=True)
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--signal", action="store_true", help="write a pneumogram CSV (default)")
    kind.add_argument("--frames", metavar="SRC.fseq", help="warp this frame sequence")
    p.add_argument("--sample-rate", type=float, default=DEFAULT_SIGNAL_RATE_HZ)
    p.add_argument("--amplitude", type=float, default=DEFAULT_AMPLITUDE_UV)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--apnea-breathing", action="store_true", help="breathe at --apnea-rate during apnea")
    p.add_argument("--video-rate", type=float, help="breathing rate of the source video, Hz")
    p.add_argument("--noise-region", help="row0,col0,row1,col1 of a static region")
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--scale-to-dominant", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=run_synth)

    p = sub.add_parser("eval", parents=[shared], help="score RR estimates or apnea detections")
    p.add_argument("mode", choices=["rr", "apnea"])
    p.add_argument("--pred")
    p.add_argument("--scores")
    p.add_argument("--pneumogram", help="run the reference detector on this recording")
    p.add_argument("--truth")
    p.add_argument("--schedule")
    p.add_argument("--model")
    p.add_argument("--roc", help="write the ROC curve CSV here")
    p.add_argument("--direction", choices=["greater", "less"], default="greater", help="score side that means apnea")
    p.add_argument("--report", required=True)
    p.set_defaults(handler=run_eval)

    p = sub.add_parser("kl", parents=[shared], help="KL divergence of an occupancy from the model's pi")
    p.add_argument("model")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--schedule")
    src.add_argument("--trajectory")
    p.add_argument("--report")
    p.set_defaults(handler=run_kl)

    return parser
