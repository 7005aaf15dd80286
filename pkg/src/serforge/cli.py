"""Command-line entry point.

Subcommands: estimate-noise, craft, extract-features, train, attack-eval,
defend, report. Experiment commands take --config (JSON with
ExperimentConfig fields) plus flag overrides; the SERFORGE_SEED
environment variable overrides the seed list globally. Exit codes: 0 on
success, 2 on configuration errors, 3 on data errors.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from .attack import AttackConfig, NoiseSource, craft_adversarial, perceptibility_snr
from .audio import load_wav, save_wav
from .bench import (
    DEFENSE_METHODS,
    config_from_dict,
    emit_report,
    parse_report_csv,
    prepare_run,
    run_adversarial_training_curve,
    run_defense_comparison,
    run_epsilon_sweep,
)
from .classifier import evaluate, save_model
from .corpus import generate_noise_source
from .errors import ConfigError, DataError, SerforgeError
from .features import extract_lld
from .noise import estimate_noise_profile

NOISE_KIND_CHOICES = ("cafe", "meeting", "station")


def _parse_number_list(text: str):
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _experiment_config(args):
    data = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")

    env_seed = os.environ.get("SERFORGE_SEED")
    if env_seed is not None:
        try:
            data["seeds"] = [int(env_seed)]
        except ValueError as exc:
            raise ConfigError(f"SERFORGE_SEED must be an integer, got {env_seed!r}") from exc

    overrides = {
        "seeds": [int(s) for s in _parse_number_list(args.seeds)]
        if getattr(args, "seeds", None)
        else None,
        "epsilons": _parse_number_list(args.epsilons)
        if getattr(args, "epsilons", None)
        else None,
        "mix_fractions": _parse_number_list(args.mix_fractions)
        if getattr(args, "mix_fractions", None)
        else None,
        "noise_kinds": args.noise_kinds.split(",")
        if getattr(args, "noise_kinds", None)
        else None,
        "noise_std": getattr(args, "noise_std", None),
        "max_epochs": getattr(args, "max_epochs", None),
        "gan_max_steps": getattr(args, "gan_max_steps", None),
        "corpus_csv": getattr(args, "corpus_csv", None),
        "label_scheme": getattr(args, "label_scheme", None),
        "output_dir": getattr(args, "output_dir", None),
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data)


def _add_experiment_flags(parser):
    parser.add_argument("--config", help="JSON file with ExperimentConfig fields")
    parser.add_argument("--seeds", help="comma-separated seed list")
    parser.add_argument("--epsilons", help="comma-separated epsilon list")
    parser.add_argument("--mix-fractions", help="comma-separated mix fractions")
    parser.add_argument(
        "--noise-kinds", help="comma-separated subset of cafe,meeting,station"
    )
    parser.add_argument("--noise-std", type=float)
    parser.add_argument("--max-epochs", type=int)
    parser.add_argument("--gan-max-steps", type=int)
    parser.add_argument("--corpus-csv", help="path,raw_label,speaker_id CSV")
    parser.add_argument(
        "--label-scheme", choices=("iemocap", "fau_aibo")
    )
    parser.add_argument("--output-dir", help="report output directory")


def _default_seed() -> int:
    env_seed = os.environ.get("SERFORGE_SEED")
    if env_seed is None:
        return 0
    try:
        return int(env_seed)
    except ValueError as exc:
        raise ConfigError(f"SERFORGE_SEED must be an integer, got {env_seed!r}") from exc


def _emit(report, args, config):
    out_dir = args.output_dir or config.output_dir
    paths = emit_report(report, out_dir)
    print(json.dumps({"written": [str(p) for p in paths]}))


def _cmd_estimate_noise(args) -> int:
    profile = estimate_noise_profile(load_wav(args.input))
    payload = {
        "time_mean": profile.time_mean,
        "time_variance": profile.time_variance,
        "spectral_floor": list(profile.spectral_floor),
        "frame_length": profile.frame_config.frame_length,
        "hop_length": profile.frame_config.hop_length,
    }
    text = json.dumps(payload, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def _cmd_craft(args) -> int:
    x = load_wav(args.input)
    seed = args.seed if args.seed is not None else _default_seed()
    if args.noise in NOISE_KIND_CHOICES:
        source = generate_noise_source(args.noise, 30.0, seed + 1)
        kind = args.noise
    else:
        source = NoiseSource(load_wav(args.noise))
        kind = "user_supplied"
    config = AttackConfig(args.epsilon, kind, seed)
    adversarial = craft_adversarial(x, source, config)
    save_wav(adversarial, args.output)
    print(
        json.dumps(
            {
                "output": str(args.output),
                "snr_db": perceptibility_snr(x, adversarial),
            }
        )
    )
    return 0


def _cmd_extract_features(args) -> int:
    seq = extract_lld(load_wav(args.input))
    lines = [",".join(seq.descriptor_names)]
    for row in seq.frames:
        lines.append(",".join(repr(float(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_train(args) -> int:
    config = _experiment_config(args)
    run = prepare_run(config, config.seeds[0])
    save_model(run.params, args.output)
    print(
        json.dumps(
            {
                "checkpoint": str(args.output),
                "seed": run.seed,
                "eval_ua": evaluate(run.params, run.features_eval).unweighted_accuracy,
                "test_ua": evaluate(run.params, run.features_test).unweighted_accuracy,
            }
        )
    )
    return 0


def _cmd_attack_eval(args) -> int:
    config = _experiment_config(args)
    _emit(run_epsilon_sweep(config), args, config)
    return 0


def _cmd_defend(args) -> int:
    config = _experiment_config(args)
    if args.method == "advtrain" and args.curve:
        report = run_adversarial_training_curve(config)
    else:
        methods = (
            DEFENSE_METHODS if args.method == "all" else ("none", args.method)
        )
        report = run_defense_comparison(config, methods=methods)
    _emit(report, args, config)
    return 0


def _cmd_report(args) -> int:
    report = parse_report_csv(args.input)
    formats = ("csv", "svg") if args.format == "both" else (args.format,)
    paths = emit_report(report, args.output_dir, formats=formats)
    print(json.dumps({"written": [str(p) for p in paths]}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="serforge",
        description="Adversarial noise attacks and defenses for speech "
        "emotion recognition.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-noise", help="estimate a background-noise profile")
    p.add_argument("--input", required=True, help="input WAV file")
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_estimate_noise)

    p = sub.add_parser("craft", help="craft an adversarial copy of a WAV file")
    p.add_argument("--input", required=True)
    p.add_argument(
        "--noise",
        required=True,
        help="cafe, meeting, station, or a WAV file of recorded noise",
    )
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_craft)

    p = sub.add_parser("extract-features", help="frame-level descriptor CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_extract_features)

    p = sub.add_parser("train", help="train the baseline valence classifier")
    _add_experiment_flags(p)
    p.add_argument("--output", default="model.npz", help="checkpoint path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("attack-eval", help="epsilon sweep of attacked-test error")
    _add_experiment_flags(p)
    p.set_defaults(func=_cmd_attack_eval)

    p = sub.add_parser("defend", help="evaluate a defense against the attack")
    _add_experiment_flags(p)
    p.add_argument(
        "--method",
        required=True,
        choices=("randnoise", "advtrain", "gan", "all"),
    )
    p.add_argument(
        "--curve",
        action="store_true",
        help="with --method advtrain: sweep the full mix-fraction grid",
    )
    p.set_defaults(func=_cmd_defend)

    p = sub.add_parser("report", help="re-render charts from a report CSV")
    p.add_argument("--input", required=True, help="existing report.csv")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--format", choices=("csv", "svg", "both"), default="both")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (DataError, SerforgeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
