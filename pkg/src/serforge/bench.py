"""Experiment orchestration: perturbation sweeps, adversarial-training
curves, defense comparison, and CSV/SVG report emission.

Reports carry one row per (dataset, noise kind, epsilon, defense, seed)
plus a `seed="mean"` aggregate row per cell, so a chart label and its CSV
value are the same string. Everything is seeded; a rerun with the same
config reproduces the CSV byte-for-byte (no timestamps are embedded).
"""

import csv
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import TrainConfig, evaluate, forward, train
from .corpus import (
    CorpusSpec,
    generate_noise_source,
    generate_synthetic_corpus,
    load_labeled_corpus,
    split_speaker_independent,
)
from .defenses import (
    GanTrainConfig,
    MixSpec,
    augment_random_noise,
    gan_clean,
    gan_pretrain,
    gan_train,
    init_gan,
    mix_adversarial,
)
from .errors import ConfigError, IoFailure
from .features import NUM_DESCRIPTORS
from .pipeline import (
    craft_dataset,
    dataset_digest,
    featurize,
    fit_stats_on,
    noise_profiles,
)

CSV_COLUMNS = (
    "dataset_tag",
    "noise_kind",
    "epsilon",
    "defense",
    "error_rate",
    "ua",
    "attack_success_rate",
    "seed",
)

DEFENSE_METHODS = ("none", "randnoise", "advtrain", "gan")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment needs; hashable to a config digest."""

    corpus: CorpusSpec = field(default_factory=CorpusSpec)
    corpus_csv: str | None = None
    label_scheme: str = "iemocap"
    dataset_tag: str = "synthetic"
    noise_kinds: tuple = ("cafe", "meeting", "station")
    epsilons: tuple = (0.0, 0.5, 1.0, 1.5, 2.0)
    attack_epsilon: float = 2.0
    mix_fractions: tuple = (
        0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0,
    )
    noise_std: float = 0.005
    seeds: tuple = (0, 1, 2)
    max_epochs: int = 60
    hidden_sizes: tuple = (64, 64)
    noise_duration_s: float = 30.0
    gan_max_steps: int = 10000
    gan_pretrain_epochs: int = 20
    output_dir: str = "reports"

    def __post_init__(self):
        if not self.epsilons or any(e < 0 for e in self.epsilons):
            raise ConfigError("epsilons must be nonempty with values >= 0")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(not 0.0 <= f <= 1.0 for f in self.mix_fractions):
            raise ConfigError("mix fractions must lie in [0, 1]")
        if self.attack_epsilon < 0 or self.noise_std < 0:
            raise ConfigError("attack_epsilon and noise_std must be >= 0")
        if self.noise_duration_s <= 0:
            raise ConfigError("noise_duration_s must be positive")
        unknown = set(self.noise_kinds) - {"cafe", "meeting", "station"}
        if not self.noise_kinds or unknown:
            raise ConfigError(f"unsupported noise kinds: {sorted(unknown)}")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["corpus"] = asdict(self.corpus)
        return data

    def config_hash(self) -> str:
        data = self.to_dict()
        data.pop("output_dir")  # where results land does not affect them
        payload = json.dumps(data, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def config_from_dict(data: dict) -> ExperimentConfig:
    """ExperimentConfig from a plain JSON-style dict (unknown keys rejected)."""
    data = dict(data)
    corpus_data = data.pop("corpus", {})
    known_corpus = {f for f in CorpusSpec.__dataclass_fields__}
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    bad = (set(data) - known) | (set(corpus_data) - known_corpus)
    if bad:
        raise ConfigError(f"unknown config keys: {sorted(bad)}")
    try:
        corpus = CorpusSpec(**corpus_data)
        config = ExperimentConfig(corpus=corpus, **data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    # JSON arrays arrive as lists; normalize to the tuple invariants
    return replace(
        config,
        noise_kinds=tuple(config.noise_kinds),
        epsilons=tuple(config.epsilons),
        mix_fractions=tuple(config.mix_fractions),
        seeds=tuple(config.seeds),
        hidden_sizes=tuple(config.hidden_sizes),
    )


@dataclass
class ExperimentReport:
    """Result rows plus the metadata needed to reproduce them."""

    rows: list
    metadata: dict

    def __post_init__(self):
        seen = set()
        for row in self.rows:
            if set(row) != set(CSV_COLUMNS):
                raise ValueError("row keys must match the CSV columns")
            key = (
                row["dataset_tag"],
                row["noise_kind"],
                row["epsilon"],
                row["defense"],
                row["seed"],
            )
            if key in seen:
                raise ValueError(f"duplicate report row {key}")
            seen.add(key)
            if abs(row["error_rate"] - (100.0 - row["ua"])) > 1e-9:
                raise ValueError("error_rate must equal 100 - ua")


# ---------------------------------------------------------------------------
# Shared experiment plumbing
# ---------------------------------------------------------------------------


@dataclass
class PreparedRun:
    """One seed's corpus, split, features and trained baseline model."""

    seed: int
    train_set: list
    eval_set: list
    test_set: list
    stats: object
    features_train: list
    features_eval: list
    features_test: list
    params: object
    profiles_train: list
    profiles_eval: list
    profiles_test: list


def prepare_run(config: ExperimentConfig, seed: int) -> PreparedRun:
    """Generate/load the corpus, split it, and train the baseline model."""
    if config.corpus_csv is not None:
        corpus = load_labeled_corpus(config.corpus_csv, config.label_scheme)
    else:
        spec = replace(config.corpus, seed=config.corpus.seed + seed)
        corpus = generate_synthetic_corpus(spec)
    train_set, eval_set, test_set = split_speaker_independent(corpus, seed)
    stats = fit_stats_on(train_set)
    f_train = featurize(train_set, stats)
    f_eval = featurize(eval_set, stats)
    f_test = featurize(test_set, stats)
    params, _ = train(
        f_train,
        f_eval,
        TrainConfig(seed=seed, max_epochs=config.max_epochs),
        hidden_sizes=config.hidden_sizes,
    )
    return PreparedRun(
        seed,
        train_set,
        eval_set,
        test_set,
        stats,
        f_train,
        f_eval,
        f_test,
        params,
        noise_profiles(train_set),
        noise_profiles(eval_set),
        noise_profiles(test_set),
    )


def _predictions(params, dataset) -> np.ndarray:
    return np.array([int(forward(params, seq).argmax()) for seq, _ in dataset])


def attack_success_rate(
    clean_pred: np.ndarray, attacked_pred: np.ndarray, labels: np.ndarray
) -> float:
    """Percent of clean-correct utterances flipped to incorrect."""
    correct = clean_pred == labels
    if not correct.any():
        return 0.0
    flipped = attacked_pred[correct] != labels[correct]
    return float(flipped.mean() * 100.0)


def _row(config, kind, epsilon, defense, metrics, asr, seed) -> dict:
    return {
        "dataset_tag": config.dataset_tag,
        "noise_kind": kind,
        "epsilon": float(epsilon),
        "defense": defense,
        "error_rate": float(metrics.error_rate),
        "ua": float(metrics.unweighted_accuracy),
        "attack_success_rate": float(asr),
        "seed": seed,
    }


def _append_mean_rows(rows: list) -> list:
    groups = {}
    for row in rows:
        key = (row["dataset_tag"], row["noise_kind"], row["epsilon"], row["defense"])
        groups.setdefault(key, []).append(row)
    out = list(rows)
    for key, members in groups.items():
        if len(members) < 2:
            continue
        ua = float(np.mean([m["ua"] for m in members]))
        out.append(
            {
                "dataset_tag": key[0],
                "noise_kind": key[1],
                "epsilon": key[2],
                "defense": key[3],
                "error_rate": 100.0 - ua,
                "ua": ua,
                "attack_success_rate": float(
                    np.mean([m["attack_success_rate"] for m in members])
                ),
                "seed": "mean",
            }
        )
    return out


def _report(rows, config: ExperimentConfig) -> ExperimentReport:
    return ExperimentReport(
        _append_mean_rows(rows),
        {
            "version": f"serforge-{__version__}",
            "config_hash": config.config_hash(),
        },
    )


def _noise_sources(config: ExperimentConfig, seed: int) -> dict:
    return {
        kind: generate_noise_source(kind, config.noise_duration_s, 1000 + seed)
        for kind in config.noise_kinds
    }


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def run_epsilon_sweep(config: ExperimentConfig, prepared=None) -> ExperimentReport:
    """Attacked-test error per (noise kind, epsilon), epsilon = 0 included."""
    rows = []
    for i, seed in enumerate(config.seeds):
        run = prepared[i] if prepared is not None else prepare_run(config, seed)
        labels = np.array([y for _, y in run.features_test])
        clean_pred = _predictions(run.params, run.features_test)
        sources = _noise_sources(config, seed)
        for kind in config.noise_kinds:
            for epsilon in config.epsilons:
                adversarial = craft_dataset(
                    run.test_set,
                    sources[kind],
                    epsilon,
                    seed=seed,
                    profiles=run.profiles_test,
                )
                f_adv = featurize(adversarial, run.stats)
                metrics = evaluate(run.params, f_adv)
                asr = attack_success_rate(
                    clean_pred, _predictions(run.params, f_adv), labels
                )
                rows.append(_row(config, kind, epsilon, "none", metrics, asr, seed))
    return _report(rows, config)


def _attack_pools(config, run):
    """Adversarial pools at attack_epsilon: train pool, eval pool, and the
    per-kind attacked test sets (featurized)."""
    sources = _noise_sources(config, run.seed)
    train_pool, eval_pool = [], []
    attacked_test = {}
    for kind in config.noise_kinds:
        train_pool += craft_dataset(
            run.train_set,
            sources[kind],
            config.attack_epsilon,
            seed=run.seed,
            profiles=run.profiles_train,
        )
        eval_pool += craft_dataset(
            run.eval_set,
            sources[kind],
            config.attack_epsilon,
            seed=run.seed + 77,
            profiles=run.profiles_eval,
        )
        attacked_test[kind] = featurize(
            craft_dataset(
                run.test_set,
                sources[kind],
                config.attack_epsilon,
                seed=run.seed,
                profiles=run.profiles_test,
            ),
            run.stats,
        )
    return train_pool, eval_pool, attacked_test


def _retrain(config, run, train_items, eval_features):
    params, _ = train(
        featurize(train_items, run.stats),
        eval_features,
        TrainConfig(seed=run.seed, max_epochs=config.max_epochs),
        hidden_sizes=config.hidden_sizes,
    )
    return params


def run_adversarial_training_curve(
    config: ExperimentConfig, prepared=None
) -> ExperimentReport:
    """Attacked-test error as the adversarial share of training data grows.

    Retrained models select their checkpoint on clean + attacked eval data;
    with clean eval alone every epoch looks perfect and no robustness is
    selected for. Fraction 0 is the untouched baseline model.
    """
    rows = []
    for i, seed in enumerate(config.seeds):
        run = prepared[i] if prepared is not None else prepare_run(config, seed)
        labels = np.array([y for _, y in run.features_test])
        clean_pred = _predictions(run.params, run.features_test)
        train_pool, eval_pool, attacked_test = _attack_pools(config, run)
        eval_mixed = run.features_eval + featurize(eval_pool, run.stats)
        for fraction in config.mix_fractions:
            if fraction == 0.0:
                defended = run.params
            else:
                mixed = mix_adversarial(
                    run.train_set, train_pool, MixSpec(fraction), seed=seed
                )
                defended = _retrain(config, run, mixed, eval_mixed)
            tag = f"advtrain(fraction={float(fraction)!r})"
            for kind in config.noise_kinds:
                metrics = evaluate(defended, attacked_test[kind])
                asr = attack_success_rate(
                    clean_pred,
                    _predictions(defended, attacked_test[kind]),
                    labels,
                )
                rows.append(
                    _row(config, kind, config.attack_epsilon, tag, metrics, asr, seed)
                )
    return _report(rows, config)


def train_gan_denoiser(config: ExperimentConfig, run: PreparedRun):
    """Feature-space denoiser for this run: pretrain on clean training
    features, then adversarially train on (attacked, clean) pairs pooled
    over the configured noise kinds. Returns (params, loss log)."""
    train_pool, _, _ = _attack_pools(config, run)
    attacked_features = featurize(train_pool, run.stats)
    clean_features = run.features_train * len(config.noise_kinds)
    pairs = [
        (noisy, clean)
        for (noisy, _), (clean, _) in zip(attacked_features, clean_features)
    ]
    rng = np.random.default_rng(run.seed)
    gan_config = GanTrainConfig(
        pretrain_epochs=config.gan_pretrain_epochs,
        max_steps=config.gan_max_steps,
        seed=run.seed,
    )
    params = init_gan(rng, NUM_DESCRIPTORS)
    gan_pretrain(params.generator, [clean for _, clean in pairs], gan_config)
    return gan_train(pairs, gan_config, params)


def run_defense_comparison(
    config: ExperimentConfig,
    prepared=None,
    gan_params=None,
    methods=DEFENSE_METHODS,
) -> ExperimentReport:
    """No defense vs random-noise training vs adversarial training vs GAN
    cleaning, all against the identical (hash-verified) attacked test set."""
    unknown = set(methods) - set(DEFENSE_METHODS)
    if unknown:
        raise ConfigError(f"unknown defense methods: {sorted(unknown)}")
    rows = []
    for i, seed in enumerate(config.seeds):
        run = prepared[i] if prepared is not None else prepare_run(config, seed)
        labels = np.array([y for _, y in run.features_test])
        clean_pred = _predictions(run.params, run.features_test)
        train_pool, eval_pool, attacked_test = _attack_pools(config, run)
        digests = {k: dataset_digest(v) for k, v in attacked_test.items()}
        eval_mixed = run.features_eval + featurize(eval_pool, run.stats)

        def record(defense_tag, model, transform=None):
            for kind in config.noise_kinds:
                if dataset_digest(attacked_test[kind]) != digests[kind]:
                    raise RuntimeError("attacked test set changed between defenses")
                data = attacked_test[kind]
                if transform is not None:
                    data = [(transform(seq), y) for seq, y in data]
                metrics = evaluate(model, data)
                asr = attack_success_rate(
                    clean_pred, _predictions(model, data), labels
                )
                rows.append(
                    _row(
                        config,
                        kind,
                        config.attack_epsilon,
                        defense_tag,
                        metrics,
                        asr,
                        seed,
                    )
                )

        if "none" in methods:
            record("none", run.params)
        if "randnoise" in methods:
            # random-noise training is not attack-aware, so its checkpoint
            # is selected on clean eval data only
            augmented = augment_random_noise(
                run.train_set, config.noise_std, seed=seed
            )
            record(
                f"randnoise(std={float(config.noise_std)!r})",
                _retrain(config, run, augmented, run.features_eval),
            )
        if "advtrain" in methods:
            mixed = mix_adversarial(
                run.train_set, train_pool, MixSpec(1.0), seed=seed
            )
            record(
                "advtrain(fraction=1.0)", _retrain(config, run, mixed, eval_mixed)
            )
        if "gan" in methods:
            if gan_params is not None and gan_params[i] is not None:
                denoiser = gan_params[i]
            else:
                denoiser, _ = train_gan_denoiser(config, run)
            record(
                "gan", run.params, transform=lambda seq: gan_clean(denoiser, seq)
            )
    return _report(rows, config)


# ---------------------------------------------------------------------------
# Emission and parsing
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(float(value))


def emit_report(report: ExperimentReport, out_dir, formats=("csv", "svg")):
    """Write report.csv and any applicable charts; returns written paths."""
    if not report.rows:
        raise ValueError("report has no rows")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if "csv" in formats:
            path = out_dir / "report.csv"
            with open(path, "w", newline="") as fh:
                fh.write("# serforge-report-v1\n")
                for key in sorted(report.metadata):
                    fh.write(f"# {key}={report.metadata[key]}\n")
                writer = csv.writer(fh)
                writer.writerow(CSV_COLUMNS)
                for row in report.rows:
                    writer.writerow(
                        [
                            row["dataset_tag"],
                            row["noise_kind"],
                            _fmt(row["epsilon"]),
                            row["defense"],
                            _fmt(row["error_rate"]),
                            _fmt(row["ua"]),
                            _fmt(row["attack_success_rate"]),
                            row["seed"],
                        ]
                    )
            written.append(path)
        if "svg" in formats:
            for name, svg in _charts(report).items():
                path = out_dir / name
                path.write_text(svg)
                written.append(path)
        return written
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out_dir}: {exc}") from exc


def parse_report_csv(path) -> ExperimentReport:
    """Inverse of the CSV side of emit_report (exact float round trip)."""
    metadata = {}
    rows = []
    try:
        with open(path, newline="") as fh:
            header = None
            for record in csv.reader(fh):
                if record and record[0].startswith("#"):
                    text = record[0].lstrip("#").strip()
                    if "=" in text:
                        key, value = text.split("=", 1)
                        metadata[key] = value
                    continue
                if header is None:
                    if tuple(record) != CSV_COLUMNS:
                        raise IoFailure(f"unexpected CSV header in {path}")
                    header = record
                    continue
                seed = record[7]
                rows.append(
                    {
                        "dataset_tag": record[0],
                        "noise_kind": record[1],
                        "epsilon": float(record[2]),
                        "defense": record[3],
                        "error_rate": float(record[4]),
                        "ua": float(record[5]),
                        "attack_success_rate": float(record[6]),
                        "seed": seed if seed == "mean" else int(seed),
                    }
                )
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return ExperimentReport(rows, metadata)


# ---------------------------------------------------------------------------
# SVG charts (self-contained, no external assets)
# ---------------------------------------------------------------------------

_W, _H = 640, 400
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 30, 40, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _display_rows(report: ExperimentReport) -> list:
    mean_rows = [r for r in report.rows if r["seed"] == "mean"]
    return mean_rows if mean_rows else report.rows


def _chart_frame(title, x_label, y_label):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="15">{title}</text>',
        f'<line x1="{_LEFT}" y1="{_H - _BOTTOM}" x2="{_W - _RIGHT}" '
        f'y2="{_H - _BOTTOM}" stroke="black"/>',
        f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{_H - _BOTTOM}" '
        f'stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle">{x_label}</text>',
        f'<text x="18" y="{_H / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {_H / 2})">{y_label}</text>',
    ]


def _scale_x(value, lo, hi):
    span = (hi - lo) or 1.0
    return _LEFT + (value - lo) / span * (_W - _LEFT - _RIGHT)


def _scale_y(value):
    return (_H - _BOTTOM) - value / 100.0 * (_H - _TOP - _BOTTOM)


def _line_chart(title, x_label, series) -> str:
    """series: {name: [(x, y), ...]} with y in percent (0-100)."""
    xs = [x for points in series.values() for x, _ in points]
    lo, hi = min(xs), max(xs)
    parts = _chart_frame(title, x_label, "error rate (%)")
    for tick in sorted(set(xs)):
        px = _scale_x(tick, lo, hi)
        parts.append(
            f'<text x="{px}" y="{_H - _BOTTOM + 18}" '
            f'text-anchor="middle">{_fmt(tick)}</text>'
        )
    for tick in (0, 25, 50, 75, 100):
        py = _scale_y(tick)
        parts.append(
            f'<text x="{_LEFT - 8}" y="{py + 4}" text-anchor="end">{tick}</text>'
        )
    for color, (name, points) in zip(_COLORS, sorted(series.items())):
        points = sorted(points)
        coords = " ".join(
            f"{_scale_x(x, lo, hi):.2f},{_scale_y(y):.2f}" for x, y in points
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" '
            f'points="{coords}"/>'
        )
        for x, y in points:
            parts.append(
                f'<text x="{_scale_x(x, lo, hi):.2f}" '
                f'y="{_scale_y(y) - 6:.2f}" text-anchor="middle" '
                f'fill="{color}">{_fmt(y)}</text>'
            )
        legend_y = _TOP + 16 * list(sorted(series)).index(name)
        parts.append(
            f'<text x="{_W - _RIGHT - 120}" y="{legend_y}" '
            f'fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def _bar_chart(title, groups) -> str:
    """groups: {defense: {noise_kind: error}}; grouped bars, one per kind."""
    parts = _chart_frame(title, "defense", "error rate (%)")
    defenses = list(groups)
    kinds = sorted({k for sub in groups.values() for k in sub})
    span = (_W - _LEFT - _RIGHT) / max(len(defenses), 1)
    bar_w = span * 0.8 / max(len(kinds), 1)
    for tick in (0, 25, 50, 75, 100):
        py = _scale_y(tick)
        parts.append(
            f'<text x="{_LEFT - 8}" y="{py + 4}" text-anchor="end">{tick}</text>'
        )
    for gi, defense in enumerate(defenses):
        cx = _LEFT + span * (gi + 0.5)
        label = re.sub(r"\(.*", "", defense)
        parts.append(
            f'<text x="{cx:.2f}" y="{_H - _BOTTOM + 18}" '
            f'text-anchor="middle">{label}</text>'
        )
        for ki, kind in enumerate(kinds):
            if kind not in groups[defense]:
                continue
            value = groups[defense][kind]
            x0 = cx - span * 0.4 + ki * bar_w
            y0 = _scale_y(value)
            color = _COLORS[ki % len(_COLORS)]
            parts.append(
                f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{bar_w:.2f}" '
                f'height="{_H - _BOTTOM - y0:.2f}" fill="{color}"/>'
            )
            parts.append(
                f'<text x="{x0 + bar_w / 2:.2f}" y="{y0 - 4:.2f}" '
                f'text-anchor="middle" font-size="10">{_fmt(value)}</text>'
            )
    for ki, kind in enumerate(kinds):
        parts.append(
            f'<text x="{_W - _RIGHT - 120}" y="{_TOP + 16 * ki}" '
            f'fill="{_COLORS[ki % len(_COLORS)]}">{kind}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


_FRACTION_RE = re.compile(r"advtrain\(fraction=([^)]+)\)")


def _charts(report: ExperimentReport) -> dict:
    rows = _display_rows(report)
    charts = {}

    sweep = [r for r in rows if r["defense"] == "none"]
    if len({r["epsilon"] for r in sweep}) > 1:
        series = {}
        for r in sweep:
            series.setdefault(r["noise_kind"], []).append(
                (r["epsilon"], r["error_rate"])
            )
        charts["epsilon_sweep.svg"] = _line_chart(
            "Attacked-test error vs perturbation factor",
            "perturbation factor",
            series,
        )

    curve = {}
    for r in rows:
        match = _FRACTION_RE.fullmatch(r["defense"])
        if match:
            curve.setdefault(r["noise_kind"], []).append(
                (float(match.group(1)), r["error_rate"])
            )
    has_curve_chart = curve and len(
        {x for pts in curve.values() for x, _ in pts}
    ) > 1
    if has_curve_chart:
        charts["training_curve.svg"] = _line_chart(
            "Attacked-test error vs adversarial training fraction",
            "adversarial fraction of training data",
            curve,
        )

    defenses = {}
    for r in rows:
        defenses.setdefault(r["defense"], {})[r["noise_kind"]] = r["error_rate"]
    families = {re.sub(r"\(.*", "", d) for d in defenses}
    if len(families) > 1 and not has_curve_chart:
        ordered = {}
        for method in DEFENSE_METHODS:
            for tag in defenses:
                if re.sub(r"\(.*", "", tag) == method:
                    ordered[tag] = defenses[tag]
        charts["defense_comparison.svg"] = _bar_chart(
            "Attacked-test error by defense", ordered
        )
    return charts
