"""Command-line audit pipeline.

``ecgaudit run`` drives the whole chain (ingest or synthesize, clean,
delineate, featurize, split, tune/train, evaluate, explain) and leaves a
self-describing artifact directory behind. Each stage also exists as its
own subcommand operating on the exported file formats, so an audit can
be rerun or inspected piecewise.

Every artifact is deterministic given (config, seed): randomness flows
from the root seed through named child seeds (recorded in MANIFEST.json)
and floats are serialized with repr. Exit codes: 0 success, 2 input
error, 3 stage failure.
"""

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .cohort import (
    Task,
    assign_age_group,
    make_split,
    read_plan_json,
    task_label,
    write_plan_json,
)
from .delineate import (
    delineate_beats,
    detect_r_peaks,
    read_annotations_csv,
    write_annotations_csv,
)
from .errors import (
    ConfigError,
    EcgAuditError,
    InputError,
    ParseError,
    SchemaError,
    ValidationError,
)
from .evaluate import (
    EvalReport,
    evaluate,
    reference_compare,
    report_to_dict,
    write_report_json,
    write_summary_csv,
)
from .explain import (
    render_summary_svg,
    shap_summary,
    subsample_rows,
    write_beeswarm_csv,
    write_summary_json,
)
from .features import (
    DropStats,
    WindowLabels,
    read_features_csv,
    windowed_features,
    write_features_csv,
)
from .io import read_metadata, read_record, read_signal_csv, write_record
from .models import default_config, default_grid, fit_config, load_model, save_model, tune
from .models.tune import FEATURE_NAMES
from .preprocess import FilterSpec, clean
from .seeds import child_seed
from .synth import SyntheticPopulationConfig, generate_population

INPUT_ERRORS = (ParseError, ValidationError, InputError, ConfigError, FileNotFoundError)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STAGE = 3

ALL_TASKS = tuple(t.value for t in Task)
ALL_MODELS = ("logistic", "tree", "forest")


@dataclass(frozen=True)
class RunConfig:
    out: str
    manifest: str | None = None
    synthetic: dict | None = None
    filter: FilterSpec = field(default_factory=FilterSpec)
    window_s: float = 10.0
    min_beats: int = 3
    tasks: tuple = ALL_TASKS
    models: tuple = ALL_MODELS
    seed: int = 42
    tune: bool = True
    shap_subsample: int = 500
    shap_background: int = 128
    class_weight: str | None = None
    column: str | None = None
    start_s: float = 0.0
    duration_s: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filter"] = asdict(self.filter)
        return d


def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def _load_synthetic_config(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", path=path, line=exc.lineno)


def _synthetic_from_dict(d: dict) -> SyntheticPopulationConfig:
    known = {f.name for f in SyntheticPopulationConfig.__dataclass_fields__.values()}
    payload = {k: v for k, v in d.items() if k in known}
    if "beat_rate_bpm_range" in payload:
        payload["beat_rate_bpm_range"] = tuple(payload["beat_rate_bpm_range"])
    missing = {"n_participants", "seed"} - payload.keys()
    if missing:
        raise ConfigError(f"synthetic config missing keys: {sorted(missing)}")
    return SyntheticPopulationConfig(**payload)


def _load_manifest_records(config: RunConfig):
    manifest_path = Path(config.manifest)
    if not manifest_path.exists():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    with open(manifest_path) as fh:
        try:
            entries = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", path=manifest_path, line=exc.lineno)
    if not isinstance(entries, list):
        raise ParseError("manifest must be a JSON array", path=manifest_path)
    records = []
    base = manifest_path.parent
    for entry in entries:
        for key in ("signal", "metadata"):
            if key not in entry:
                raise ParseError(f"manifest entry missing {key!r}", path=manifest_path)
        signal = base / entry["signal"]
        metadata = base / entry["metadata"]
        for p in (signal, metadata):
            if not p.exists():
                raise FileNotFoundError(f"manifest references missing file: {p}")
        records.append(
            read_record(
                signal,
                metadata,
                column=entry.get("column", config.column),
                start_s=config.start_s,
                duration_s=config.duration_s,
                source_label=entry.get("source_label", ""),
            )
        )
    return records, None


def _load_records(config: RunConfig):
    if (config.manifest is None) == (config.synthetic is None):
        raise ConfigError("exactly one of manifest/synthetic must be given")
    if config.manifest is not None:
        return _load_manifest_records(config)
    synth_config = _synthetic_from_dict(config.synthetic)
    records, truth = generate_population(synth_config)
    return records, truth


def _truth_to_dict(truth) -> dict:
    return {
        pid: {
            "r_indices": gt.r_indices.tolist(),
            "wave_times": {w: t.tolist() for w, t in gt.wave_times.items()},
        }
        for pid, gt in truth.items()
    }


def _extract_features(records, config: RunConfig, out: Path):
    (out / "records").mkdir(exist_ok=True)
    (out / "annotations").mkdir(exist_ok=True)
    vectors = []
    drops = DropStats()
    per_record_drops = {}
    for record in records:
        cleaned = clean(record, config.filter)
        fs = cleaned.sampling_rate_hz
        pid = record.participant_id
        write_record(cleaned, out / "records" / f"{pid}.csv",
                     out / "records" / f"{pid}.meta.json")
        r_peaks = detect_r_peaks(cleaned.samples, fs)
        beats = delineate_beats(cleaned.samples, fs, r_peaks)
        write_annotations_csv(beats, out / "annotations" / f"{pid}.csv")
        labels = WindowLabels(pid, record.gender, assign_age_group(record.age).value)
        vs, stats = windowed_features(
            beats, fs, cleaned.samples.size, labels,
            window_s=config.window_s, min_beats=config.min_beats,
        )
        vectors.extend(vs)
        drops.merge(stats)
        per_record_drops[pid] = stats.as_dict()
    write_features_csv(vectors, out / "features.csv")
    with open(out / "drops.json", "w") as fh:
        json.dump({"total": drops.as_dict(), "per_record": per_record_drops},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    return vectors


def _train_and_evaluate(vectors, config: RunConfig, out: Path):
    (out / "splits").mkdir(exist_ok=True)
    (out / "models").mkdir(exist_ok=True)
    (out / "reports").mkdir(exist_ok=True)
    reports = []
    best_models = {}
    plans = {}
    child_seeds = {}
    for task_name in config.tasks:
        task = Task(task_name)
        split_seed = child_seed(config.seed, f"split:{task_name}")
        child_seeds[f"split:{task_name}"] = split_seed
        plan = make_split(vectors, task, split_seed)
        write_plan_json(plan, out / "splits" / f"{task_name}.json")
        plans[task_name] = plan

        for kind in config.models:
            fit_seed = child_seed(config.seed, f"tune:{task_name}:{kind}")
            child_seeds[f"tune:{task_name}:{kind}"] = fit_seed
            model = _fit_model(plan, kind, fit_seed, config)
            save_model(model, out / "models" / f"{task_name}_{kind}.json")
            report = reference_compare(evaluate(model, plan))
            write_report_json(report, out / "reports" / f"{task_name}_{kind}.json")
            reports.append(report)
            current = best_models.get(task_name)
            if current is None or report.f1_macro > current[0].f1_macro:
                best_models[task_name] = (report, model)
    write_summary_csv(reports, out / "reports" / "summary.csv")
    return reports, best_models, plans, child_seeds


def _fit_model(plan, kind, seed, config: RunConfig):
    if config.tune:
        grid = default_grid(kind)
        if config.class_weight:
            grid = [replace(g, class_weight=config.class_weight) for g in grid]
        return tune(list(plan.train), plan.task, grid, seed).model
    base = replace(default_config(kind), seed=seed)
    if config.class_weight:
        base = replace(base, class_weight=config.class_weight)
    X = np.asarray([v.values() for v in plan.train])
    y = [task_label(v, plan.task) for v in plan.train]
    return fit_config(base, X, y, FEATURE_NAMES)


def _explain_best(best_models, plans, config: RunConfig, out: Path, child_seeds):
    (out / "shap").mkdir(exist_ok=True)
    for task_name, (report, model) in best_models.items():
        seed = child_seed(config.seed, f"shap:{task_name}")
        child_seeds[f"shap:{task_name}"] = seed
        plan = plans[task_name]
        background = subsample_rows(list(plan.train), config.shap_background, seed)
        summary = shap_summary(
            model, plan, background,
            subsample=config.shap_subsample, seed=seed,
        )
        prefix = out / "shap" / f"{task_name}_{report.model_kind}"
        write_summary_json(summary, f"{prefix}.json")
        write_beeswarm_csv(summary, f"{prefix}_beeswarm.csv")
        render_summary_svg(summary, f"{prefix}_summary.svg")


def run_audit(config: RunConfig) -> int:
    """Run the full audit; artifacts land in config.out."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    failed_marker = out / "FAILED"
    if failed_marker.exists():
        failed_marker.unlink()

    with open(out / "config.json", "w") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    try:
        records, truth = _load_records(config)
        if truth is not None:
            with open(out / "ground_truth.json", "w") as fh:
                json.dump(_truth_to_dict(truth), fh, sort_keys=True)
                fh.write("\n")

        vectors = _extract_features(records, config, out)
        reports, best_models, plans, seeds = _train_and_evaluate(vectors, config, out)
        _explain_best(best_models, plans, config, out, seeds)

        artifacts = sorted(
            str(p.relative_to(out)) for p in out.rglob("*") if p.is_file()
        )
        manifest = {
            "version": __version__,
            "config_hash": config_hash(config),
            "root_seed": config.seed,
            "child_seeds": seeds,
            "created_unix": time.time(),
            "artifacts": artifacts,
        }
        with open(out / "MANIFEST.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except Exception as exc:
        with open(failed_marker, "w") as fh:
            fh.write(f"{type(exc).__name__}: {exc}\n")
        if isinstance(exc, INPUT_ERRORS):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE

    for report in reports:
        flag = ""
        if best_models[report.task][0] is report:
            flag = "  <- best"
        print(
            f"{report.task:15s} {report.model_kind:9s} "
            f"acc={report.accuracy:.3f} f1={report.f1_macro:.3f} "
            f"auc={report.roc_auc:.3f}{flag}"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# subcommands


def _add_filter_flags(p):
    p.add_argument("--hp-cutoff", type=float, default=0.5,
                   help="highpass cutoff in Hz (default 0.5)")
    p.add_argument("--hp-order", type=int, default=5,
                   help="highpass Butterworth order (default 5)")
    p.add_argument("--powerline", type=float, default=50, choices=(50, 60),
                   help="powerline notch frequency (default 50)")


def _filter_from_args(args) -> FilterSpec:
    return FilterSpec(
        highpass_cutoff_hz=args.hp_cutoff,
        highpass_order=args.hp_order,
        powerline_freq_hz=args.powerline,
    )


def _split_csv(value: str) -> tuple:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def cmd_run(args) -> int:
    synthetic = None
    if args.synthetic:
        synthetic = _load_synthetic_config(args.synthetic)
    tasks = _split_csv(args.tasks) if args.tasks else ALL_TASKS
    models = _split_csv(args.models) if args.models else ALL_MODELS
    bad = [t for t in tasks if t not in ALL_TASKS]
    bad += [m for m in models if m not in ALL_MODELS]
    if bad:
        print(f"error: unknown task/model names: {bad}", file=sys.stderr)
        return EXIT_INPUT
    config = RunConfig(
        out=args.out,
        manifest=args.manifest,
        synthetic=synthetic,
        filter=_filter_from_args(args),
        window_s=args.window_s,
        tasks=tasks,
        models=models,
        seed=args.seed,
        tune=not args.no_tune,
        shap_subsample=args.shap_subsample,
        shap_background=args.shap_background,
        class_weight=args.class_weight,
        column=args.column,
        start_s=args.start_s,
        duration_s=args.duration_s,
    )
    return run_audit(config)


def cmd_synth(args) -> int:
    if args.config:
        payload = _load_synthetic_config(args.config)
    else:
        payload = {
            "n_participants": args.n,
            "seed": args.seed,
            "duration_s": args.duration_s,
            "sampling_rate_hz": args.fs,
            "noise_snr_db": args.snr_db,
        }
    config = _synthetic_from_dict(payload)
    records, truth = generate_population(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for record in records:
        write_record(record, out / f"{record.participant_id}.csv",
                     out / f"{record.participant_id}.meta.json")
    with open(out / "ground_truth.json", "w") as fh:
        json.dump(_truth_to_dict(truth), fh, sort_keys=True)
        fh.write("\n")
    with open(out / "synthetic_config.json", "w") as fh:
        json.dump(asdict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(records)} records to {out}")
    return EXIT_OK


def cmd_features(args) -> int:
    records_dir = Path(args.records)
    annotations_dir = Path(args.annotations)
    vectors = []
    drops = DropStats()
    for meta_path in sorted(records_dir.glob("*.meta.json")):
        pid = meta_path.name.removesuffix(".meta.json")
        signal_path = records_dir / f"{pid}.csv"
        ann_path = annotations_dir / f"{pid}.csv"
        for p in (signal_path, ann_path):
            if not p.exists():
                raise FileNotFoundError(f"missing stage input: {p}")
        meta = read_metadata(meta_path)
        samples = read_signal_csv(signal_path)
        fs = float(meta["sampling_rate_hz"])
        beats = read_annotations_csv(ann_path, samples, fs)
        labels = WindowLabels(
            str(meta["participant_id"]), str(meta["gender"]),
            assign_age_group(int(meta["age"])).value,
        )
        vs, stats = windowed_features(
            beats, fs, samples.size, labels,
            window_s=args.window_s, min_beats=args.min_beats,
        )
        vectors.extend(vs)
        drops.merge(stats)
    write_features_csv(vectors, args.out)
    print(f"wrote {len(vectors)} windows ({drops.as_dict()})")
    return EXIT_OK


def cmd_split(args) -> int:
    vectors = read_features_csv(args.features)
    plan = make_split(vectors, Task(args.task), args.seed)
    write_plan_json(plan, args.out)
    print(
        f"{args.task}: {len(plan.train)} train / {len(plan.test)} test windows, "
        f"{len(plan.label_map)} classes"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    vectors = read_features_csv(args.features)
    plan = read_plan_json(args.plan, vectors)
    if args.no_tune:
        config = replace(default_config(args.model), seed=args.seed)
        X = np.asarray([v.values() for v in plan.train])
        y = [task_label(v, plan.task) for v in plan.train]
        model = fit_config(config, X, y, FEATURE_NAMES)
    else:
        model = tune(list(plan.train), plan.task, default_grid(args.model), args.seed).model
    save_model(model, args.out)
    print(f"saved {args.model} model for {plan.task.value} to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    vectors = read_features_csv(args.features)
    plan = read_plan_json(args.plan, vectors)
    model = load_model(args.model_file)
    report = reference_compare(evaluate(model, plan))
    write_report_json(report, args.out)
    print(
        f"{report.task} {report.model_kind}: acc={report.accuracy:.3f} "
        f"f1={report.f1_macro:.3f} auc={report.roc_auc:.3f}"
    )
    return EXIT_OK


def cmd_explain(args) -> int:
    vectors = read_features_csv(args.features)
    plan = read_plan_json(args.plan, vectors)
    model = load_model(args.model_file)
    background = subsample_rows(list(plan.train), args.background, args.seed)
    summary = shap_summary(
        model, plan, background,
        class_policy=args.class_policy, scale=args.scale,
        subsample=args.subsample, seed=args.seed,
    )
    prefix = args.out_prefix
    write_summary_json(summary, f"{prefix}.json")
    write_beeswarm_csv(summary, f"{prefix}_beeswarm.csv")
    render_summary_svg(summary, f"{prefix}_summary.svg")
    print(f"top features: {', '.join(summary.ranking[:3])}")
    return EXIT_OK


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        with open(path) as fh:
            d = json.load(fh)
        reports.append(
            EvalReport(
                task=d["task"],
                model_kind=d["model_kind"],
                accuracy=d["accuracy"],
                precision_macro=d["precision_macro"],
                recall_macro=d["recall_macro"],
                f1_macro=d["f1_macro"],
                roc_auc=d["roc_auc"],
                confusion=tuple(tuple(r) for r in d["confusion"]),
                class_labels=tuple(d["class_labels"]),
                n_test=d["n_test"],
                per_class=d["per_class"],
                reference=d.get("reference"),
            )
        )
    write_summary_csv(reports, args.out)
    for r in reports:
        print(
            f"{r.task:15s} {r.model_kind:9s} acc={r.accuracy:.3f} "
            f"f1={r.f1_macro:.3f} auc={r.roc_auc:.3f}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecgaudit",
        description="Quantify and explain re-identification risk in ECG data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full audit pipeline")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="JSON list of signal/metadata file pairs")
    src.add_argument("--synthetic", help="synthetic population config JSON")
    p.add_argument("--out", required=True, help="artifact directory")
    p.add_argument("--window-s", type=float, default=10.0)
    p.add_argument("--tasks", help="comma-separated subset of tasks")
    p.add_argument("--models", help="comma-separated subset of model kinds")
    p.add_argument("--seed", type=int, default=42, help="root seed")
    p.add_argument("--no-tune", action="store_true",
                   help="skip cross-validated tuning; use default configs")
    p.add_argument("--shap-subsample", type=int, default=500)
    p.add_argument("--shap-background", type=int, default=128)
    p.add_argument("--class-weight", choices=("balanced",), default=None)
    p.add_argument("--column", help="signal CSV column for multi-lead exports")
    p.add_argument("--start-s", type=float, default=0.0,
                   help="segment start within each record")
    p.add_argument("--duration-s", type=float, default=None,
                   help="segment length to retain")
    _add_filter_flags(p)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("synth", help="generate a synthetic population")
    p.add_argument("--config", help="synthetic population config JSON")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--duration-s", type=float, default=60.0)
    p.add_argument("--fs", type=float, default=250.0)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("features", help="feature table from cleaned records + annotations")
    p.add_argument("--records", required=True, help="directory of cleaned records")
    p.add_argument("--annotations", required=True, help="directory of annotation CSVs")
    p.add_argument("--window-s", type=float, default=10.0)
    p.add_argument("--min-beats", type=int, default=3)
    p.add_argument("--out", required=True, help="feature CSV path")
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser("split", help="build a train/test plan for one task")
    p.add_argument("--features", required=True)
    p.add_argument("--task", required=True, choices=ALL_TASKS)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("train", help="tune and fit one model on a plan")
    p.add_argument("--features", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--model", required=True, choices=ALL_MODELS)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--no-tune", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on a plan")
    p.add_argument("--features", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("explain", help="Shapley attribution for a saved model")
    p.add_argument("--features", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--out-prefix", required=True,
                   help="writes <prefix>.json, <prefix>_beeswarm.csv, <prefix>_summary.svg")
    p.add_argument("--background", type=int, default=128)
    p.add_argument("--subsample", type=int, default=500)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--class-policy", default="predicted",
                   help='"predicted" or a fixed class label')
    p.add_argument("--scale", default="probability", choices=("probability", "logit"))
    p.set_defaults(handler=cmd_explain)

    p = sub.add_parser("report", help="merge task reports into one summary table")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", required=True, help="summary CSV path")
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EcgAuditError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
