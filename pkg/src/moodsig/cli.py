"""Batch command-line front end for the mood-signature pipeline.

Every command resolves its options from built-in defaults, then an optional
key=value config file (--config), then explicit flags, and writes the fully
resolved configuration next to its outputs: single-file commands write a
sibling `<output>.config`, directory commands write `run.config` inside the
output directory. Nothing carries a timestamp, so rerunning a command with
the same inputs produces byte-identical files.

Failures print one `error: ...` line on stderr and exit nonzero (2 for usage
problems, 1 for runtime failures).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from moodsig.cohorts import (
    COHORT_ORDER,
    SynthConfig,
    generate_synthetic,
    load_csv,
    split,
    write_csv,
)
from moodsig.metrics import (
    _cohort_pairs,
    bootstrap,
    evaluation_report,
    prediction_trace,
    triangle,
)
from moodsig.models import CohortClassifier, MoodRegressor, save_model
from moodsig.streams import (
    PATH_DIM,
    corpus_windows,
    featurize_windows,
)


@dataclass(frozen=True)
class Option:
    name: str
    kind: str  # int | optint | float | str | bool | counts
    default: object = None
    required: bool = False
    help: str = ""


def _parse_value(opt: Option, raw: str):
    try:
        if opt.kind == "int":
            return int(raw)
        if opt.kind == "optint":
            return None if raw == "none" else int(raw)
        if opt.kind == "float":
            return float(raw)
        if opt.kind == "bool":
            lowered = raw.lower()
            if lowered not in ("true", "false"):
                raise ValueError("expected true or false")
            return lowered == "true"
        if opt.kind == "counts":
            parts = raw.split(",")
            if len(parts) != 3:
                raise ValueError("expected three comma-separated counts")
            return tuple(int(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ValueError(
            f"invalid value for {opt.name}: {raw!r} ({exc})"
        ) from None


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _opt_input(help="corpus CSV to read"):
    return Option("input", "str", required=True, help=help)


def _opt_output(help):
    return Option("output", "str", required=True, help=help)


def _opt_order():
    return Option("order", "int", 2, help="signature truncation order")


def _opt_window():
    return Option("window", "int", 20, help="reports per window")


def _opt_stride():
    return Option(
        "stride", "optint", None, help="window step (default: window length)"
    )


def _opt_ratio():
    return Option("ratio", "float", 0.7, help="train fraction of the split")


def _opt_seed(default, help):
    return Option("seed", "int", default, help=help)


_CLASSIFIER_OPTS = [
    Option("l2", "float", 1.0, help="classifier L2 strength"),
    Option("tol", "float", 1e-6, help="gradient-norm stopping tolerance"),
    Option("max_iter", "int", 10_000, help="gradient descent iteration cap"),
    Option(
        "plain_gd",
        "bool",
        False,
        help="disable the accelerated gradient scheme",
    ),
]

_RIDGE_OPT = Option("ridge", "float", 1.0, help="regressor ridge strength")


def _classifier_from(cfg) -> CohortClassifier:
    return CohortClassifier(
        signature_order=cfg["order"],
        l2=cfg["l2"],
        tol=cfg["tol"],
        max_iter=cfg["max_iter"],
        accelerated=not cfg["plain_gd"],
    )


def _load_windows(cfg):
    records = load_csv(cfg["input"])
    windows = corpus_windows(
        records, length=cfg["window"], stride=cfg["stride"]
    )
    return records, windows


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _float_cell(x) -> str:
    return repr(float(x))


def cmd_synth(cfg) -> None:
    records = generate_synthetic(
        SynthConfig(
            participants=cfg["participants"],
            reports_per_participant=cfg["reports"],
            target_windows=cfg["target_windows"],
            window_length=cfg["window"],
            seed=cfg["seed"],
        )
    )
    write_csv(records, cfg["output"])


def cmd_ingest(cfg) -> None:
    records = load_csv(cfg["input"])
    write_csv(records, cfg["output"])
    counts = {c.label: 0 for c in COHORT_ORDER}
    reports = 0
    for rec in records:
        counts[rec.cohort.label] += 1
        reports += len(rec.reports)
    summary = ", ".join(f"{v} {k}" for k, v in counts.items())
    print(f"{len(records)} participants ({summary}), {reports} reports")


def _signature_header(order: int) -> list[str]:
    words = []
    for k in range(1, order + 1):
        for word in product(range(1, PATH_DIM + 1), repeat=k):
            words.append("sig_" + "".join(str(a) for a in word))
    return words


def cmd_featurize(cfg) -> None:
    _, windows = _load_windows(cfg)
    X = featurize_windows(windows, order=cfg["order"])
    header = ["participant_id", "cohort"] + _signature_header(cfg["order"])
    rows = (
        [w.participant_id, w.cohort.label] + [_float_cell(x) for x in X[i]]
        for i, w in enumerate(windows)
    )
    _write_rows(Path(cfg["output"]), header, rows)


def cmd_train_classifier(cfg) -> None:
    _, windows = _load_windows(cfg)
    if not windows:
        raise ValueError(
            f"no windows of length {cfg['window']} in {cfg['input']}"
        )
    X = featurize_windows(windows, order=cfg["order"])
    y = np.array([int(w.cohort) for w in windows])
    model = _classifier_from(cfg).fit(X, y)
    save_model(model, cfg["output"])


def cmd_train_predictor(cfg) -> None:
    records = load_csv(cfg["input"])
    outdir = Path(cfg["output"])
    for cohort in COHORT_ORDER:
        group = [r for r in records if r.cohort is cohort]
        windows, targets = _cohort_pairs(group, cfg["window"])
        if not windows:
            raise ValueError(
                f"cohort {cohort.label} has no prediction pairs; "
                f"participants need more than {cfg['window']} reports"
            )
        model = MoodRegressor(
            signature_order=cfg["order"], alpha=cfg["ridge"], cohort=cohort
        ).fit(featurize_windows(windows, order=cfg["order"]), targets)
        save_model(model, outdir / f"predictor-{cohort.label}.json")


def cmd_evaluate(cfg) -> None:
    records = load_csv(cfg["input"])
    report = evaluation_report(
        records,
        signature_order=cfg["order"],
        window_length=cfg["window"],
        stride=cfg["stride"],
        ratio=cfg["ratio"],
        seed=cfg["seed"],
        stratify=cfg["stratify"],
        l2=cfg["l2"],
        alpha=cfg["ridge"],
        tol=cfg["tol"],
        max_iter=cfg["max_iter"],
        accelerated=not cfg["plain_gd"],
        retrain_pairwise=cfg["retrain_pairwise"],
    )
    _write_json(Path(cfg["output"]) / "report.json", report)


def cmd_bootstrap(cfg) -> None:
    _, windows = _load_windows(cfg)
    parts = split(
        windows, ratio=cfg["ratio"], seed=cfg["seed"], stratify=cfg["stratify"]
    )
    X_train = featurize_windows(parts.train, order=cfg["order"])
    X_test = featurize_windows(parts.test, order=cfg["order"])
    y_train = np.array([int(w.cohort) for w in parts.train])
    y_test = np.array([int(w.cohort) for w in parts.test])
    result = bootstrap(
        _classifier_from(cfg),
        X_train,
        y_train,
        X_test,
        y_test,
        b=cfg["bootstrap_n"],
        seed=cfg["seed"],
    )
    outdir = Path(cfg["output"])
    _write_rows(
        outdir / "accuracies.csv",
        ["iteration", "accuracy"],
        ([i, _float_cell(a)] for i, a in enumerate(result.accuracies)),
    )
    _write_json(
        outdir / "summary.json",
        {
            "b": result.b,
            "seed": result.seed,
            "mean": result.mean,
            "std": result.std,
            "train_windows": len(parts.train),
            "test_windows": len(parts.test),
        },
    )


def cmd_triangle(cfg) -> None:
    records = load_csv(cfg["input"])
    points = triangle(
        records,
        length=cfg["window"],
        stride=cfg["stride"],
        classifier=_classifier_from(cfg),
    )
    rows = (
        [p.participant_id]
        + [_float_cell(q) for q in p.proportions]
        + [_float_cell(c) for c in p.point]
        for p in points
    )
    _write_rows(
        Path(cfg["output"]) / "triangle.csv",
        ["participant_id", "p_bipolar", "p_borderline", "p_healthy", "x", "y"],
        rows,
    )


def cmd_trace(cfg) -> None:
    records = load_csv(cfg["input"])
    record = next(
        (r for r in records if r.participant_id == cfg["participant"]), None
    )
    if record is None:
        raise ValueError(
            f"no participant {cfg['participant']!r} in {cfg['input']}"
        )
    group = [r for r in records if r.cohort is record.cohort]
    windows, targets = _cohort_pairs(group, cfg["window"])
    if not windows:
        raise ValueError(
            f"cohort {record.cohort.label} has no prediction pairs; "
            f"participants need more than {cfg['window']} reports"
        )
    model = MoodRegressor(
        signature_order=cfg["order"], alpha=cfg["ridge"], cohort=record.cohort
    ).fit(featurize_windows(windows, order=cfg["order"]), targets)
    category = cfg["category"]
    if category.isdigit():
        category = int(category)
    rows = prediction_trace(
        model, record, category, length=cfg["window"]
    )
    _write_rows(
        Path(cfg["output"]) / "trace.csv",
        ["seq", "value", "correct"],
        (
            [r.seq, _float_cell(r.value), "true" if r.correct else "false"]
            for r in rows
        ),
    )


@dataclass(frozen=True)
class Command:
    run: object
    options: list[Option]
    output_mode: str  # file | dir
    help: str


_COMMANDS: dict[str, Command] = {
    "synth": Command(
        cmd_synth,
        [
            _opt_output("corpus CSV to write"),
            _opt_seed(7, "generator seed"),
            Option(
                "participants",
                "counts",
                (48, 31, 51),
                help="bipolar,borderline,healthy participant counts",
            ),
            Option(
                "reports",
                "optint",
                None,
                help="reports per participant (overrides window targeting)",
            ),
            Option(
                "target_windows",
                "int",
                733,
                help="total non-overlapping windows to aim for",
            ),
            _opt_window(),
        ],
        "file",
        "generate a synthetic mood corpus",
    ),
    "ingest": Command(
        cmd_ingest,
        [
            _opt_input("raw corpus CSV to validate"),
            _opt_output("canonical corpus CSV to write"),
        ],
        "file",
        "validate a corpus CSV and rewrite it in canonical form",
    ),
    "featurize": Command(
        cmd_featurize,
        [
            _opt_input(),
            _opt_output("feature CSV to write"),
            _opt_order(),
            _opt_window(),
            _opt_stride(),
        ],
        "file",
        "write per-window signature features",
    ),
    "train-classifier": Command(
        cmd_train_classifier,
        [
            _opt_input(),
            _opt_output("model JSON to write"),
            _opt_order(),
            _opt_window(),
            _opt_stride(),
            *_CLASSIFIER_OPTS,
        ],
        "file",
        "fit the cohort classifier on every window of a corpus",
    ),
    "train-predictor": Command(
        cmd_train_predictor,
        [
            _opt_input(),
            _opt_output("directory for the three predictor JSONs"),
            _opt_order(),
            _opt_window(),
            _RIDGE_OPT,
        ],
        "dir",
        "fit one next-report regressor per cohort",
    ),
    "evaluate": Command(
        cmd_evaluate,
        [
            _opt_input(),
            _opt_output("directory for report.json"),
            _opt_order(),
            _opt_window(),
            _opt_stride(),
            _opt_ratio(),
            _opt_seed(0, "split seed"),
            Option("stratify", "bool", False, help="stratify the split"),
            *_CLASSIFIER_OPTS,
            _RIDGE_OPT,
            Option(
                "retrain_pairwise",
                "bool",
                False,
                help="retrain binary models per cohort pair",
            ),
        ],
        "dir",
        "train and score the full pipeline on one corpus",
    ),
    "bootstrap": Command(
        cmd_bootstrap,
        [
            _opt_input(),
            _opt_output("directory for accuracies.csv and summary.json"),
            _opt_order(),
            _opt_window(),
            _opt_stride(),
            _opt_ratio(),
            _opt_seed(0, "split and resampling seed"),
            Option("stratify", "bool", False, help="stratify the split"),
            Option("bootstrap_n", "int", 100, help="number of resamples"),
            *_CLASSIFIER_OPTS,
        ],
        "dir",
        "accuracy distribution over training resamples",
    ),
    "triangle": Command(
        cmd_triangle,
        [
            _opt_input(),
            _opt_output("directory for triangle.csv"),
            _opt_order(),
            _opt_window(),
            _opt_stride(),
            *_CLASSIFIER_OPTS,
        ],
        "dir",
        "leave-one-participant-out triangle coordinates",
    ),
    "trace": Command(
        cmd_trace,
        [
            _opt_input(),
            _opt_output("directory for trace.csv"),
            Option(
                "participant", "str", required=True, help="participant id"
            ),
            Option(
                "category",
                "str",
                required=True,
                help="mood category name or index",
            ),
            _opt_order(),
            _opt_window(),
            _RIDGE_OPT,
        ],
        "dir",
        "rolling prediction correctness for one participant",
    ),
}

_REGISTRY = {o.name for c in _COMMANDS.values() for o in c.options}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="moodsig",
        description="signature-based mood time series pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, command in _COMMANDS.items():
        p = sub.add_parser(name, help=command.help, description=command.help)
        p.add_argument(
            "--config", help="key=value config file (flags override it)"
        )
        for opt in command.options:
            flag = "--" + opt.name.replace("_", "-")
            if opt.kind == "bool":
                p.add_argument(
                    flag, action="store_true", default=None, help=opt.help
                )
            else:
                p.add_argument(flag, default=None, help=opt.help)
    return parser


def _read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(
                f"{path}:{lineno}: expected key=value, got {stripped!r}"
            )
        if key != "command" and key not in _REGISTRY:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def _resolve(command: Command, args: argparse.Namespace) -> dict:
    file_cfg = _read_config(args.config) if args.config else {}
    resolved = {}
    for opt in command.options:
        flag_value = getattr(args, opt.name)
        if opt.kind == "bool":
            if flag_value:
                value = True
            elif opt.name in file_cfg:
                value = _parse_value(opt, file_cfg[opt.name])
            else:
                value = opt.default
        elif flag_value is not None:
            value = _parse_value(opt, flag_value)
        elif opt.name in file_cfg:
            value = _parse_value(opt, file_cfg[opt.name])
        else:
            value = opt.default
        if opt.required and value is None:
            flag = "--" + opt.name.replace("_", "-")
            raise ValueError(
                f"missing required option {flag} (or {opt.name}= in a config)"
            )
        resolved[opt.name] = value
    return resolved


def _write_sidecar(name: str, command: Command, cfg: dict) -> None:
    lines = [f"command={name}"]
    lines += [f"{k}={_format_value(cfg[k])}" for k in sorted(cfg)]
    if command.output_mode == "file":
        path = Path(str(cfg["output"]) + ".config")
    else:
        path = Path(cfg["output"]) / "run.config"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = _COMMANDS[args.command]
    try:
        cfg = _resolve(command, args)
        out = Path(cfg["output"])
        if command.output_mode == "dir":
            out.mkdir(parents=True, exist_ok=True)
        elif out.parent and not out.parent.exists():
            out.parent.mkdir(parents=True, exist_ok=True)
        command.run(cfg)
        _write_sidecar(args.command, command, cfg)
        return 0
    except (ValueError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
