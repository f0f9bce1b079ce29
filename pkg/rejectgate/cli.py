"""Command-line surface: sweep, calibrate, evaluate, oracle, split, generate.

Every subcommand writes its artifacts and one ``manifest.json`` into ``--out``.
Artifacts hold no timestamps or thread counts, so identical invocations give
byte-identical files. Exit codes: 0 success, 1 usage, 2 data/config, 3
degenerate computation.
"""

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from . import __version__
from .calibration import (
    CalibrationReport,
    LevelEvaluation,
    MedianSweepPoint,
    SweepPoint,
    calibrate,
    evaluate_level,
    optimal_confidence,
    sweep_confidence,
    threshold_grid,
)
from .config import config, resolve_seed
from .data import (
    SplitKind,
    SplitRatios,
    build_split,
    generate_synthetic,
    load_dataset,
    load_generator_config,
    read_split_manifest,
    select_role,
    write_dataset,
    write_split_manifest,
)
from .errors import DataValidationError, DegenerateComputationError, RejectGateError, UsageError
from .model import ImageRecord, LevelKind, RejectionLevel, SeasonId, format_threshold
from .oracle import OracleCurve, OracleMode, oracle_curve
from .stats import BootstrapConfig, IntervalEstimate

LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(name)s: %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
EMPTY_MEDIANS = {"zero": 0.0, "one": 1.0}


# --- Output Models ---
class InputDigest(BaseModel):
    file: str = Field(description="File name of the input")
    sha256: str = Field(description="SHA-256 of the file bytes")


class RunManifest(BaseModel):
    """Resolved parameters, input digests and emitted files of one invocation."""

    tool: str = "rejectgate"
    version: str = __version__
    subcommand: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    inputs: Dict[str, InputDigest] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    results: Dict[str, Any] = Field(default_factory=dict)


def _num(value: float) -> float:
    return float(value)


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6f}"


def _interval(estimate: IntervalEstimate) -> Dict[str, float]:
    return {"point": _num(estimate.point), "lo": _num(estimate.lo), "hi": _num(estimate.hi)}


def _digest(path: Path) -> InputDigest:
    return InputDigest(file=path.name, sha256=hashlib.sha256(path.read_bytes()).hexdigest())


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logging.info(f"Wrote {path}")
    return path.name


def _render(value: Any, depth: int = 0) -> str:
    """JSON text with sorted keys, two-space indent and every real as `.6f`."""
    pad, inner = "  " * depth, "  " * (depth + 1)
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(str(key))}: {_render(item, depth + 1)}" for key, item in sorted(value.items())]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        return "[\n" + ",\n".join(inner + _render(item, depth + 1) for item in value) + "\n" + pad + "]"
    return json.dumps(value)


def _write_json(path: Path, payload: Dict[str, Any]) -> str:
    path.write_text(_render(payload) + "\n", encoding="utf-8")
    logging.info(f"Wrote {path}")
    return path.name


def _make_out(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise UsageError(f"--out {out} is not a usable directory: {e.strerror or e}") from e


def _finish(out: Path, manifest: RunManifest) -> None:
    manifest.outputs = sorted(manifest.outputs)
    _write_json(out / "manifest.json", manifest.model_dump(mode="json"))


# --- Argument Parsing ---
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(token) for token in text.split(",") if token.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed(text: str) -> int:
    try:
        seed = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def _level(text: str) -> RejectionLevel:
    try:
        return RejectionLevel.parse(text)
    except (ValueError, DataValidationError) as e:
        raise argparse.ArgumentTypeError(str(e))


def _add_common(parser: argparse.ArgumentParser, default_role: str, repeat_split: bool = False) -> None:
    parser.add_argument("--data", required=True, type=Path, help="Dataset JSON Lines file")
    parser.add_argument("--manifest", type=Path, help="Split manifest CSV (image_id,role)")
    parser.add_argument(
        "--split",
        action="append" if repeat_split else "store",
        help=f"ROLE or MANIFEST.csv:ROLE (default {default_role}; whole file without a manifest)",
    )
    parser.add_argument("--empty-median", choices=sorted(EMPTY_MEDIANS), default="zero",
                        help="Median of images with no surviving boxes")
    parser.add_argument("--seed", type=_seed, help="Base seed (default REJECT_GATE_SEED)")
    parser.add_argument("--out", required=True, type=Path, help="Output directory")
    parser.set_defaults(default_role=default_role)


def _add_bootstrap(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--bootstrap", type=int, default=config.resamples, help="Bootstrap resamples")
    parser.add_argument("--alpha", type=float, default=config.alpha, help="Interval coverage complement")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rejectgate", description="Confidence-based sample rejection for counting models")
    parser.add_argument("--log-level", default=config.log_level, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sweep = sub.add_parser("sweep", help="MAE across confidence thresholds")
    _add_common(sweep, "val")
    _add_bootstrap(sweep)
    sweep.add_argument("--grid-step", type=float, default=config.grid_step)

    cal = sub.add_parser("calibrate", help="Select absolute/relative/global rejection levels")
    _add_common(cal, "val")
    _add_bootstrap(cal)
    cal.add_argument("--grid-step", type=float, default=config.grid_step)
    cal.add_argument("--conf-threshold", default="auto",
                     help="'auto', a comma-separated list of thresholds, or both (e.g. auto,0.3)")

    ev = sub.add_parser("evaluate", help="MAE of fixed rejection levels")
    _add_common(ev, "test")
    _add_bootstrap(ev)
    ev.add_argument("--level", action="append", type=_level, default=[],
                    help="conf,median[,a|r|g]; repeatable")
    ev.add_argument("--calibration", action="append", type=Path, default=[],
                    help="calibration.json whose levels are evaluated; repeatable")

    orc = sub.add_parser("oracle", help="Oracle rejector curves")
    _add_common(orc, "test", repeat_split=True)
    orc.add_argument("--mode", choices=[m.value for m in OracleMode], required=True)
    orc.add_argument("--threshold", type=float, help="Confidence threshold (aware mode)")
    orc.add_argument("--threshold-set", type=_float_list, help="Candidate thresholds for best mode")
    orc.add_argument("--fractions", type=_float_list, default=list(config.oracle_fractions))

    split = sub.add_parser("split", help="Historic or present-aware seasonal split")
    split.add_argument("--data", required=True, type=Path)
    split.add_argument("--target-season", required=True)
    split.add_argument("--kind", choices=[k.value for k in SplitKind], required=True)
    split.add_argument("--ratios", type=_float_list, default=[config.dev_of_current, config.train_of_dev],
                       help="dev_of_current,train_of_dev")
    split.add_argument("--seed", type=_seed, help="Shuffle seed (default REJECT_GATE_SEED)")
    split.add_argument("--out", required=True, type=Path)

    gen = sub.add_parser("generate", help="Synthetic dataset from a generator config")
    gen.add_argument("--config", required=True, type=Path)
    gen.add_argument("--seed", type=_seed, help="Overrides the config seed")
    gen.add_argument("--out", required=True, type=Path)
    return parser


# --- Selection ---
def _selections(args, images: List[ImageRecord], inputs: Dict[str, InputDigest]) -> List[Tuple[str, List[ImageRecord]]]:
    """(label, images) for each requested split; the whole file when no manifest applies."""
    requested = args.split if isinstance(args.split, list) else [args.split]
    requested = [token for token in requested if token] or [args.default_role]
    if len(requested) > 1 and args.manifest is None and any(":" not in token for token in requested):
        raise UsageError("Repeated --split needs --manifest or MANIFEST.csv:ROLE for every entry")
    selections = []
    for token in requested:
        manifest_path, _, role = token.rpartition(":")
        if manifest_path:
            path, label = Path(manifest_path), f"{Path(manifest_path).stem}-{role}"
        elif args.manifest is not None:
            path, label = args.manifest, role
        else:
            logging.info(f"No split manifest given; using all {len(images)} images for {role!r}")
            selections.append(("all", list(images)))
            continue
        assignment = read_split_manifest(path)
        inputs[f"manifest:{label}"] = _digest(path)
        chosen = select_role(images, assignment, role)
        if not chosen:
            raise DegenerateComputationError(f"Split {label!r} selects no images")
        selections.append((label, chosen))
    if any(not chosen for _, chosen in selections):
        raise DegenerateComputationError("The dataset is empty")
    labels = [label for label, _ in selections]
    if len(labels) != len(set(labels)):
        raise UsageError(f"--split entries must be distinct, got {labels}")
    return selections


def _prepare(args) -> Tuple[RunManifest, List[Tuple[str, List[ImageRecord]]]]:
    inputs = {"data": _digest(args.data)} if args.data.is_file() else {}
    images = load_dataset(args.data)
    selections = _selections(args, images, inputs)
    manifest = RunManifest(subcommand=args.command, inputs=inputs)
    manifest.parameters["split"] = [label for label, _ in selections]
    manifest.parameters["empty_median"] = args.empty_median
    manifest.parameters["seed"] = args.seed
    _make_out(args.out)
    return manifest, selections


def _bootstrap(args, manifest: RunManifest) -> BootstrapConfig:
    try:
        cfg = BootstrapConfig(resamples=args.bootstrap, alpha=args.alpha, seed=args.seed)
    except DataValidationError as e:
        raise UsageError(str(e))
    manifest.parameters.update(bootstrap=cfg.resamples, alpha=cfg.alpha)
    return cfg


def _grid(args, manifest: RunManifest) -> List[float]:
    try:
        grid = threshold_grid(args.grid_step)
    except DataValidationError as e:
        raise UsageError(str(e))
    manifest.parameters["grid_step"] = args.grid_step
    return grid


# --- Subcommands ---
def _sweep_rows(points: Sequence[SweepPoint]) -> List[List[str]]:
    return [[_fmt(p.threshold), _fmt(p.mae.point), _fmt(p.mae.lo), _fmt(p.mae.hi), str(p.n_images)] for p in points]


SWEEP_HEADER = ["threshold", "mae", "mae_lo", "mae_hi", "n_images"]
MEDIAN_HEADER = ["median", "effect", "effect_lo", "effect_hi", "rejected_fraction", "n_accepted", "n_rejected"]


def cmd_sweep(args) -> int:
    manifest, [(_, images)] = _prepare(args)
    cfg = _bootstrap(args, manifest)
    points = sweep_confidence(images, _grid(args, manifest), cfg)
    manifest.outputs.append(_write_csv(args.out / "confidence_sweep.csv", SWEEP_HEADER, _sweep_rows(points)))
    manifest.results["optimal_threshold"] = _num(optimal_confidence(points))
    _finish(args.out, manifest)
    return 0


def _median_rows(points: Sequence[MedianSweepPoint]) -> List[List[str]]:
    rows = []
    for p in points:
        effect = p.effect
        rows.append([
            _fmt(p.median),
            _fmt(effect.point if effect else None),
            _fmt(effect.lo if effect else None),
            _fmt(effect.hi if effect else None),
            _fmt(p.rejected_fraction),
            str(p.n_accepted),
            str(p.n_rejected),
        ])
    return rows


def _level_payload(report: CalibrationReport, level: RejectionLevel) -> Dict[str, Any]:
    point = report.point_for(level)
    return {
        "notation": level.notation,
        "kind": level.kind.value,
        "conf_threshold": _num(level.conf_threshold),
        "median_threshold": _num(level.median_threshold),
        "effect": _interval(point.effect),
        "rejected_fraction": _num(point.rejected_fraction),
    }


def _conf_thresholds(text: str) -> List[Optional[float]]:
    thresholds: List[Optional[float]] = []
    for token in (t.strip() for t in text.split(",")):
        if token == "auto":
            thresholds.append(None)
            continue
        try:
            value = float(token)
        except ValueError:
            raise UsageError(f"--conf-threshold entries must be 'auto' or numbers, got {token!r}")
        if not 0.0 <= value <= 1.0:
            raise UsageError(f"--conf-threshold {value} must lie in [0, 1]")
        thresholds.append(value)
    if not thresholds:
        raise UsageError("--conf-threshold needs at least one entry")
    return thresholds


def cmd_calibrate(args) -> int:
    requested = _conf_thresholds(args.conf_threshold)
    manifest, [(_, images)] = _prepare(args)
    cfg = _bootstrap(args, manifest)
    grid = _grid(args, manifest)
    manifest.parameters["conf_threshold"] = args.conf_threshold
    reports, seen = [], set()
    for conf in requested:
        report = calibrate(images, conf, grid, grid, cfg, EMPTY_MEDIANS[args.empty_median])
        if report.conf_threshold in seen:
            logging.info(f"Skipping repeated confidence threshold {report.conf_threshold}")
            continue
        seen.add(report.conf_threshold)
        entry: Dict[str, Any] = {
            "conf_threshold": _num(report.conf_threshold),
            "source": "auto" if conf is None else "given",
            "is_global": report.is_global,
            "levels": [level.notation for level in report.levels],
            "absolute": _level_payload(report, report.absolute),
            "relative": _level_payload(report, report.relative),
        }
        name = f"median_sweep_{format_threshold(report.conf_threshold)}.csv"
        manifest.outputs.append(_write_csv(args.out / name, MEDIAN_HEADER, _median_rows(report.median_sweep)))
        entry["median_sweep"] = name
        if report.confidence_sweep:
            manifest.outputs.append(
                _write_csv(args.out / "confidence_sweep.csv", SWEEP_HEADER, _sweep_rows(report.confidence_sweep))
            )
            entry["confidence_sweep"] = "confidence_sweep.csv"
            manifest.results["auto_threshold"] = _num(report.conf_threshold)
        reports.append(entry)
    manifest.outputs.append(_write_json(args.out / "calibration.json", {"reports": reports}))
    manifest.results["levels"] = [level for entry in reports for level in entry["levels"]]
    _finish(args.out, manifest)
    return 0


def _levels_from_calibration(path: Path) -> List[RejectionLevel]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        levels = []
        for entry in payload["reports"]:
            kinds = ["absolute"] if entry["is_global"] else ["absolute", "relative"]
            for key in kinds:
                level = entry[key]
                levels.append(RejectionLevel(
                    level["conf_threshold"], level["median_threshold"], LevelKind(level["kind"])
                ))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise DataValidationError(f"Cannot read levels from {path.name}: {e}") from e
    return levels


def _evaluation_payload(result: LevelEvaluation) -> Dict[str, Any]:
    return {
        "notation": result.level.notation,
        "conf_threshold": _num(result.level.conf_threshold),
        "median_threshold": _num(result.level.median_threshold),
        "mae": _interval(result.mae),
        "ungated_mae": _num(result.ungated_mae),
        "improvement": _num(result.improvement),
        "rejected_fraction": _num(result.rejected_fraction),
        "n_accepted": result.n_accepted,
        "n_rejected": result.n_rejected,
    }


def cmd_evaluate(args) -> int:
    levels = list(args.level)
    for path in args.calibration:
        levels.extend(_levels_from_calibration(path))
    if not levels:
        raise UsageError("evaluate needs at least one --level or --calibration")
    manifest, [(_, images)] = _prepare(args)
    cfg = _bootstrap(args, manifest)
    for path in args.calibration:
        manifest.inputs[f"calibration:{path.name}"] = _digest(path)
    manifest.parameters["levels"] = [level.notation for level in levels]
    results = [
        evaluate_level(images, level, cfg.derive(index), EMPTY_MEDIANS[args.empty_median])
        for index, level in enumerate(levels)
    ]
    for result in results:
        logging.info(
            f"{result.level.notation}: MAE {result.mae.point:.3f} "
            f"(ungated {result.ungated_mae:.3f}), rejected {result.rejected_fraction:.1%}"
        )
    payload = {"levels": [_evaluation_payload(result) for result in results]}
    manifest.outputs.append(_write_json(args.out / "evaluation.json", payload))
    _finish(args.out, manifest)
    return 0


def _oracle_rows(curve: OracleCurve) -> List[List[str]]:
    return [[_fmt(p.fraction), _fmt(p.mae), str(p.n_kept)] for p in curve.points]


def cmd_oracle(args) -> int:
    mode = OracleMode(args.mode)
    if mode is OracleMode.CONFIDENCE_AWARE and args.threshold is None:
        raise UsageError("--mode aware requires --threshold")
    if args.threshold is not None and not 0.0 <= args.threshold <= 1.0:
        raise UsageError(f"--threshold {args.threshold} must lie in [0, 1]")
    if args.threshold_set is not None:
        if mode is OracleMode.CONFIDENCE_AWARE:
            raise UsageError("--threshold-set only applies to --mode best")
        if any(not 0.0 <= t <= 1.0 for t in args.threshold_set):
            raise UsageError(f"--threshold-set values must lie in [0, 1], got {args.threshold_set}")
    manifest, selections = _prepare(args)
    manifest.parameters.update(mode=mode.value, fractions=[_num(f) for f in args.fractions])
    if mode is OracleMode.CONFIDENCE_AWARE:
        manifest.parameters["threshold"] = _num(args.threshold)
    elif args.threshold_set:
        manifest.parameters["threshold_set"] = [_num(t) for t in args.threshold_set]
    table = []
    for label, images in selections:
        curve = oracle_curve(images, mode, args.fractions, args.threshold, args.threshold_set)
        rows = _oracle_rows(curve)
        manifest.outputs.append(
            _write_csv(args.out / f"oracle_{mode.value}_{label}.csv", ["fraction", "mae", "n_kept"], rows)
        )
        table.extend([label, *row] for row in rows)
    if len(selections) > 1:
        manifest.outputs.append(
            _write_csv(args.out / "oracle_table.csv", ["split", "fraction", "mae", "n_kept"], table)
        )
    _finish(args.out, manifest)
    return 0


def cmd_split(args) -> int:
    if len(args.ratios) != 2:
        raise UsageError("--ratios takes dev_of_current,train_of_dev")
    target = SeasonId.parse(args.target_season)
    ratios = SplitRatios(*args.ratios)
    inputs = {"data": _digest(args.data)} if args.data.is_file() else {}
    images = load_dataset(args.data)
    split = build_split(images, target, SplitKind(args.kind), ratios, args.seed)
    _make_out(args.out)
    manifest = RunManifest(
        subcommand="split",
        inputs=inputs,
        parameters={
            "target_season": target.label,
            "kind": split.kind.value,
            "ratios": [_num(ratios.dev_of_current), _num(ratios.train_of_dev)],
            "seed": args.seed,
        },
        results={role: len(split.ids(role)) for role in ("train", "val", "test")},
    )
    manifest.outputs.append(write_split_manifest(split, args.out / "split.csv").name)
    _finish(args.out, manifest)
    return 0


def cmd_generate(args) -> int:
    cfg = load_generator_config(args.config, args.seed)
    images = generate_synthetic(cfg)
    _make_out(args.out)
    manifest = RunManifest(
        subcommand="generate",
        inputs={"config": _digest(args.config)},
        parameters={"seed": cfg.seed},
        results={"images": len(images)},
    )
    manifest.outputs.append(write_dataset(images, args.out / "dataset.jsonl").name)
    _finish(args.out, manifest)
    return 0


COMMANDS = {
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "oracle": cmd_oracle,
    "split": cmd_split,
    "generate": cmd_generate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        logging.error(str(e))
        return e.exit_code
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, datefmt=LOG_DATE_FORMAT, stream=sys.stderr)
    try:
        if args.command != "generate" and args.seed is None:
            args.seed = resolve_seed()
        return COMMANDS[args.command](args)
    except RejectGateError as e:
        logging.error(f"{args.command} failed: {e}")
        return e.exit_code
