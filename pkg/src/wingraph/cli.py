"""Command-line entry point.

Subcommands: ``gradcheck``, ``train``, ``eval``, ``ablate``, ``bench``.
Exit codes: 0 success, 1 verification failure, 2 configuration error.

Config files are line-oriented ``key = value`` text with ``#`` comments;
the keys are exactly the fields of SegmenterConfig.  ``--override`` takes
repeatable ``key=value`` pairs applied on top of the file (or the defaults
when no file is given).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

from .bench import format_csv, run_benchmark
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .data import synth_dataset
from .gradcheck import SCOPE_NAMES, TOLERANCE, run_gradcheck
from .metrics import dataset_boundary_band_accuracy, evaluate_miou, write_iou_csv
from .model import ConfigError, SegmenterConfig, build_model
from .relation import FusionType
from .train import TrainingDiverged, train

EVAL_SEED_OFFSET = 1000
GRADCHECK_SEEDS = 5


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_stages(text: str) -> tuple[tuple[int, int, int], ...]:
    """``2x2x2,1x4x4`` -> ((2,2,2), (1,4,4)); blocks x M x N per stage."""
    stages = []
    for part in text.split(","):
        pieces = part.strip().split("x")
        if len(pieces) != 3:
            raise ValueError(f"stage {part!r} must be blocksxMxN")
        stages.append(tuple(int(p) for p in pieces))
    return tuple(stages)


_FIELD_PARSERS = {
    "C": int,
    "H": int,
    "W": int,
    "stages": _parse_stages,
    "num_classes": int,
    "fusion": FusionType.from_name,
    "r_gr": int,
    "r_lr": int,
    "r_ba": int,
    "theta_coefficient": float,
    "graph_depth": int,
    "relation_variant": str,
    "enable_gt": _parse_bool,
    "enable_ba": _parse_bool,
    "seed": int,
    "dataset": str,
    "dataset_size": int,
    "steps": int,
    "lr": float,
}

assert set(_FIELD_PARSERS) == {f.name for f in dataclasses.fields(SegmenterConfig)}


def _set_key(values: dict, key: str, raw: str, origin: str) -> None:
    parser = _FIELD_PARSERS.get(key)
    if parser is None:
        raise ConfigError(f"{origin}: unknown config key {key!r}")
    try:
        values[key] = parser(raw.strip())
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{origin}: bad value for {key!r}: {exc}") from exc


def parse_config_text(text: str, origin: str = "config") -> dict:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        _set_key(values, key.strip(), raw, f"{origin}:{lineno}")
    return values


def load_config(path: str | None, overrides: list[str], seed: int | None) -> SegmenterConfig:
    values: dict = {}
    if path is not None:
        values = parse_config_text(Path(path).read_text(encoding="utf-8"), origin=path)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--override {item!r} must be KEY=VALUE")
        key, raw = item.split("=", 1)
        _set_key(values, key.strip(), raw, "--override")
    config = SegmenterConfig(**values)
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    config.validate()
    return config


def format_config(config: SegmenterConfig) -> str:
    lines = []
    for f in dataclasses.fields(SegmenterConfig):
        value = getattr(config, f.name)
        if isinstance(value, FusionType):
            value = value.value
        elif isinstance(value, tuple):
            value = ",".join("x".join(str(p) for p in stage) for stage in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _datasets(config: SegmenterConfig):
    train_set = synth_dataset(config.dataset, config.dataset_size, config.H, config.W,
                              config.num_classes, config.seed)
    eval_set = synth_dataset(config.dataset, config.dataset_size, config.H, config.W,
                             config.num_classes, config.seed + EVAL_SEED_OFFSET)
    return train_set, eval_set


def cmd_gradcheck(args) -> int:
    seeds = [args.seed + i for i in range(GRADCHECK_SEEDS)]
    results = run_gradcheck(args.scope, seeds)
    lines = ["op,max_rel_err,samples"]
    lines += [f"{r.op},{r.max_rel_err:.3e},{r.samples}" for r in results]
    csv_text = "\n".join(lines) + "\n"
    print(csv_text, end="")
    if args.out:
        (_out_dir(args) / "gradcheck.csv").write_text(csv_text, encoding="ascii")
    failed = [r for r in results if not r.passed]
    if failed:
        for r in failed:
            print(f"FAIL {r.op}: max relative error {r.max_rel_err:.3e} "
                  f"exceeds {TOLERANCE:g}", file=sys.stderr)
        return 1
    return 0


def cmd_train(args) -> int:
    config = load_config(args.config, args.override, args.seed)
    out = _out_dir(args)
    model = build_model(config)
    train_set, eval_set = _datasets(config)
    report = train(model, train_set, config.steps, config.lr)

    save_checkpoint(model, out / "checkpoint.wgts")
    curve = "\n".join(["step,loss"] + [f"{i},{v!r}" for i, v in enumerate(report.losses)]) + "\n"
    (out / "loss_curve.csv").write_text(curve, encoding="ascii")
    result = evaluate_miou(model, eval_set)
    write_iou_csv(out / "metrics.csv", result.per_class)
    boundary = dataset_boundary_band_accuracy(model, eval_set, band=1)
    summary = {
        "param_count": report.param_count,
        "steps": report.steps,
        "seed": config.seed,
        "final_loss": report.final_loss,
        "train_pixel_accuracy": report.final_pixel_accuracy,
        "eval_miou": result.mean,
        "eval_boundary_band_accuracy": boundary,
    }
    (out / "report.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="ascii")
    print(f"trained {report.param_count} params for {report.steps} steps: "
          f"loss {report.final_loss:.4f}, eval mIoU {result.mean:.4f}")
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config, args.override, args.seed)
    model = load_checkpoint(args.checkpoint, config)
    _, eval_set = _datasets(config)
    result = evaluate_miou(model, eval_set)
    boundary = dataset_boundary_band_accuracy(model, eval_set, band=1)
    if args.out:
        write_iou_csv(_out_dir(args) / "metrics.csv", result.per_class)
    print(f"eval mIoU {result.mean:.4f}, boundary band accuracy {boundary:.4f}")
    return 0


THETA_SWEEP = (2.0, 1.0, 0.5, 0.25, 0.125)
RATIO_SWEEP = (2, 4, 8, 16, 32)
COMPONENT_SWEEP = (("baseline", False, False), ("gt", True, False),
                   ("ba", False, True), ("gt_ba", True, True))


def ablation_settings(axis: str, base: SegmenterConfig):
    """(label, config) pairs for one ablation axis, all sharing the seed."""
    if axis == "theta":
        return [(f"{c:g}", dataclasses.replace(base, theta_coefficient=c)) for c in THETA_SWEEP]
    if axis == "ratio":
        return [(str(r), dataclasses.replace(base, r_gr=r, r_lr=r)) for r in RATIO_SWEEP]
    if axis == "fusion":
        return [(f.value, dataclasses.replace(base, fusion=f)) for f in FusionType]
    if axis == "components":
        return [(label, dataclasses.replace(base, enable_gt=gt, enable_ba=ba))
                for label, gt, ba in COMPONENT_SWEEP]
    raise ConfigError(f"unknown ablation axis {axis!r}")


def cmd_ablate(args) -> int:
    base = load_config(args.config, args.override, args.seed)
    settings = ablation_settings(args.axis, base)
    for _, config in settings:
        config.validate()

    lines = ["setting,miou,boundary_band_accuracy"]
    for label, config in settings:
        model = build_model(config)
        train_set, eval_set = _datasets(config)
        train(model, train_set, config.steps, config.lr)
        result = evaluate_miou(model, eval_set)
        boundary = dataset_boundary_band_accuracy(model, eval_set, band=1)
        lines.append(f"{label},{result.mean!r},{boundary!r}")
        print(lines[-1], file=sys.stderr)
    csv_text = "\n".join(lines) + "\n"
    print(csv_text, end="")
    if args.out:
        (_out_dir(args) / f"ablate_{args.axis}.csv").write_text(csv_text, encoding="ascii")
    return 0


def _parse_number_list(text: str, cast):
    try:
        return [cast(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from exc


def cmd_bench(args) -> int:
    ks = _parse_number_list(args.K, int)
    ds = _parse_number_list(args.D, int)
    cs = _parse_number_list(args.c, float)
    if not ks or not ds or not cs:
        raise ConfigError("bench needs non-empty K, D and c lists")
    rows = run_benchmark(ks, ds, cs, repeats=args.repeats, seed=args.seed)
    csv_text = format_csv(rows)
    print(csv_text, end="")
    if args.out:
        (_out_dir(args) / "bench.csv").write_text(csv_text, encoding="ascii")
    bad = [row for row in rows if row.max_abs_diff != 0.0]
    if bad:
        for row in bad:
            print(f"FAIL sparse/dense mismatch at K={row.K} D={row.D} c={row.c:g}: "
                  f"{row.max_abs_diff:g}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wingraph",
                                     description="window-graph relation network toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--out", default=out_default, help="output directory")

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("scope", choices=SCOPE_NAMES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("train", help="train a toy segmenter")
    p.add_argument("--config", default=None)
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    common(p, out_default="out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--config", default=None)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="sweep one ablation axis")
    p.add_argument("axis", choices=("theta", "ratio", "fusion", "components"))
    p.add_argument("--config", default=None)
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("bench", help="dense vs sparse propagation timing")
    p.add_argument("--K", default="2,4,8,16")
    p.add_argument("--D", default="2,8,32")
    p.add_argument("--c", default="2,1,0.5,0.25,0.125")
    p.add_argument("--repeats", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CheckpointError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
