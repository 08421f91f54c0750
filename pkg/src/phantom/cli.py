"""Command-line pipeline: gen-data | train | synthesize | evaluate | report.

Each command reads an optional JSON config (strictly validated, defaults
filled), applies --seed/--out/--set overrides, runs its stage, and writes
outputs atomically. Every run directory receives the fully resolved
config echo (config_resolved.json) so a run can be replayed exactly;
timestamps live only in run_meta.json.

Exit codes: 0 success, 2 config/input validation failure, 3 training
divergence, 1 any other pipeline error. PHANTOM_LOG_LEVEL in
{error, info, debug} controls verbosity.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .benchmark import (
    GENERATOR_VERSION,
    default_class_specs,
    generate_benchmark,
    read_csv,
    write_csv,
)
from .config import RunConfig, apply_overrides, parse_config
from .errors import (
    ConfigurationError,
    DivergenceError,
    FormatError,
    InfeasibleSplitError,
    InputError,
    PhantomError,
)
from .evaluation import MetricsReport, evaluate_pipeline, write_report
from .ioutil import atomic_write, atomic_write_text
from .trainer import load_checkpoint, save_checkpoint, synthesize, train, write_loss_log

log = logging.getLogger("phantom")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3

_VALIDATION_ERRORS = (ConfigurationError, FormatError, InfeasibleSplitError, InputError)


def _configure_logging() -> None:
    level_name = os.environ.get("PHANTOM_LOG_LEVEL", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        level_name = "info"
    logging.basicConfig(level=levels[level_name], format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phantom",
        description="Synthesize and evaluate tabular network-attack data.",
    )
    parser.add_argument("--version", action="version", version=f"phantom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("gen-data", "generate the labeled benchmark dataset"),
        ("train", "train the generative model on a dataset CSV"),
        ("synthesize", "sample synthetic rows from a checkpoint"),
        ("evaluate", "compute utility/fidelity/diversity metrics"),
        ("report", "render a metrics JSON as text tables"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", type=str, default=None, help="JSON config path")
        cmd.add_argument("--seed", type=int, default=None, help="override the command seed")
        cmd.add_argument("--out", type=str, default=None, help="override the output path")
        cmd.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (dotted path, JSON value)",
        )
    return parser


# per-command targets for the --seed / --out shorthands
_SEED_KEYS = {
    "gen-data": "data.seed",
    "train": "train.seed",
    "synthesize": "synthesize.seed",
    "evaluate": "evaluate.detector_seed",
    "report": None,
}
_OUT_KEYS = {
    "gen-data": "data.output",
    "train": "train.checkpoint_dir",
    "synthesize": "synthesize.output",
    "evaluate": "evaluate.report_dir",
    "report": "evaluate.report_dir",
}


def _load_config(args) -> tuple[RunConfig | None, list[str]]:
    if args.config is not None:
        path = Path(args.config)
        if not path.exists():
            return None, [f"config file not found: {path}"]
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            return None, [f"{path}: invalid JSON: {err}"]
    else:
        doc = {}
    overrides = list(args.overrides)
    if args.seed is not None and _SEED_KEYS[args.command]:
        overrides.append(f"{_SEED_KEYS[args.command]}={args.seed}")
    if args.out is not None and _OUT_KEYS[args.command]:
        overrides.append(f"{_OUT_KEYS[args.command]}={json.dumps(args.out)}")
    try:
        doc = apply_overrides(doc, overrides)
    except FormatError as err:
        return None, [str(err)]
    return parse_config(doc)


def _write_run_records(out_dir: Path, config: RunConfig) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(
        out_dir / "config_resolved.json",
        json.dumps(config.to_dict(), indent=2, sort_keys=True),
    )
    atomic_write_text(
        out_dir / "run_meta.json",
        json.dumps(
            {
                "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "version": __version__,
            },
            indent=2,
        ),
    )


def _write_table(table, path: Path, metadata: dict) -> None:
    def _write(tmp: Path) -> None:
        write_csv(table, tmp)

    atomic_write(path, _write)
    sidecar = {"block_map": list(table.block_map), **metadata}
    sidecar.setdefault("generator_version", GENERATOR_VERSION)
    atomic_write_text(
        Path(str(path) + ".meta.json"), json.dumps(sidecar, indent=2, sort_keys=True)
    )


def _cmd_gen_data(config: RunConfig) -> int:
    section = config.data
    specs = default_class_specs(section.proportions)
    log.info("generating %d rows (seed %d)", section.n_total, section.seed)
    table = generate_benchmark(section.n_total, specs, seed=section.seed)
    out = Path(section.output)
    _write_table(
        table,
        out,
        metadata={
            "seed": section.seed,
            "n_total": section.n_total,
            "proportions": list(section.proportions),
            "class_counts": {str(k): v for k, v in table.class_counts().items()},
        },
    )
    _write_run_records(out.parent, config)
    print(f"wrote {table.n} rows to {out}")
    return EXIT_OK


def _cmd_train(config: RunConfig) -> int:
    section = config.train
    table = read_csv(section.data)
    train_config = section.to_train_config()
    log.info(
        "training on %d rows: %d level(s) x %d iterations, batch %d",
        table.n, train_config.levels, train_config.iters_per_level, train_config.batch_size,
    )
    result = train(train_config, table)
    out_dir = Path(section.checkpoint_dir)
    save_checkpoint(result.models, train_config, out_dir, step=len(result.log))
    write_loss_log(result.log, out_dir / "loss_log.csv")
    _write_run_records(out_dir, config)
    final = result.log[-1].losses
    print(
        f"trained {len(result.log)} steps; final total_g={final.total_g:.4f} "
        f"total_d={final.total_d:.4f}; checkpoint at {out_dir}"
    )
    return EXIT_OK


def _cmd_synthesize(config: RunConfig) -> int:
    section = config.synthesize
    models, _ = load_checkpoint(section.checkpoint)
    log.info("synthesizing %d rows (seed %d)", section.n, section.seed)
    table = synthesize(models, section.n, labels=section.label_mix, seed=section.seed)
    out = Path(section.output)
    _write_table(
        table,
        out,
        metadata={
            "seed": section.seed,
            "n": section.n,
            "label_mix": section.label_mix,
            "checkpoint": str(section.checkpoint),
            "class_counts": {str(k): v for k, v in table.class_counts().items()},
        },
    )
    _write_run_records(out.parent, config)
    print(f"wrote {table.n} synthetic rows to {out}")
    return EXIT_OK


def _cmd_evaluate(config: RunConfig) -> int:
    section = config.evaluate
    real = read_csv(section.real)
    synth = read_csv(section.synth)
    log.info("evaluating %d synthetic rows against %d real rows", synth.n, real.n)
    report, plots = evaluate_pipeline(
        real,
        synth,
        seed=section.detector_seed,
        test_fraction=section.test_fraction,
        nn_max_rows=section.nn_max_rows,
        density_feature=section.density_feature,
        grid_points=section.grid_points,
        bins=section.bins,
    )
    out_dir = Path(section.report_dir)
    write_report(report, out_dir)
    for name, series in plots.items():
        series.to_csv(out_dir / f"{name}.csv")
    _write_run_records(out_dir, config)
    print(report.to_text(), end="")
    print(f"report written to {out_dir}")
    return EXIT_OK


def _cmd_report(config: RunConfig) -> int:
    metrics_path = Path(config.evaluate.report_dir) / "metrics.json"
    if not metrics_path.exists():
        raise FormatError(f"{metrics_path}: no such metrics file")
    report = MetricsReport.from_json_dict(
        json.loads(metrics_path.read_text(encoding="utf-8"))
    )
    print(report.to_text(), end="")
    return EXIT_OK


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "synthesize": _cmd_synthesize,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    config, errors = _load_config(args)
    if errors:
        for err in errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return _COMMANDS[args.command](config)
    except DivergenceError as err:
        print(f"divergence: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except _VALIDATION_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except PhantomError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
