"""Command-line entry point for the curve x evecycles experiment grid."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .ecc.curves import CURVE_NAMES
from .experiment import (
    QUICK_EPOCHS,
    ExperimentSpec,
    default_output_dir,
    emit_report,
    format_tables,
    run_experiment,
)
from .training import ConfigError, TrainingConfig

# flag dest -> TrainingConfig field
_OVERRIDES = {"epochs": "n_epochs", "batch": "batch_size", "bits": "m_bits", "lr": "lr"}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eccanc", description="Train Alice, Bob and Eve over ECC keys and "
                "report averaged losses and decryption accuracies.")
    p.add_argument("--curve", action="append", choices=CURVE_NAMES, metavar="NAME",
                   help="curve to run (repeatable; default: all five)")
    p.add_argument("--eve-cycles", type=int, action="append", dest="evecycles",
                   help="Eve updates per iteration (repeatable; default: 1 and 2)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--bits", type=int, help="message length in bits")
    p.add_argument("--lr", type=float, help="learning rate for all three optimizers")
    p.add_argument("--trials", type=int, help="trials per grid cell (default 5)")
    p.add_argument("--seed", type=int, help="base seed for trial seed derivation")
    p.add_argument("--output", help="output directory")
    p.add_argument("--single-trial", action="store_true", help="run one trial per cell")
    p.add_argument("--quick", action="store_true",
                   help=f"smoke-test mode: {QUICK_EPOCHS} epochs per trial")
    p.add_argument("--workers", type=int, help="concurrent trials")
    p.add_argument("--checkpoints", action="store_true", help="save trained network weights")
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse_invocation(argv=None, config: dict | None = None) -> ExperimentSpec:
    """Flags override config-file values, which override defaults."""
    args = build_parser().parse_args(argv)
    merged = dict(config or {})
    if args.config:
        merged.update(_load_config(args.config))
    known = set(vars(args)) | {"eve_cycles"}
    unknown = set(merged) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "eve_cycles" in merged:
        merged.setdefault("evecycles", merged.pop("eve_cycles"))
    for key, value in vars(args).items():
        if value is not None and value is not False:
            merged[key] = value

    def as_list(v):
        return list(v) if isinstance(v, (list, tuple)) else [v]

    curves = as_list(merged.get("curve", list(CURVE_NAMES)))
    for c in curves:
        if c not in CURVE_NAMES:
            raise UsageError(f"unknown curve {c!r}; supported: {', '.join(CURVE_NAMES)}")
    evecycles = [int(e) for e in as_list(merged.get("evecycles", [1, 2]))]

    overrides = {field: merged[flag] for flag, field in _OVERRIDES.items() if flag in merged}
    if merged.get("quick"):
        overrides["n_epochs"] = QUICK_EPOCHS
    trials = 1 if merged.get("single_trial") else int(merged.get("trials", 5))
    if trials < 1:
        raise UsageError("--trials must be at least 1")
    workers = int(merged.get("workers", 1))
    if workers < 1:
        raise UsageError("--workers must be at least 1")

    for ev in evecycles:
        try:
            TrainingConfig(curve=curves[0], evecycles=ev, **overrides).validate()
        except ConfigError as exc:
            raise UsageError(str(exc)) from exc

    return ExperimentSpec(
        curves=curves,
        evecycles=evecycles,
        trials=trials,
        base_seed=int(merged.get("seed", 0)),
        overrides=overrides,
        output_dir=merged.get("output") or default_output_dir(),
        workers=workers,
        checkpoints=bool(merged.get("checkpoints")),
    )


def main(argv=None) -> int:
    try:
        spec = parse_invocation(argv)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"eccanc: error: {exc}", file=sys.stderr)
        return 2
    args = sys.argv[1:] if argv is None else argv
    verbose = "-v" in args or "--verbose" in args
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        reports, trials = run_experiment(spec)
        path = emit_report(reports, spec, trials)
    except Exception as exc:  # noqa: BLE001 - any failure becomes a diagnostic
        print(f"eccanc: error: {exc}", file=sys.stderr)
        return 1
    print(format_tables(reports))
    print(f"report written to {path}")
    return 0
