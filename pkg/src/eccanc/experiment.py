"""Multi-curve, multi-trial experiment grid with averaged reports.

A grid cell is a ``(curve, evecycles)`` pair. Each cell runs ``trials``
independent trainings whose seeds derive deterministically from the base
seed, scores Bob and Eve on one fresh batch after training, and averages
final losses, accuracies and per-iteration loss traces over trials.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .ecc import curve_by_name, sample_keypairs
from .ecc.curves import CURVE_NAMES
from .networks import alice_encrypt, bob_decrypt, decryption_accuracy, eve_intercept
from .training import TrainingConfig, run_training, sample_messages

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("iteration", "abe_loss", "bob_loss", "eve_loss")
OUTPUT_ENV = "ECCANC_OUTPUT_DIR"
QUICK_EPOCHS = 2


@dataclass
class ExperimentSpec:
    curves: list = field(default_factory=lambda: list(CURVE_NAMES))
    evecycles: list = field(default_factory=lambda: [1, 2])
    trials: int = 5
    base_seed: int = 0
    overrides: dict = field(default_factory=dict)
    output_dir: str = "results"
    workers: int = 1
    checkpoints: bool = False

    def cells(self):
        return [(c, e) for c in self.curves for e in self.evecycles]

    def training_config(self, curve: str, evecycles: int, seed: int) -> TrainingConfig:
        return TrainingConfig(curve=curve, evecycles=evecycles, seed=seed,
                              **self.overrides).validate()

    def seeds(self, curve: str, evecycles: int) -> list[int]:
        return [trial_seed(self.base_seed, curve, evecycles, t) for t in range(self.trials)]


def trial_seed(base_seed: int, curve: str, evecycles: int, trial: int) -> int:
    ss = np.random.SeedSequence([base_seed, CURVE_NAMES.index(curve), evecycles, trial])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class TrialResult:
    curve: str
    evecycles: int
    seed: int
    config: dict
    final_abe_loss: float
    final_bob_loss: float
    final_eve_loss: float
    bob_accuracy: float
    eve_accuracy: float
    trace: np.ndarray  # [iterations, 3] columns abe, bob, eve
    networks: dict | None = None

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("trace")
        d.pop("networks")
        return d


@dataclass
class AggregateReport:
    curve: str
    evecycles: int
    seeds: list
    abe_loss: float
    bob_loss: float
    eve_loss: float
    bob_accuracy: float
    eve_accuracy: float
    mean_trace: np.ndarray

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("mean_trace")
        d["trials"] = len(self.seeds)
        return d


def evaluation_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(5)[4])


def run_trial(curve: str, evecycles: int, seed: int, overrides: dict | None = None,
              keep_networks: bool = False) -> TrialResult:
    cfg = TrainingConfig(curve=curve, evecycles=evecycles, seed=seed,
                         **(overrides or {})).validate()
    log.info("trial %s evecycles=%d seed=%d (%d iterations)", curve, evecycles, seed,
             cfg.total_iterations)
    trace = run_training(cfg)

    rng = evaluation_rng(seed)
    c = curve_by_name(curve)
    msgs = sample_messages(cfg.batch_size, cfg.m_bits, rng)
    priv, pub = sample_keypairs(cfg.batch_size, c, rng)
    cipher = alice_encrypt(trace.alice, msgs, pub)
    bob_acc = decryption_accuracy(msgs, bob_decrypt(trace.bob, cipher, priv))
    eve_acc = decryption_accuracy(msgs, eve_intercept(trace.eve, cipher, pub))

    arr = np.column_stack([trace.column("abe_loss"), trace.column("bob_loss"),
                           trace.column("eve_loss")])
    nets = None
    if keep_networks:
        nets = {n.role: n.to_dict() for n in (trace.alice, trace.bob, trace.eve)}
    last = trace.records[-1]
    return TrialResult(curve, evecycles, seed, cfg.to_dict(), last.abe_loss, last.bob_loss,
                       last.eve_loss, bob_acc, eve_acc, arr, nets)


def aggregate(trials: list[TrialResult]) -> AggregateReport:
    if not trials:
        raise ValueError("cannot aggregate an empty list of trials")
    cells = {(t.curve, t.evecycles) for t in trials}
    if len(cells) != 1:
        raise ValueError(f"trials span several grid cells: {sorted(cells)}")
    curve, evecycles = cells.pop()

    def mean(name):
        return float(np.mean([getattr(t, name) for t in trials]))

    return AggregateReport(
        curve=curve,
        evecycles=evecycles,
        seeds=[t.seed for t in trials],
        abe_loss=mean("final_abe_loss"),
        bob_loss=mean("final_bob_loss"),
        eve_loss=mean("final_eve_loss"),
        bob_accuracy=mean("bob_accuracy"),
        eve_accuracy=mean("eve_accuracy"),
        mean_trace=np.mean(np.stack([t.trace for t in trials]), axis=0),
    )


def _run_trial_job(args):
    return run_trial(*args)


def run_experiment(spec: ExperimentSpec) -> tuple[list[AggregateReport], list[TrialResult]]:
    jobs = [(curve, ev, seed, spec.overrides, spec.checkpoints)
            for curve, ev in spec.cells() for seed in spec.seeds(curve, ev)]
    for curve, ev in spec.cells():
        spec.training_config(curve, ev, 0)  # fail fast on bad overrides
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_trial_job, jobs))
    else:
        results = [_run_trial_job(job) for job in jobs]
    reports = []
    for curve, ev in spec.cells():
        reports.append(aggregate([r for r in results if (r.curve, r.evecycles) == (curve, ev)]))
    return reports, results


def trace_filename(curve: str, evecycles: int) -> str:
    return f"{curve}_eve{evecycles}.csv"


def write_trace_table(path: Path, trace: np.ndarray):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for i, (abe, bob, eve) in enumerate(trace):
            w.writerow([i, repr(float(abe)), repr(float(bob)), repr(float(eve))])


def read_trace_table(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace header {rows[0]}")
    return np.array([[float(v) for v in row] for row in rows[1:]])


def emit_report(reports: list[AggregateReport], spec: ExperimentSpec,
                trials: list[TrialResult] | None = None) -> Path:
    """Write ``report.json``, one trace table per cell and optional checkpoints."""
    out = Path(spec.output_dir)
    try:
        (out / "traces").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc

    doc = {
        "experiment": {
            "curves": list(spec.curves),
            "evecycles": list(spec.evecycles),
            "trials": spec.trials,
            "base_seed": spec.base_seed,
            "overrides": dict(spec.overrides),
        },
        "cells": [],
    }
    for rep in reports:
        cell = rep.summary()
        cell["trace_table"] = f"traces/{trace_filename(rep.curve, rep.evecycles)}"
        if trials is not None:
            cell["trial_results"] = [t.summary() for t in trials
                                     if (t.curve, t.evecycles) == (rep.curve, rep.evecycles)]
        doc["cells"].append(cell)
        write_trace_table(out / cell["trace_table"], rep.mean_trace)

    if spec.checkpoints and trials is not None:
        ck = out / "checkpoints"
        ck.mkdir(exist_ok=True)
        for t in trials:
            if t.networks is not None:
                name = f"{t.curve}_eve{t.evecycles}_seed{t.seed}.json"
                (ck / name).write_text(json.dumps({"seed": t.seed, "networks": t.networks}))

    path = out / "report.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def format_tables(reports: list[AggregateReport]) -> str:
    """Plain-text loss and accuracy tables, one block per evecycles setting."""
    lines = []
    for ev in sorted({r.evecycles for r in reports}):
        lines.append(f"evecycles = {ev}")
        lines.append(f"{'curve':<10} {'ABE loss':>9} {'Bob loss':>9} {'Eve loss':>9} "
                     f"{'Bob acc %':>10} {'Eve acc %':>10}")
        for r in reports:
            if r.evecycles == ev:
                lines.append(f"{r.curve:<10} {r.abe_loss:9.3f} {r.bob_loss:9.3f} "
                             f"{r.eve_loss:9.3f} {r.bob_accuracy:10.3f} {r.eve_accuracy:10.3f}")
        lines.append("")
    return "\n".join(lines)


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "results")
