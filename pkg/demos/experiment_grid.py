"""
A small experiment grid and its report
======================================

The same machinery as the ``eccanc`` command, shrunk to 8-bit messages so it
finishes in seconds: two curves, both Eve schedules, two trials per cell.
"""

import json
import tempfile
from pathlib import Path

from eccanc.experiment import ExperimentSpec, emit_report, format_tables, read_trace_table, run_experiment

out = Path(tempfile.mkdtemp(prefix="eccanc-demo-"))
spec = ExperimentSpec(
    curves=["secp224r1", "secp256k1"],
    evecycles=[1, 2],
    trials=2,
    base_seed=5,
    overrides={"m_bits": 8, "batch_size": 32, "n_epochs": 10},
    output_dir=str(out),
)
reports, trials = run_experiment(spec)
path = emit_report(reports, spec, trials)
print(format_tables(reports))

doc = json.loads(path.read_text())
cell = doc["cells"][0]
print("seeds recorded for", cell["curve"], cell["evecycles"], "->", cell["seeds"])

table = read_trace_table(out / cell["trace_table"])
print("trace table", cell["trace_table"], "has", len(table), "rows; last:", table[-1])
print("files under", out, ":", sorted(p.name for p in out.rglob("*") if p.is_file()))
