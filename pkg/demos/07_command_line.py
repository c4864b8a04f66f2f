"""Drive the command-line front end and read back its files.

Equivalent shell usage:
    python3 -m stationary_polymer verify-variance --n 8 --samples 2000 --out-dir out

Run: python3 demos/07_command_line.py
"""
import csv
import json
import tempfile
from pathlib import Path

from stationary_polymer.cli import main

out = Path(tempfile.mkdtemp()) / "run"
code = main(["verify-variance", "--n", "8", "--samples", "2000", "--bootstrap", "300", "--ladder-samples", "0",
             "--out-dir", str(out)])
print("exit status", code)

manifest = json.loads((out / "manifest.json").read_text())
print("files:", manifest["files"])
print("grid:", manifest["grid"])

summary = json.loads((out / "summary.json").read_text())
row = summary["checks"]["variance"]
print(f"Var(log Z) {row['lhs']:.4f} vs {row['rhs']:.4f}, relative residual {row['detail']['relative_residual']:.3f}")

with open(out / "samples.csv") as fh:
    reader = csv.DictReader(fh)
    first = next(reader)
print("columns:", ", ".join(reader.fieldnames[:12]), "...")
print("first sample log Z =", first["log_z"], " E[s0+] =", first["E_s0_plus"])
