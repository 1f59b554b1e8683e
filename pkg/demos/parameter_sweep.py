"""Sweep the rotation decay rate on the single-ellipse scene through the command line entry point.

Run: python3 demos/parameter_sweep.py [OUT_DIR]
"""

import csv
import sys
from pathlib import Path

from cavf.cli import main

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
code = main(["sweep", "builtin:fig1", "--sweep", "field.b_i=0.005,0.01,0.02,0.05", "--out", str(out)])

with open(out / "fig1_sweep.csv", encoding="utf-8") as fh:
    for row in csv.DictReader(fh):
        print(f"b_i={float(row['field.b_i']):<6} {row['outcome']:<8} path {float(row['path_length']):.3f} m")
sys.exit(code)
