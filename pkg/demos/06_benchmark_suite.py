"""A small heteroscedasticity sweep through the CLI harness.

Writes a suite file, runs ``dagmip bench`` on it in deterministic mode and
prints the aggregate table (mean±sd over seeds per cell).
"""

import csv
import tempfile
from pathlib import Path

from dagmip.cli import main

suite = """
m = 8
n = 200
seeds = 0-4
variances = rho
rho = 1, 4
superstructure = estimate
lambda = bic
gap_modes = exact
"""

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    (tmp / "suite.ini").write_text(suite)
    code = main(["bench", str(tmp / "suite.ini"), "--out", str(tmp / "out"), "--deterministic"])
    print("exit code", code)
    for row in csv.DictReader(open(tmp / "out" / "aggregate.csv")):
        print(f"m={row['m']} rho={row['rho']}: d_cpdag {row['d_cpdag']}, "
              f"scaled {row['scaled_d_cpdag']}, finished {row['finished']}/{row['runs']}")
