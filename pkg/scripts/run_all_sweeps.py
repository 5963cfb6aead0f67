#!/usr/bin/env python3
"""Run every sweep/probe on the stock configurations and collect the outputs.

Usage: python scripts/run_all_sweeps.py [outdir]
"""

import sys
import tempfile
from pathlib import Path

from commutator_lab.cli import main

CONFIGS = {
    "hilbert_1d": """
space.kind = euclidean-grid
space.dim = 1
dyadic.delta = 0.5
kernel.family = hilbert
kernel.eta = 1.0
symbol.kind = random-haar-mixture
symbol.seed = 3
weight.kind = power
weight.exponent = 0.5
norms.p = 2,3,4
sweep.depths = 4,5,6
sweep.seeds = 0,1,2
""",
    "riesz_2d": """
space.kind = euclidean-grid
space.dim = 2
dyadic.delta = 0.5
kernel.family = riesz
kernel.eta = 1.0
symbol.kind = coordinate
norms.p = 2,3
sweep.depths = 3,4,5
sweep.seeds = 0
""",
}

COMMANDS = {
    "hilbert_1d": ["sweep-equivalence", "sweep-weighted", "probe-variational",
                   "extract-representation", "norms"],
    "riesz_2d": ["sweep-cutoff", "probe-critical"],
}


def run(outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    for name, text in CONFIGS.items():
        with tempfile.NamedTemporaryFile("w", suffix=".txt", delete=False) as fh:
            fh.write(text + f"\nout.dir = {outdir / name}\n")
            cfg_path = fh.name
        for command in COMMANDS[name]:
            print(f"== {name}: {command}")
            rc = main(["--config", cfg_path, command])
            if rc != 0:
                raise SystemExit(rc)
        main(["--config", cfg_path, "report"])


if __name__ == "__main__":
    run(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results"))
