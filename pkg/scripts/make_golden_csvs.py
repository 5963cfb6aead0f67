#!/usr/bin/env python3
"""Regenerate the golden sweep CSVs consumed by the frontend plot tests.

Usage: python scripts/make_golden_csvs.py [frontend/golden]
"""

import sys
from pathlib import Path

from commutator_lab import io as cio
from commutator_lab.config import config_from_dict
from commutator_lab.sweeps import (
    run_critical_index_probe,
    run_cutoff_probe,
    run_equivalence_sweep,
    run_weighted_sweep,
)


def run(outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    base = {
        "space.kind": "euclidean-grid", "space.dim": "1",
        "dyadic.delta": "0.5", "kernel.family": "hilbert",
        "kernel.eta": "1.0", "symbol.kind": "random-haar-mixture",
        "symbol.seed": "3", "norms.p": "2,3,4",
        "sweep.depths": "3,4,5", "sweep.seeds": "0,1",
    }
    cfg = config_from_dict(base)
    res = run_equivalence_sweep(cfg)
    cio.write_csv(str(outdir / "equivalence.csv"), res.header, res.rows)

    cfg_w = config_from_dict({**base, "weight.kind": "power",
                              "weight.exponent": "0.5", "sweep.seeds": "0"})
    res = run_weighted_sweep(cfg_w)
    cio.write_csv(str(outdir / "weighted.csv"), res.header, res.rows)

    cfg_2d = config_from_dict({
        "space.kind": "euclidean-grid", "space.dim": "2",
        "dyadic.delta": "0.5", "kernel.family": "riesz",
        "symbol.kind": "coordinate", "norms.p": "2,3",
        "sweep.depths": "2,3,4",
    })
    res = run_cutoff_probe(cfg_2d)
    cio.write_csv(str(outdir / "cutoff.csv"), res.header, res.rows)

    res = run_critical_index_probe(cfg_2d, hajlasz_iters=200)
    cio.write_csv(str(outdir / "critical.csv"), res.header, res.rows)
    print(f"golden CSVs written to {outdir}")


if __name__ == "__main__":
    run(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("frontend/golden"))
