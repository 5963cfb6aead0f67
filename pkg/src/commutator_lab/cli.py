"""Experiment driver CLI.

Subcommands: gen-space, build-dyadic, norms, sweep-equivalence, sweep-cutoff,
sweep-weighted, probe-critical, probe-variational, extract-representation,
report.  Outputs are CSV tables plus a JSON summary per run; every row
carries the config hash, and runs are reproducible bit-for-bit from
(config, seeds) in single-threaded deterministic mode.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io as cio
from .config import ConfigError, ExperimentConfig, build_space_from_spec, load_config, make_symbol, make_weight_values
from .dyadic import build_dyadic_system
from .haar import build_haar
from .norms import NORM_REPORT_HEADER, NormReport, besov_norm, osc_norm, schatten_lorentz, svd
from .operators import KernelSpec, assemble_kernel, commutator
from .representation import extract_shifts
from .space import ValidationError
from .sweeps import (
    run_critical_index_probe,
    run_cutoff_probe,
    run_equivalence_sweep,
    run_variational_probe,
    run_weighted_sweep,
)


def _ensure_out(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _write_sweep(res, out_dir: str, name: str) -> None:
    cio.write_csv(os.path.join(out_dir, f"{name}.csv"), res.header, res.rows)
    with open(os.path.join(out_dir, f"{name}_summary.json"), "w") as fh:
        json.dump({"kind": res.kind, "config": res.config_hash,
                   "summary": res.summary, "rows": len(res.rows)}, fh, indent=2)
    print(f"wrote {name}.csv ({len(res.rows)} rows) to {out_dir}")


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.dyadic_seed = args.seed
        cfg.symbol_seed = args.seed
    if getattr(args, "dyadic_seed", None) is not None:
        cfg.dyadic_seed = args.dyadic_seed
    if args.out:
        cfg.out_dir = args.out
    return cfg


def cmd_gen_space(args) -> int:
    cfg = _load(args)
    space = build_space_from_spec(cfg.space_spec)
    out = _ensure_out(cfg.out_dir)
    with open(os.path.join(out, "space.json"), "w") as fh:
        json.dump(cio.space_to_json(space), fh)
    print(f"space: n={space.n} total_mass={space.total_mass:.6g} "
          f"diameter={space.diameter:.6g}")
    return 0


def cmd_build_dyadic(args) -> int:
    cfg = _load(args)
    space = build_space_from_spec(cfg.space_spec)
    system = build_dyadic_system(space, cfg.delta, cfg.dyadic_seed)
    out = _ensure_out(cfg.out_dir)
    with open(os.path.join(out, "system.json"), "w") as fh:
        json.dump(cio.system_to_json(system), fh)
    print(f"system: levels={system.levels} c0={system.c0:.4g} C0={system.C0:.4g} "
          f"strict_c={system.strict_constant:.4g}")
    return 0


def cmd_norms(args) -> int:
    cfg = _load(args)
    space = build_space_from_spec(cfg.space_spec)
    system = build_dyadic_system(space, cfg.delta, cfg.dyadic_seed)
    basis = build_haar(system)
    b = make_symbol(cfg, space, basis)
    T = assemble_kernel(space, KernelSpec(cfg.kernel_family, cfg.kernel_eta))
    C = commutator(b, T)
    sv = svd(C.entries)
    sid = cfg.config_hash()
    reports = []
    for p in cfg.p_grid:
        reports.append(NormReport("schatten-commutator", p, p,
                                  schatten_lorentz(sv, p, p), sid, sid,
                                  cfg.symbol_seed))
        reports.append(NormReport("besov", p, p, besov_norm(space, b, p),
                                  sid, sid, cfg.symbol_seed))
        reports.append(NormReport("osc", p, p, osc_norm(system, b, p, p),
                                  sid, sid, cfg.symbol_seed,
                                  metadata={"ball_factor": system.C0}))
    out = _ensure_out(cfg.out_dir)
    cio.append_csv(os.path.join(out, "norms.csv"), NORM_REPORT_HEADER,
                   [r.row() for r in reports])
    for r in reports:
        print(f"{r.kind:22s} p={r.p:<5g} value={r.value:.8g}")
    return 0


def cmd_sweep(args, runner, name) -> int:
    cfg = _load(args)
    res = runner(cfg)
    _write_sweep(res, _ensure_out(cfg.out_dir), name)
    return 0


def cmd_extract(args) -> int:
    cfg = _load(args)
    space = build_space_from_spec(cfg.space_spec)
    system = build_dyadic_system(space, cfg.delta, cfg.dyadic_seed)
    basis = build_haar(system)
    T = assemble_kernel(space, KernelSpec(cfg.kernel_family, cfg.kernel_eta))
    ext = extract_shifts(T, system, basis)
    out = _ensure_out(cfg.out_dir)
    with open(os.path.join(out, "extraction.json"), "w") as fh:
        json.dump(cio.extraction_report_json(ext, cfg.kernel_eta), fh, indent=2)
    print(f"extraction: residual={ext.residual:.3e} families={len(ext.families)} "
          f"maxC={ext.max_norm_constant(cfg.kernel_eta):.4g}")
    return 0


def cmd_report(args) -> int:
    cfg = _load(args)
    out = cfg.out_dir
    found = []
    for name in ("equivalence", "cutoff", "weighted", "critical", "variational"):
        path = os.path.join(out, f"{name}_summary.json")
        if os.path.exists(path):
            with open(path) as fh:
                found.append(json.load(fh))
    print(json.dumps(found, indent=2))
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="commlab",
                                 description="commutator-lab experiment driver")
    ap.add_argument("--config", required=True, help="key-value config file")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override all seeds")
    ap.add_argument("--dyadic-seed", type=int, default=None,
                    help="override the dyadic construction seed only")
    ap.add_argument("--threads", type=int, default=1,
                    help="accepted for interface compatibility; execution is "
                         "single-threaded for determinism")
    ap.add_argument("--deterministic", action="store_true", default=True)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("gen-space", "build-dyadic", "norms", "sweep-equivalence",
                 "sweep-cutoff", "sweep-weighted", "probe-critical",
                 "probe-variational", "extract-representation", "report"):
        sub.add_parser(name)
    args = ap.parse_args(argv)
    try:
        if args.command == "gen-space":
            return cmd_gen_space(args)
        if args.command == "build-dyadic":
            return cmd_build_dyadic(args)
        if args.command == "norms":
            return cmd_norms(args)
        if args.command == "sweep-equivalence":
            return cmd_sweep(args, run_equivalence_sweep, "equivalence")
        if args.command == "sweep-cutoff":
            return cmd_sweep(args, run_cutoff_probe, "cutoff")
        if args.command == "sweep-weighted":
            return cmd_sweep(args, run_weighted_sweep, "weighted")
        if args.command == "probe-critical":
            return cmd_sweep(args, run_critical_index_probe, "critical")
        if args.command == "probe-variational":
            return cmd_sweep(args, run_variational_probe, "variational")
        if args.command == "extract-representation":
            return cmd_extract(args)
        if args.command == "report":
            return cmd_report(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
