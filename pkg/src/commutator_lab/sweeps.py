"""Sweep pipelines: space -> dyadic -> operators -> norms -> tabulated results.

Every sweep is deterministic given (config, seeds): cells are keyed and
evaluated in sorted order, all randomness flows through seeded generators,
and each row carries the config hash.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import (
    ExperimentConfig,
    build_space_from_spec,
    make_symbol,
    make_weight_values,
)
from .dyadic import build_dyadic_system
from .haar import build_haar
from .norms import (
    besov_norm,
    hajlasz_norm,
    osc_norm,
    schatten_lorentz,
    svd,
)
from .operators import KernelSpec, assemble_kernel, commutator, conjugate_to_weighted
from .space import a2_constant, estimate_dimensions


@dataclass
class SweepResult:
    kind: str
    header: list[str]
    rows: list[list] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    config_hash: str = ""

    def column(self, name: str, where: dict | None = None) -> list:
        j = self.header.index(name)
        out = []
        for row in self.rows:
            if where and any(row[self.header.index(k)] != v for k, v in where.items()):
                continue
            out.append(row[j])
        return out


def _cell_stack(cfg: ExperimentConfig, depth: int):
    space = build_space_from_spec(cfg.space_spec, depth)
    system = build_dyadic_system(space, cfg.delta, cfg.dyadic_seed)
    basis = build_haar(system)
    T = assemble_kernel(space, KernelSpec(cfg.kernel_family, cfg.kernel_eta))
    return space, system, basis, T


def p_eta_threshold(eta: float, sep_dim: float) -> float:
    """Sufficiency threshold p(eta) = max(1, (eta/Delta + 1/2)^-1)."""
    return max(1.0, 1.0 / (eta / sep_dim + 0.5))


def run_equivalence_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Commutator-Schatten vs Besov ratio table across (depth, symbol, p)."""
    header = ["kind", "depth", "seed", "p", "schatten", "besov", "r_upper",
              "r_lower", "p_eta", "flagged", "null_symbol", "config"]
    res = SweepResult("equivalence", header, config_hash=cfg.config_hash())
    ratios: dict[float, list[float]] = {}
    for depth in sorted(cfg.depths):
        space, system, basis, T = _cell_stack(cfg, depth)
        dims = estimate_dimensions(space)
        p_eta = p_eta_threshold(cfg.kernel_eta, max(dims.d_sep, 1e-9))
        for seed in sorted(cfg.seeds):
            b = make_symbol(cfg, space, basis, seed)
            C = commutator(b, T)
            sv = svd(C.entries)
            bnorm_all = {p: besov_norm(space, b, p) for p in cfg.p_grid}
            for p in sorted(cfg.p_grid):
                s = schatten_lorentz(sv, p, p)
                bn = bnorm_all[p]
                null = bn == 0.0 and s == 0.0
                r_up = s / bn if bn > 0 else None
                r_lo = bn / s if s > 0 else None
                res.rows.append([
                    "equivalence", depth, seed, p, s, bn,
                    r_up, r_lo, p_eta, p <= p_eta, null, res.config_hash,
                ])
                if r_up is not None:
                    ratios.setdefault(p, []).append(r_up)
    res.summary = {
        "ratio_spread_per_p": {
            str(p): (max(v) / min(v) if min(v) > 0 else None)
            for p, v in ratios.items()
        }
    }
    return res


def run_cutoff_probe(cfg: ExperimentConfig) -> SweepResult:
    """Besov-norm growth of a fixed nonconstant symbol under refinement.

    For p equal to the volume dimension the norm must grow without bound
    (positive log-depth slope); for p above it the slope decays to zero.
    """
    header = ["kind", "depth", "p", "besov", "schatten", "config"]
    res = SweepResult("cutoff", header, config_hash=cfg.config_hash())
    values: dict[float, list[tuple[int, float]]] = {}
    for depth in sorted(cfg.depths):
        space, system, basis, T = _cell_stack(cfg, depth)
        b = make_symbol(cfg, space, basis)
        C = commutator(b, T)
        sv = svd(C.entries)
        for p in sorted(cfg.p_grid):
            bn = besov_norm(space, b, p)
            s = schatten_lorentz(sv, p, p)
            res.rows.append(["cutoff", depth, p, bn, s, res.config_hash])
            values.setdefault(p, []).append((depth, bn))
    slopes = {}
    for p, pairs in values.items():
        pairs.sort()
        seq = [(d, np.log(v)) for d, v in pairs if v > 0]
        steps = [(seq[i + 1][1] - seq[i][1]) / (seq[i + 1][0] - seq[i][0])
                 for i in range(len(seq) - 1)]
        slopes[str(p)] = {"per_step": steps,
                          "final": steps[-1] if steps else None,
                          "first": steps[0] if steps else None}
    res.summary = {"log_depth_slopes": slopes}
    return res


def run_weighted_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Weighted commutator Schatten-Lorentz over unweighted Osc ratios."""
    header = ["kind", "depth", "seed", "p", "q", "a2", "weighted_schatten",
              "osc", "ratio", "matches_unweighted", "config"]
    res = SweepResult("weighted", header, config_hash=cfg.config_hash())
    q_grid = cfg.q_grid or [None]
    ratio_track: dict[tuple, list[float]] = {}
    for depth in sorted(cfg.depths):
        space, system, basis, T = _cell_stack(cfg, depth)
        wvals = make_weight_values(cfg, space)
        if wvals is None:
            wvals = np.ones(space.n)
        a2 = a2_constant(space, wvals)
        for seed in sorted(cfg.seeds):
            b = make_symbol(cfg, space, basis, seed)
            C = commutator(b, T)
            Cw = conjugate_to_weighted(C, wvals)
            sv_w = svd(Cw.entries)
            sv_u = svd(C.entries)
            for p in sorted(cfg.p_grid):
                for q in q_grid:
                    qq = p if q is None else q
                    s_w = schatten_lorentz(sv_w, p, qq)
                    s_u = schatten_lorentz(sv_u, p, qq)
                    osc = osc_norm(system, b, p, qq)
                    ratio = s_w / osc if osc > 0 else None
                    matches = bool(np.allclose(s_w, s_u)) if np.allclose(
                        wvals, wvals[0]) and wvals[0] == 1.0 else None
                    res.rows.append(["weighted", depth, seed, p, qq, a2, s_w,
                                     osc, ratio, matches, res.config_hash])
                    if ratio is not None:
                        ratio_track.setdefault((p, qq), []).append(ratio)
    res.summary = {"ratio_spread": {str(k): (max(v) / min(v)) for k, v in
                                    ratio_track.items() if min(v) > 0}}
    return res


def run_critical_index_probe(cfg: ExperimentConfig, d: float | None = None,
                             hajlasz_iters: int = 400) -> SweepResult:
    """Triple (S^{d,inf} commutator, Osc^{d,inf}, Hajlasz d-norm) across depths."""
    header = ["kind", "depth", "d", "regular", "schatten_weak", "osc_weak",
              "hajlasz", "hajlasz_converged", "r_so", "r_sh", "r_oh", "config"]
    res = SweepResult("critical", header, config_hash=cfg.config_hash())
    for depth in sorted(cfg.depths):
        space, system, basis, T = _cell_stack(cfg, depth)
        dims = estimate_dimensions(space)
        if d is not None:
            dd = d
        elif "dim" in space.meta:
            dd = float(space.meta["dim"])
        else:
            dd = max(1.0, round(dims.d_upper))
        regular = abs(dims.d_upper - dims.d_lower) < 0.5
        b = make_symbol(cfg, space, basis)
        C = commutator(b, T)
        s_weak = schatten_lorentz(svd(C.entries), dd, float("inf"))
        o_weak = osc_norm(system, b, dd, float("inf"), 1.0)
        hj = hajlasz_norm(space, b, dd, max_iter=hajlasz_iters)
        def _ratio(x, y):
            return x / y if y > 0 else None
        res.rows.append(["critical", depth, dd, regular, s_weak, o_weak,
                         hj.value, hj.converged, _ratio(s_weak, o_weak),
                         _ratio(s_weak, hj.value), _ratio(o_weak, hj.value),
                         res.config_hash])
    return res


def run_variational_probe(cfg: ExperimentConfig, n_annuli: int = 4) -> SweepResult:
    """Aggregate Schatten norm of disjoint annular truncations vs the Besov norm."""
    header = ["kind", "depth", "p", "n_annuli", "aggregate", "single_full",
              "besov", "ratio", "config"]
    res = SweepResult("variational", header, config_hash=cfg.config_hash())
    ps = [p for p in cfg.p_grid if p > 2] or [3.0]
    for depth in sorted(cfg.depths):
        space = build_space_from_spec(cfg.space_spec, depth)
        system = build_dyadic_system(space, cfg.delta, cfg.dyadic_seed)
        basis = build_haar(system)
        b = make_symbol(cfg, space, basis)
        edges = np.geomspace(space.min_gap * 0.5, space.diameter * 1.0001,
                             n_annuli + 1)
        full = assemble_kernel(space, KernelSpec(cfg.kernel_family, cfg.kernel_eta))
        C_full = commutator(b, full)
        for p in ps:
            agg = 0.0
            for a_lo, a_hi in zip(edges[:-1], edges[1:]):
                Tk = assemble_kernel(space, KernelSpec(
                    cfg.kernel_family, cfg.kernel_eta, truncation=(a_lo, a_hi)))
                Ck = commutator(b, Tk)
                agg += schatten_lorentz(svd(Ck.entries), p, p) ** p
            agg = agg ** (1.0 / p)
            single = schatten_lorentz(svd(C_full.entries), p, p)
            bn = besov_norm(space, b, p)
            res.rows.append(["variational", depth, p, n_annuli, agg, single,
                             bn, agg / bn if bn > 0 else None, res.config_hash])
    return res
