"""Experiment configuration: plain-text key-value files with dotted keys.

Example::

    # space
    space.kind = euclidean-grid
    space.dim = 1
    space.points_per_side = 16
    space.spacing = 0.0625
    dyadic.delta = 0.5
    dyadic.seed = 0
    kernel.family = hilbert
    kernel.eta = 1.0
    symbol.kind = random-haar-mixture
    symbol.seed = 3
    weight.kind = none
    norms.p = 2,3,4
    sweep.depths = 4,5,6
    sweep.seeds = 0

Values are strings; comma-separated lists parse to lists; numerics are
coerced by the consumers.  Unknown keys fail fast with the offending key.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .space import (
    FiniteSpace,
    ValidationError,
    bessel_grid,
    cantor_space,
    euclidean_grid,
    four_squares,
)


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


_KNOWN_PREFIXES = ("space", "dyadic", "kernel", "symbol", "weight", "norms",
                   "sweep", "out")


def parse_key_value(text: str) -> dict:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, _, val = line.partition(sep)
                break
        else:
            raise ConfigError(f"line {lineno}", f"not a key=value pair: {line!r}")
        key = key.strip()
        if key.split(".")[0] not in _KNOWN_PREFIXES:
            raise ConfigError(key, "unknown section")
        out[key] = val.strip()
    return out


def _floats(val: str) -> list[float]:
    return [float(v) for v in val.split(",") if v.strip()]


def _ints(val: str) -> list[int]:
    return [int(v) for v in val.split(",") if v.strip()]


@dataclass
class ExperimentConfig:
    space_spec: dict
    delta: float = 0.5
    dyadic_seed: int = 0
    kernel_family: str = "hilbert"
    kernel_eta: float = 1.0
    symbol_kind: str = "random-haar-mixture"
    symbol_seed: int = 0
    symbol_csv: str | None = None
    weight_kind: str = "none"
    weight_exponent: float = 0.5
    p_grid: list[float] = field(default_factory=lambda: [2.0, 3.0, 4.0])
    q_grid: list[float] = field(default_factory=list)
    depths: list[int] = field(default_factory=lambda: [3, 4, 5])
    seeds: list[int] = field(default_factory=lambda: [0])
    out_dir: str = "results"
    raw: dict = field(default_factory=dict)

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        kv = parse_key_value(fh.read())
    return config_from_dict(kv)


def config_from_dict(kv: dict) -> ExperimentConfig:
    space_spec = {k.split(".", 1)[1]: v for k, v in kv.items()
                  if k.startswith("space.")}
    if "kind" not in space_spec:
        raise ConfigError("space.kind", "missing")
    cfg = ExperimentConfig(space_spec=space_spec, raw=dict(kv))
    if "dyadic.delta" in kv:
        cfg.delta = float(kv["dyadic.delta"])
    if "dyadic.seed" in kv:
        cfg.dyadic_seed = int(kv["dyadic.seed"])
    if "kernel.family" in kv:
        cfg.kernel_family = kv["kernel.family"]
    if "kernel.eta" in kv:
        cfg.kernel_eta = float(kv["kernel.eta"])
    if "symbol.kind" in kv:
        cfg.symbol_kind = kv["symbol.kind"]
    if "symbol.seed" in kv:
        cfg.symbol_seed = int(kv["symbol.seed"])
    if "symbol.csv" in kv:
        cfg.symbol_csv = kv["symbol.csv"]
    if "weight.kind" in kv:
        cfg.weight_kind = kv["weight.kind"]
    if "weight.exponent" in kv:
        cfg.weight_exponent = float(kv["weight.exponent"])
    if "norms.p" in kv:
        cfg.p_grid = _floats(kv["norms.p"])
    if "norms.q" in kv:
        cfg.q_grid = [float("inf") if v.strip() == "inf" else float(v)
                      for v in kv["norms.q"].split(",")]
    if "sweep.depths" in kv:
        cfg.depths = _ints(kv["sweep.depths"])
    if "sweep.seeds" in kv:
        cfg.seeds = _ints(kv["sweep.seeds"])
    if "out.dir" in kv:
        cfg.out_dir = kv["out.dir"]
    for p in cfg.p_grid:
        if p <= 0:
            raise ConfigError("norms.p", f"p={p} outside (0, inf)")
    return cfg


def build_space_from_spec(spec: dict, depth: int | None = None) -> FiniteSpace:
    """Instantiate the space; `depth` overrides the refinement parameter
    (points_per_side = 2**depth for grids, depth for cantor)."""
    kind = spec.get("kind")
    try:
        if kind == "euclidean-grid":
            pps = 2 ** depth if depth is not None else int(spec.get("points_per_side", 16))
            dim = int(spec.get("dim", 1))
            spacing = float(spec.get("spacing", 1.0 / pps))
            return euclidean_grid(dim, pps, spacing)
        if kind == "bessel-grid":
            pps = 2 ** depth if depth is not None else int(spec.get("points_per_side", 16))
            n = int(spec.get("n", 1))
            lam = _floats(spec.get("lambda", "1.0")) if isinstance(
                spec.get("lambda"), str) else spec.get("lambda", [1.0])
            return bessel_grid(n, lam, pps)
        if kind == "cantor":
            d = depth if depth is not None else int(spec.get("depth", 5))
            return cantor_space(int(spec.get("branching", 2)),
                                float(spec.get("delta", 1 / 3)), d)
        if kind == "four-squares":
            pps = 2 ** depth if depth is not None else int(spec.get("points_per_side", 4))
            return four_squares(pps)
    except (ValidationError, ValueError) as exc:
        raise ConfigError(f"space.{kind}", str(exc)) from exc
    raise ConfigError("space.kind", f"unknown generator {kind!r}")


def make_symbol(cfg: ExperimentConfig, space: FiniteSpace, basis,
                seed: int | None = None) -> np.ndarray:
    """Symbol b per the configured generator."""
    rng = np.random.default_rng(cfg.symbol_seed if seed is None else seed)
    n = space.n
    if cfg.symbol_kind == "random-haar-mixture":
        # random cancellative Haar mixture with scale-decaying coefficients:
        # probes oscillation profiles across levels
        coeffs = rng.normal(size=basis.n_haar)
        for t in range(basis.n_haar):
            k, _ = basis.node_of[t]
            coeffs[t] *= 2.0 ** (-0.5 * k)
        from .haar import from_frame

        return from_frame(space, basis.frame @ coeffs)
    if cfg.symbol_kind == "coordinate":
        if space.coords is None:
            raise ConfigError("symbol.kind", "coordinate symbol needs coordinates")
        return space.coords[:, 0].copy()
    if cfg.symbol_kind == "piecewise-constant":
        parts = rng.integers(0, 2, size=n).astype(float)
        return parts
    if cfg.symbol_kind == "bump":
        if space.coords is None:
            raise ConfigError("symbol.kind", "bump symbol needs coordinates")
        c = space.coords.mean(axis=0)
        r2 = ((space.coords - c) ** 2).sum(axis=1)
        scale = max(r2.max(), 1e-300)
        return np.exp(-4.0 * r2 / scale)
    if cfg.symbol_kind == "custom-csv":
        if not cfg.symbol_csv:
            raise ConfigError("symbol.csv", "missing path for custom symbol")
        vals = np.loadtxt(cfg.symbol_csv, delimiter=",")
        if vals.size != n:
            raise ConfigError("symbol.csv", f"expected {n} values, got {vals.size}")
        return vals.astype(float)
    raise ConfigError("symbol.kind", f"unknown symbol generator {cfg.symbol_kind!r}")


def make_weight_values(cfg: ExperimentConfig, space: FiniteSpace) -> np.ndarray | None:
    if cfg.weight_kind in ("none", ""):
        return None
    if cfg.weight_kind == "ones":
        return np.ones(space.n)
    if cfg.weight_kind == "power":
        if space.coords is None:
            raise ConfigError("weight.kind", "power weight needs coordinates")
        r = np.sqrt((space.coords**2).sum(axis=1))
        if np.any(r == 0):
            raise ConfigError("weight.kind", "power weight undefined at the origin")
        return r**cfg.weight_exponent
    raise ConfigError("weight.kind", f"unknown weight {cfg.weight_kind!r}")
