"""Dyadic cube systems on finite spaces, random variants, and the Carleson transform.

A system is a ladder of partitions of the point set: level 0 is the single
root cube (all of X), the last level is singletons, and each level refines
the previous one.  Cubes are identified by (level, index); the same point set
may occur at several consecutive levels, so set-level structure (strict
parents, k_min/k_max) is tracked separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .space import FiniteSpace, ValidationError


class ConstructionError(RuntimeError):
    """A constructed system violates a partition/nesting/sandwich invariant."""


@dataclass
class DyadicSystem:
    space: FiniteSpace
    delta: float
    point_cube: np.ndarray  # (levels, n) cube index of each point per level
    centers: list[np.ndarray]  # per level, centre point index per cube
    scales: np.ndarray  # reference scale per level, ref * delta**k
    c0: float = 0.0
    C0: float = 0.0
    meta: dict = field(default_factory=dict)

    # set-level structure, filled by _finalize
    cubes: list[list[np.ndarray]] = field(default_factory=list)
    parent: list[np.ndarray] = field(default_factory=list)
    set_id: list[np.ndarray] = field(default_factory=list)  # per level, distinct-set id per cube
    set_kmin: np.ndarray | None = None
    set_kmax: np.ndarray | None = None
    set_mass: np.ndarray | None = None
    strict_parent: np.ndarray | None = None  # per set id, parent set id (-1 for root)
    strict_constant: float = 0.0  # realized strict-parent mass growth factor, > 1

    @property
    def levels(self) -> int:
        return self.point_cube.shape[0]

    def n_cubes(self, k: int) -> int:
        return len(self.centers[k])

    def cube_points(self, k: int, idx: int) -> np.ndarray:
        return self.cubes[k][idx]

    def cube_mass(self, k: int, idx: int) -> float:
        return float(self.space.mass[self.cubes[k][idx]].sum())

    def cube_of_point(self, k: int, point: int) -> int:
        return int(self.point_cube[k, point])

    def children(self, k: int, idx: int) -> np.ndarray:
        """Indices at level k+1 of the children of cube (k, idx)."""
        return np.where(self.parent[k + 1] == idx)[0]

    def ancestor(self, k: int, idx: int, m: int) -> tuple[int, int]:
        """The cube (k - m, .) containing cube (k, idx); clamps at the root."""
        k2 = max(k - m, 0)
        return k2, int(self.point_cube[k2, self.cubes[k][idx][0]])

    def descendants(self, k: int, idx: int, i: int) -> np.ndarray:
        """Cube indices at level k+i contained in cube (k, idx)."""
        ki = min(k + i, self.levels - 1)
        return np.unique(self.point_cube[ki, self.cubes[k][idx]])

    def nodes(self):
        """All (level, cube-index) pairs."""
        for k in range(self.levels):
            for idx in range(self.n_cubes(k)):
                yield (k, idx)


def _finalize(system: DyadicSystem) -> DyadicSystem:
    """Derive cube arrays, parents, set-level structure; verify invariants."""
    space, pc = system.space, system.point_cube
    levels, n = pc.shape
    cubes: list[list[np.ndarray]] = []
    parent: list[np.ndarray] = []
    for k in range(levels):
        n_k = int(pc[k].max()) + 1
        cubes.append([np.where(pc[k] == i)[0] for i in range(n_k)])
        for i, pts in enumerate(cubes[k]):
            if pts.size == 0:
                raise ConstructionError(f"empty cube at level {k}, index {i}")
        if k == 0:
            parent.append(np.full(n_k, -1, dtype=int))
        else:
            par = np.empty(n_k, dtype=int)
            for i, pts in enumerate(cubes[k]):
                ups = np.unique(pc[k - 1][pts])
                if ups.size != 1:
                    raise ConstructionError(
                        f"cube (level {k}, index {i}) not contained in a single parent")
                par[i] = ups[0]
            parent.append(par)
    if len(cubes[0]) != 1:
        raise ConstructionError("top level must be a single cube")
    if any(len(pts) != 1 for pts in cubes[-1]):
        raise ConstructionError("bottom level must be all singletons")

    # distinct sets and k_min/k_max
    key_to_id: dict[bytes, int] = {}
    set_id: list[np.ndarray] = []
    kmin: list[int] = []
    kmax: list[int] = []
    smass: list[float] = []
    for k in range(levels):
        ids = np.empty(len(cubes[k]), dtype=int)
        for i, pts in enumerate(cubes[k]):
            key = pts.tobytes()
            if key not in key_to_id:
                key_to_id[key] = len(kmin)
                kmin.append(k)
                kmax.append(k)
                smass.append(float(space.mass[pts].sum()))
            sid = key_to_id[key]
            kmax[sid] = k
            ids[i] = sid
        set_id.append(ids)
    n_sets = len(kmin)
    kmin_arr, kmax_arr = np.array(kmin), np.array(kmax)
    mass_arr = np.array(smass)

    # strict parent: first ancestor (by level from k_min) with a different point set
    strict = np.full(n_sets, -1, dtype=int)
    for sid in range(n_sets):
        k = kmin_arr[sid]
        if k == 0:
            continue
        idx = None
        for i, s in enumerate(set_id[k]):
            if s == sid:
                idx = i
                break
        kk, ii = k, idx
        while kk > 0:
            ii = int(parent[kk][ii])
            kk -= 1
            if set_id[kk][ii] != sid:
                strict[sid] = int(set_id[kk][ii])
                break
    ratios = [mass_arr[strict[s]] / mass_arr[s] for s in range(n_sets) if strict[s] >= 0]
    system.strict_constant = float(min(ratios)) if ratios else float("inf")

    # realized ball sandwich constants
    c0, C0 = float("inf"), 0.0
    for k in range(levels):
        for i, pts in enumerate(cubes[k]):
            z = int(system.centers[k][i])
            d = space.dist[z]
            C0 = max(C0, float(d[pts].max()) / system.scales[k])
            outside = np.setdiff1d(np.arange(n), pts, assume_unique=False)
            if outside.size:
                c0 = min(c0, float(d[outside].min()) / system.scales[k])
    system.c0 = 0.0 if not np.isfinite(c0) else c0 * (1.0 - 1e-12)
    system.C0 = max(C0, 1e-12)
    if system.c0 <= 0.0 and n > 1:
        raise ConstructionError("ball sandwich failed: some centre touches a foreign point")

    system.cubes = cubes
    system.parent = parent
    system.set_id = set_id
    system.set_kmin = kmin_arr
    system.set_kmax = kmax_arr
    system.set_mass = mass_arr
    system.strict_parent = strict
    return system


# ---------------------------------------------------------------------------
# construction strategies
# ---------------------------------------------------------------------------


def _grid_alignment(space: FiniteSpace, delta: float):
    """(unit u, top exponent M, span, lo): cell sides are u * (1/delta)**j."""
    coords = space.coords
    lo = coords.min(axis=0)
    span = float(max((coords.max(axis=0) - lo).max(), space.min_gap))
    u = delta ** round(np.log(space.min_gap) / np.log(delta))
    m_top = int(np.ceil(np.log(2.0 * span * 1.0001 / u) / np.log(1.0 / delta)))
    return u, m_top, span, lo


def _coordinate_levels(space: FiniteSpace, delta: float, shift: np.ndarray):
    """delta-adic cells anchored at the bounding-box corner minus `shift`.

    Cell sides are powers of 1/delta times the atomic unit
    u = delta**round(log_delta(min gap)), so aligned grids (unit spacing,
    delta = 1/2) split along the standard dyadic cells.  Duplicate whole-space
    top levels are trimmed so level 0 is the coarsest proper root.
    """
    coords = space.coords
    n, _ = coords.shape
    u, m_top, span, lo = _grid_alignment(space, delta)
    # enlarge the top cell until it covers the shifted bounding box
    need = 1.0001 * (span + float(shift.max(initial=0.0)))
    while u * (1.0 / delta) ** m_top < need:
        m_top += 1
    anchor = lo - shift
    levels, scales = [], []
    side = u * (1.0 / delta) ** m_top
    while True:
        cell = np.floor((coords - anchor) / side + 1e-12).astype(int)
        _, labels = np.unique(cell, axis=0, return_inverse=True)
        levels.append(labels)
        scales.append(side)
        if np.bincount(labels).max() == 1:
            break
        if side < space.min_gap * 1e-9:
            raise ConstructionError("coordinate splitting failed to separate points")
        side *= delta
    # trim duplicate whole-space roots: keep the finest level that is one cube
    first = 0
    while first + 1 < len(levels) and levels[first + 1].max() == 0:
        first += 1
    return np.array(levels[first:]), np.array(scales[first:])


def _net_levels(space: FiniteSpace, delta: float, order: np.ndarray,
                rng: np.random.Generator | None):
    """Greedy farthest-point nets per level; parent = nearest coarser net point.

    `order` seeds the farthest-point traversal; if `rng` is given, parents are
    drawn uniformly among coarser net points within the covering radius.
    """
    d = space.dist
    n = d.shape[0]
    diam = space.diameter
    scales = [diam / delta]
    nets = [np.array([order[0]])]
    while True:
        s = scales[-1] * delta
        scales.append(s)
        prev = nets[-1]
        chosen = list(prev)  # nested nets: coarser net points stay
        mind = d[:, chosen].min(axis=1)
        while True:
            cand = int(np.argmax(mind))
            if mind[cand] <= s:
                break
            chosen.append(cand)
            mind = np.minimum(mind, d[:, cand])
        nets.append(np.array(chosen))
        if len(chosen) == n:
            break
    levels = np.empty((len(nets), n), dtype=int)
    centers = []
    # assign points to nearest finest net point, then propagate membership up
    # through net-point parent links
    parent_of_net: list[np.ndarray] = []
    for k in range(len(nets)):
        if k == 0:
            parent_of_net.append(np.full(len(nets[0]), -1, dtype=int))
            continue
        par = np.empty(len(nets[k]), dtype=int)
        for j, p in enumerate(nets[k]):
            dd = d[p, nets[k - 1]]
            if rng is None or dd.min() == 0.0:
                # a net point persisting to the coarser level must chain to
                # itself; randomising its parent would orphan its own cube
                par[j] = int(np.argmin(dd))
            else:
                radius = dd.min() * (1.0 + 1e-12)
                admissible = np.where(dd <= max(radius, scales[k - 1]))[0]
                par[j] = int(rng.choice(admissible))
        parent_of_net.append(par)
    # membership at the finest level: nearest net point (all points are net points)
    pos = {int(p): j for j, p in enumerate(nets[-1])}
    memb = np.array([pos[i] for i in range(n)])
    levels[-1] = memb
    for k in range(len(nets) - 2, -1, -1):
        memb = parent_of_net[k + 1][memb]
        levels[k] = memb
    for k in range(len(nets)):
        centers.append(nets[k].copy())
    return levels, np.array(scales), centers


def _centers_for_coordinate(space: FiniteSpace, levels: np.ndarray) -> list[np.ndarray]:
    """Centre of a cell cube = member point closest to the member centroid."""
    out = []
    for k in range(levels.shape[0]):
        n_k = int(levels[k].max()) + 1
        cents = np.empty(n_k, dtype=int)
        for i in range(n_k):
            pts = np.where(levels[k] == i)[0]
            mid = space.coords[pts].mean(axis=0)
            offs = np.sqrt(((space.coords[pts] - mid) ** 2).sum(axis=1))
            cents[i] = int(pts[np.argmin(offs)])
        out.append(cents)
    return out


def build_dyadic_system(space: FiniteSpace, delta: float, seed: int = 0,
                        strategy: str | None = None) -> DyadicSystem:
    """Deterministic dyadic system.

    Spaces with coordinates use anchored delta-adic cells (reproducing the
    standard dyadic cubes on aligned grids with delta = 1/2); label-free
    spaces use greedy farthest-point nets seeded at `seed`-keyed order.
    """
    if not (0.0 < delta < 1.0):
        raise ValidationError("delta must lie in (0, 1)")
    if space.n < 1:
        raise ValidationError("space must be nonempty")
    if strategy is None:
        strategy = "coordinate" if space.coords is not None else "net"
    if space.n == 1:
        levels = np.zeros((1, 1), dtype=int)
        system = DyadicSystem(space, delta, levels, [np.array([0])],
                              np.array([1.0]), meta={"strategy": "trivial", "seed": seed})
        return _finalize(system)
    if strategy == "coordinate":
        levels, scales = _coordinate_levels(space, delta, np.zeros(space.coords.shape[1]))
        centers = _centers_for_coordinate(space, levels)
    elif strategy == "net":
        order = np.arange(space.n)
        if seed:
            order = np.random.default_rng(seed).permutation(space.n)
        levels, scales, centers = _net_levels(space, delta, order, None)
    else:
        raise ValidationError(f"unknown strategy {strategy!r}")
    system = DyadicSystem(space, delta, levels, centers, scales,
                          meta={"strategy": strategy, "seed": seed})
    return _finalize(system)


def random_dyadic_system(space: FiniteSpace, delta: float,
                         omega: int | np.random.Generator,
                         strategy: str | None = None) -> DyadicSystem:
    """Random dyadic system: uniform grid translation for coordinate spaces,
    random net order and random admissible parents otherwise."""
    if not (0.0 < delta < 1.0):
        raise ValidationError("delta must lie in (0, 1)")
    rng = omega if isinstance(omega, np.random.Generator) else np.random.default_rng(omega)
    if strategy is None:
        strategy = "coordinate" if space.coords is not None else "net"
    if space.n == 1:
        return build_dyadic_system(space, delta)
    if strategy == "coordinate":
        # shift uniform over one whole top-cell period: for integer 1/delta it
        # is then exactly uniform modulo every cell side, making boundary
        # offsets uniform over the admissible configurations
        u, m_top, _, _ = _grid_alignment(space, delta)
        period = u * (1.0 / delta) ** m_top
        shift = rng.uniform(0.0, period, size=space.coords.shape[1])
        levels, scales = _coordinate_levels(space, delta, shift)
        centers = _centers_for_coordinate(space, levels)
        meta = {"strategy": "coordinate", "shift": shift.tolist()}
    else:
        order = rng.permutation(space.n)
        levels, scales, centers = _net_levels(space, delta, order, rng)
        meta = {"strategy": "net-random"}
    system = DyadicSystem(space, delta, levels, centers, scales, meta=meta)
    return _finalize(system)


# ---------------------------------------------------------------------------
# ancestor probabilities (Monte Carlo over random systems)
# ---------------------------------------------------------------------------


def ancestor_probability(space: FiniteSpace, delta: float,
                         P: tuple[int, int], Q: tuple[int, int],
                         m: int, trials: int = 1000, seed: int = 0) -> dict:
    """Monte Carlo estimate of pi_m = Prob(P and Q share their m-th ancestor).

    Cube specs are (level, anchor point index): in each random draw, P is the
    cube of that level containing the anchor.  Returns the estimate and its
    binomial standard error.
    """
    (kP, iP), (kQ, iQ) = P, Q
    if kP != kQ:
        raise ValidationError("cube specs must be at the same level")
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    for _ in range(trials):
        sys_w = random_dyadic_system(space, delta, rng)
        k = min(kP, sys_w.levels - 1)
        ka = max(k - m, 0)
        if sys_w.point_cube[ka, iP] == sys_w.point_cube[ka, iQ]:
            hits += 1
        done += 1
    p = hits / done
    stderr = float(np.sqrt(max(p * (1 - p), 1e-12) / done))
    return {"estimate": p, "stderr": stderr, "trials": done, "m": m}


def calibrate_m0(space: FiniteSpace, delta: float, eps0: float = 0.25,
                 trials: int = 200, seed: int = 0, m_cap: int = 12,
                 margin: float = 0.05) -> dict:
    """Smallest m0 such that all sampled same-level pairs within distance
    eps0 * delta**(-m) * ell(P) share their m-th ancestor with empirical
    probability >= 1/2 - margin."""
    ref = build_dyadic_system(space, delta)
    rng = np.random.default_rng(seed)
    check_levels = range(max(1, ref.levels - 4), ref.levels - 1)
    for m0 in range(1, m_cap + 1):
        ok = True
        for k in check_levels:
            ell = ref.scales[k]
            thresh = eps0 * delta ** (-m0) * ell
            close = np.argwhere(
                (space.dist <= thresh) & (space.dist > 0)
            )
            if close.size == 0:
                continue
            pairs = close[rng.choice(close.shape[0], size=min(3, close.shape[0]),
                                     replace=False)]
            for i, j in pairs:
                est = ancestor_probability(space, delta, (k, int(i)), (k, int(j)),
                                           m0, trials, seed=int(rng.integers(1 << 31)))
                if est["estimate"] < 0.5 - margin - 3 * est["stderr"]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return {"m0": m0, "eps0": eps0, "trials": trials}
    return {"m0": m_cap, "eps0": eps0, "trials": trials, "capped": True}


# ---------------------------------------------------------------------------
# Carleson sequence transform
# ---------------------------------------------------------------------------

CubeSequence = dict  # {(level, cube_index): value}, finitely supported


def carleson_transform(system: DyadicSystem, lam: CubeSequence) -> CubeSequence:
    """Car lam(P) = mu(P)^-1 sum over descendant nodes (Q,k') of |lam_Q| mu(Q).

    One bottom-up tree pass; descendants include P itself and run over
    (cube, level) nodes.
    """
    levels = system.levels
    acc = [np.zeros(system.n_cubes(k)) for k in range(levels)]
    for (k, idx), v in lam.items():
        if not (0 <= k < levels) or not (0 <= idx < system.n_cubes(k)):
            raise ValidationError(f"cube ({k}, {idx}) outside system")
        acc[k][idx] += abs(v) * system.cube_mass(k, idx)
    for k in range(levels - 1, 0, -1):
        np.add.at(acc[k - 1], system.parent[k], acc[k])
    out: CubeSequence = {}
    for k in range(levels):
        for idx in range(system.n_cubes(k)):
            out[(k, idx)] = acc[k][idx] / system.cube_mass(k, idx)
    return out


def carleson_operator_norm_probe(system: DyadicSystem, p: float, q: float,
                                 samples: int = 200, seed: int = 0,
                                 support: int = 24) -> float:
    """Empirical sup over random sparse lam of |Car lam|_{p,q} / |lam|_{p,q}."""
    from .norms import lorentz_sequence_norm

    if p <= 0 or q <= 0:
        raise ValidationError("p and q must be positive")
    rng = np.random.default_rng(seed)
    nodes = [(k, i) for k in range(system.levels) for i in range(system.n_cubes(k))]
    best = 0.0
    for _ in range(samples):
        size = int(rng.integers(1, min(support, len(nodes)) + 1))
        picks = rng.choice(len(nodes), size=size, replace=False)
        lam = {nodes[t]: float(v) for t, v in zip(picks, rng.normal(size=size))}
        car = carleson_transform(system, lam)
        num = lorentz_sequence_norm(np.abs(np.array(list(car.values()))), p, q)
        den = lorentz_sequence_norm(np.abs(np.array(list(lam.values()))), p, q)
        if den > 0:
            best = max(best, num / den)
    return best
