"""Finite quasi-metric measure spaces: generators, ball volumes, dimensions, weights.

All spaces are finite point sets with a symmetric quasi-metric matrix and
strictly positive point masses.  Balls are closed throughout: B(x, r) is the
set of points at distance <= r from x, and V(x, y) is the mass of the closed
ball of radius dist(x, y) around x (so V(x, x) = mass(x)).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """Malformed inputs: bad shapes, out-of-range parameters, broken invariants."""


class ParameterDomainError(ValueError):
    """Generator parameters outside their mathematical domain (e.g. lambda <= -1/2)."""


# Triple checks are exhaustive up to this size, sampled above it.
_EXHAUSTIVE_TRIANGLE_LIMIT = 500


@dataclass(frozen=True)
class FiniteSpace:
    """Finite quasi-metric measure space.

    dist: (n, n) symmetric, nonnegative, zero exactly on the diagonal.
    mass: (n,) strictly positive point masses.
    a0:   quasi-triangle constant, dist(i,k) <= a0*(dist(i,j)+dist(j,k)).
    coords: optional (n, d) point coordinates (generator labels).
    meta: generator provenance (kind, parameters); informational only.
    """

    dist: np.ndarray
    mass: np.ndarray
    a0: float
    coords: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    @property
    def min_gap(self) -> float:
        """Smallest positive pairwise distance (inf for a single point)."""
        if self.n < 2:
            return float("inf")
        off = self.dist[~np.eye(self.n, dtype=bool)]
        return float(off.min())

    def validate(self, rng: np.random.Generator | None = None) -> None:
        d, m = self.dist, self.mass
        n = self.n
        if d.shape != (n, n) or m.shape != (n,):
            raise ValidationError("dist must be (n, n) and mass (n,)")
        if not np.all(np.isfinite(d)) or not np.all(np.isfinite(m)):
            raise ValidationError("non-finite distance or mass")
        if not np.allclose(d, d.T, atol=0.0):
            raise ValidationError("distance matrix not symmetric")
        if np.any(np.diag(d) != 0.0):
            raise ValidationError("nonzero diagonal in distance matrix")
        if n > 1:
            off = d[~np.eye(n, dtype=bool)]
            if np.any(off <= 0.0):
                raise ValidationError("zero distance between distinct points")
        if np.any(m <= 0.0):
            raise ValidationError("nonpositive mass")
        if self.a0 < 1.0:
            raise ValidationError("quasi-triangle constant must be >= 1")
        self._check_triangle(rng)

    def _check_triangle(self, rng: np.random.Generator | None) -> None:
        d, n, a0 = self.dist, self.n, self.a0 * (1.0 + 1e-12)
        if n <= _EXHAUSTIVE_TRIANGLE_LIMIT:
            # d(i,k) <= a0*(d(i,j)+d(j,k)) for all triples, vectorised over (i,k).
            for j in range(n):
                bound = a0 * (d[:, j][:, None] + d[j, :][None, :])
                if np.any(d > bound + 1e-15):
                    i, k = np.unravel_index(np.argmax(d - bound), d.shape)
                    raise ValidationError(
                        f"quasi-triangle violated at ({i},{j},{k}): "
                        f"{d[i, k]} > {a0} * {d[i, j] + d[j, k]}"
                    )
        else:
            rng = rng or np.random.default_rng(0)
            idx = rng.integers(0, n, size=(20000, 3))
            i, j, k = idx[:, 0], idx[:, 1], idx[:, 2]
            if np.any(d[i, k] > a0 * (d[i, j] + d[j, k]) + 1e-15):
                raise ValidationError("quasi-triangle violated (sampled)")


@dataclass
class Weight:
    """Positive weight w on a space, with its Muckenhoupt A2 constant cached."""

    values: np.ndarray
    a2: float

    def inverse(self, space: FiniteSpace) -> "Weight":
        return make_weight(space, 1.0 / self.values)


@dataclass
class DimensionEstimate:
    d_lower: float
    d_upper: float
    d_sep: float
    fit_residuals: dict

    def ordering_holds(self, tol: float | None = None) -> bool:
        if tol is None:
            tol = self.fit_residuals.get("ordering_tol", 0.0)
        return (self.d_lower <= self.d_sep + tol) and (self.d_sep <= self.d_upper + tol)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _grid_coords(dim: int, points_per_side: int, spacing: float) -> np.ndarray:
    """Cell centres of [0, pps*spacing)^dim: (k + 1/2) * spacing per axis."""
    axes = [(np.arange(points_per_side) + 0.5) * spacing for _ in range(dim)]
    pts = np.array(list(itertools.product(*axes)), dtype=float)
    return pts


def _euclidean_dist(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def euclidean_grid(dim: int, points_per_side: int, spacing: float) -> FiniteSpace:
    """Uniform grid in [0, L)^dim with cell masses spacing**dim."""
    if spacing <= 0:
        raise ValidationError("spacing must be positive")
    if points_per_side < 1 or dim < 1:
        raise ValidationError("need at least one point per side and dim >= 1")
    coords = _grid_coords(dim, points_per_side, spacing)
    n = coords.shape[0]
    mass = np.full(n, spacing**dim)
    sp = FiniteSpace(_euclidean_dist(coords), mass, 1.0, coords,
                     {"generator": "euclidean-grid", "dim": dim,
                      "points_per_side": points_per_side, "spacing": spacing})
    sp.validate()
    return sp


def bessel_cell_mass(a: float, b: float, lam: float) -> float:
    """Exact integral of x^(2*lam) over [a, b]; the antiderivative is x^(2l+1)/(2l+1)."""
    e = 2.0 * lam + 1.0
    return (b**e - a**e) / e


def bessel_grid(n: int, lam, points_per_side: int, alpha=None) -> FiniteSpace:
    """Grid on [0,1]^n with exact cell masses of the measure prod x_i^(2*lam_i).

    Cell centres are the points; each coordinate mass is the exact
    antiderivative difference over the cell, so the total mass equals the
    closed-form integral prod 1/(2*lam_i + 1).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.shape != (n,):
        raise ValidationError(f"lambda vector must have length n={n}")
    if np.any(lam <= -0.5):
        raise ParameterDomainError("every lambda_i must exceed -1/2")
    if points_per_side < 1:
        raise ValidationError("points_per_side must be >= 1")
    if alpha is None:
        alpha = np.ones(n, dtype=int)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=int))
    h = 1.0 / points_per_side
    edges = np.arange(points_per_side + 1) * h
    centers = (edges[:-1] + edges[1:]) / 2.0
    axis_masses = [
        np.array([bessel_cell_mass(edges[i], edges[i + 1], l) for i in range(points_per_side)])
        for l in lam
    ]
    coords = np.array(list(itertools.product(*(centers for _ in range(n)))), dtype=float)
    mass = np.array([
        np.prod([axis_masses[ax][idx] for ax, idx in enumerate(m_idx)])
        for m_idx in itertools.product(*(range(points_per_side) for _ in range(n)))
    ])
    sp = FiniteSpace(_euclidean_dist(coords), mass, 1.0, coords,
                     {"generator": "bessel-grid", "n": n, "lambda": lam.tolist(),
                      "alpha": alpha.tolist(), "points_per_side": points_per_side})
    sp.validate()
    return sp


def cantor_space(branching: int, delta: float, depth: int) -> FiniteSpace:
    """Self-similar Cantor construction on [0, 1].

    Each surviving interval of generation k has length delta**k and spawns
    `branching` children at evenly spread offsets; points are the midpoints of
    the depth-`depth` intervals, each carrying uniform mass branching**-depth.
    For (2, 1/3) the empty gap between adjacent depth-k intervals is (1/3)**k.
    """
    if depth < 1:
        raise ValidationError("depth must be >= 1")
    if branching < 2:
        raise ValidationError("branching must be >= 2")
    if not (0.0 < delta < 1.0) or branching * delta > 1.0 + 1e-12:
        raise ValidationError("need 0 < delta < 1 with branching*delta <= 1")
    lefts = np.array([0.0])
    length = 1.0
    for _ in range(depth):
        child_len = length * delta
        offsets = (
            np.arange(branching) * (length - child_len) / (branching - 1)
            if branching > 1 else np.array([0.0])
        )
        lefts = (lefts[:, None] + offsets[None, :]).ravel()
        length = child_len
    coords = (lefts + length / 2.0)[:, None]
    npts = coords.shape[0]
    mass = np.full(npts, 1.0 / npts)
    sp = FiniteSpace(_euclidean_dist(coords), mass, 1.0, coords,
                     {"generator": "cantor", "branching": branching,
                      "delta": delta, "depth": depth, "interval_length": length})
    sp.validate()
    return sp


def four_squares(points_per_side: int) -> FiniteSpace:
    """Four separated unit squares [0,1]^2 + v, v in {0,3}^2, uniform cell masses."""
    if points_per_side < 1:
        raise ValidationError("points_per_side must be >= 1")
    h = 1.0 / points_per_side
    base = _grid_coords(2, points_per_side, h)
    offsets = [np.array(v, dtype=float) for v in itertools.product((0.0, 3.0), repeat=2)]
    coords = np.vstack([base + off[None, :] for off in offsets])
    quadrant = np.repeat(np.arange(4), base.shape[0])
    mass = np.full(coords.shape[0], h * h)
    sp = FiniteSpace(_euclidean_dist(coords), mass, 1.0, coords,
                     {"generator": "four-squares", "points_per_side": points_per_side,
                      "quadrant": quadrant.tolist()})
    sp.validate()
    return sp


_GENERATORS = {
    "euclidean-grid": lambda p: euclidean_grid(int(p["dim"]), int(p["points_per_side"]),
                                               float(p["spacing"])),
    "bessel-grid": lambda p: bessel_grid(int(p["n"]), p["lambda"], int(p["points_per_side"]),
                                         p.get("alpha")),
    "cantor": lambda p: cantor_space(int(p["branching"]), float(p["delta"]), int(p["depth"])),
    "four-squares": lambda p: four_squares(int(p["points_per_side"])),
}


def build_space(spec: dict) -> FiniteSpace:
    """Construct a space from a generator spec {'kind': ..., parameters...}."""
    kind = spec.get("kind")
    if kind not in _GENERATORS:
        raise ValidationError(f"unknown generator kind: {kind!r}")
    return _GENERATORS[kind](spec)


# ---------------------------------------------------------------------------
# ball volumes
# ---------------------------------------------------------------------------


def ball_volume(space: FiniteSpace, center: int, radius: float) -> float:
    """Mass of the closed ball B(center, radius)."""
    if radius < 0:
        raise ValidationError("radius must be >= 0")
    return float(space.mass[space.dist[center] <= radius].sum())


def ball_volume_profile(space: FiniteSpace, center: int):
    """Sorted radii and cumulative ball masses from one centre.

    Returns (radii, volumes) with volumes[i] = V(center, radii[i]); radii are
    the realised distances, so V is the right-continuous step profile.
    """
    order = np.argsort(space.dist[center], kind="stable")
    radii = space.dist[center][order]
    volumes = np.cumsum(space.mass[order])
    return radii, volumes


def ball_volume_matrix(space: FiniteSpace) -> np.ndarray:
    """V[i, j] = mass of the closed ball B(x_i, dist(i, j)); V[i, i] = mass(i)."""
    n = space.n
    V = np.empty((n, n))
    for i in range(n):
        order = np.argsort(space.dist[i], kind="stable")
        cum = np.cumsum(space.mass[order])
        radii = space.dist[i][order]
        # right-continuous: include all points at distance exactly d(i, j)
        V[i] = cum[np.searchsorted(radii, space.dist[i], side="right") - 1]
    return V


# ---------------------------------------------------------------------------
# dimensions
# ---------------------------------------------------------------------------


def _greedy_separated_count(dist_sub: np.ndarray, r: float) -> int:
    """Size of a greedily built maximal r-separated subset (pairwise dist >= r)."""
    m = dist_sub.shape[0]
    chosen: list[int] = []
    for i in range(m):
        if all(dist_sub[i, j] >= r for j in chosen):
            chosen.append(i)
    return len(chosen)


def estimate_dimensions(
    space: FiniteSpace,
    r_min: float | None = None,
    r_max: float | None = None,
    num_scales: int = 6,
    ladder_ratio: float = 2.0,
    lower_percentile: float = 50.0,
    upper_percentile: float = 95.0,
    max_centers: int = 256,
    seed: int = 0,
) -> DimensionEstimate:
    """Fit lower/upper volume dimensions and the separation dimension.

    Scale ladder: r_j = r_max / ladder_ratio**j, j = 0..num_scales-1, which
    must lie inside [min positive distance, diameter].  For every ladder pair
    (r, R), percentile envelopes over centres of log V(x,R)/V(x,r) are fitted
    (with intercept, so implied constants separate from exponents) against
    log(R/r): the lower envelope gives d, the upper gives D, and upper
    envelopes of greedy counts of r-separated points inside B(x,R) give the
    separation dimension.  Percentile trimming suppresses boundary and
    quantisation outliers (the exact inf over centres of a bounded space is
    genuinely depressed at realisable scale ratios, so the lower envelope
    defaults to the median); upper_percentile=100 keeps the exact sup, needed
    when the extreme growth is concentrated (e.g. on the Bessel axis).
    """
    if space.n < 2:
        raise ValidationError("dimension estimate needs at least two points")
    r_max = space.diameter / 2.0 if r_max is None else r_max
    r_min = max(space.min_gap, r_max / ladder_ratio ** (num_scales - 1)) if r_min is None else r_min
    if not (space.min_gap * (1 - 1e-12) <= r_min <= r_max <= space.diameter * (1 + 1e-12)):
        raise ValidationError("scale range must lie within [min gap, diameter]")
    ladder = np.array([r_max / ladder_ratio**j for j in range(num_scales)])
    ladder = ladder[ladder >= r_min * (1 - 1e-12)]
    if len(ladder) < 2:
        raise ValidationError("degenerate scale range: need at least two scales")

    rng = np.random.default_rng(seed)
    centers = np.arange(space.n)
    if space.n > max_centers:
        centers = np.sort(rng.choice(space.n, size=max_centers, replace=False))

    vol = np.array([[ball_volume(space, int(c), r) for r in ladder] for c in centers])
    xs, lo_ys, hi_ys, sep_ys = [], [], [], []
    for jR in range(len(ladder)):
        counts_cache = {}
        for jr in range(jR + 1, len(ladder)):
            R, r = ladder[jR], ladder[jr]
            ratios = np.log(vol[:, jR] / vol[:, jr])
            xs.append(np.log(R / r))
            lo_ys.append(np.percentile(ratios, lower_percentile))
            hi_ys.append(np.percentile(ratios, upper_percentile))
            counts = []
            for c in centers:
                c = int(c)
                if c not in counts_cache:
                    inside = np.where(space.dist[c] <= R)[0]
                    counts_cache[c] = space.dist[np.ix_(inside, inside)]
                counts.append(_greedy_separated_count(counts_cache[c], r))
            sep_ys.append(np.log(np.percentile(counts, upper_percentile)))

    xs = np.array(xs)
    A = np.vstack([xs, np.ones_like(xs)]).T

    def _fit(ys):
        coef, res, _, _ = np.linalg.lstsq(A, np.array(ys), rcond=None)
        return float(coef[0]), (float(res[0]) if res.size else 0.0)

    d_lower, res_lo = _fit(lo_ys)
    d_upper, res_hi = _fit(hi_ys)
    d_sep, res_sep = _fit(sep_ys)
    return DimensionEstimate(
        d_lower, d_upper, d_sep,
        {"lower": res_lo, "upper": res_hi, "sep": res_sep,
         "ladder": ladder.tolist(), "num_pairs": len(xs), "num_centers": len(centers),
         "ordering_tol": 0.15},
    )


# ---------------------------------------------------------------------------
# Muckenhoupt weights
# ---------------------------------------------------------------------------


def a2_constant(space: FiniteSpace, values: np.ndarray) -> float:
    """Exact sup over all realisable closed balls of avg(w) * avg(1/w).

    On a finite space the distinct balls around centre i are the prefixes of
    the distance-sorted point list, so the supremum is exact.
    """
    w = np.asarray(values, dtype=float)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValidationError("weight values must be positive and finite")
    best = 1.0
    for i in range(space.n):
        order = np.argsort(space.dist[i], kind="stable")
        radii = space.dist[i][order]
        mu = np.cumsum(space.mass[order])
        wm = np.cumsum((space.mass * w)[order])
        sm = np.cumsum((space.mass / w)[order])
        # distinct ball = last index of each run of equal radii
        last = np.nonzero(np.diff(radii, append=np.inf) > 0)[0]
        prod = (wm[last] / mu[last]) * (sm[last] / mu[last])
        best = max(best, float(prod.max()))
    return best


def make_weight(space: FiniteSpace, values: np.ndarray) -> Weight:
    values = np.asarray(values, dtype=float)
    return Weight(values, a2_constant(space, values))


def power_weight(space: FiniteSpace, a: float) -> Weight:
    """|x|^a built from the space's coordinates."""
    if space.coords is None:
        raise ValidationError("power weight needs coordinates")
    r = np.sqrt((space.coords**2).sum(axis=1))
    if np.any(r == 0):
        raise ValidationError("power weight undefined at the origin")
    return make_weight(space, r**a)


# ---------------------------------------------------------------------------
# weak-L1 norm of 1/V(x, .)
# ---------------------------------------------------------------------------


def weak_L1_V_inverse(space: FiniteSpace, x: int) -> float:
    """ell^{1,inf}(mu) quasinorm of y -> 1/V(x, y) over y != x; always <= 1."""
    if space.n < 2:
        return 0.0
    others = np.array([j for j in range(space.n) if j != x])
    V = np.array([ball_volume(space, x, space.dist[x, j]) for j in others])
    f = 1.0 / V
    order = np.argsort(-f, kind="stable")
    f_sorted = f[order]
    mu_cum = np.cumsum(space.mass[others][order])
    # sup_t t * mu{f > t} is attained approaching each value from below,
    # i.e. at t -> f_(i)^- where mu{f >= f_(i)} = mu_cum of the tied block.
    best = 0.0
    i = 0
    m = len(f_sorted)
    while i < m:
        j = i
        while j + 1 < m and f_sorted[j + 1] == f_sorted[i]:
            j += 1
        best = max(best, f_sorted[i] * mu_cum[j])
        i = j + 1
    return float(best)
