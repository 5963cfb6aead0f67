"""Kernel matrices, commutators, weighted conjugation, and dyadic shifts.

Operators are dense matrices in the mass frame e_i = delta_i / sqrt(mass_i):
an integral operator Tf(x) = sum_y K(x,y) f(y) mass(y) has frame matrix
sqrt(mass_i) K(x_i, x_j) sqrt(mass_j).  The diagonal of singular kernels is
zero (principal-value convention).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicSystem
from .haar import HaarBasis
from .space import FiniteSpace, ValidationError, ball_volume_matrix


@dataclass
class OperatorMatrix:
    entries: np.ndarray
    frame: str = "L2(mu)"  # or "L2(w)"

    def __post_init__(self):
        if not np.all(np.isfinite(self.entries)):
            raise ValidationError("non-finite operator entries")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.entries)


@dataclass
class KernelSpec:
    family: str  # hilbert | riesz | beurling | power | four-squares
    eta: float = 1.0
    truncation: tuple[float, float] | None = None  # annulus (r_min, r_max)
    riesz_axis: int = 0

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValidationError("kernel regularity eta must lie in (0, 1]")


def _kernel_values(space: FiniteSpace, spec: KernelSpec) -> np.ndarray:
    coords = space.coords
    d = space.dist
    n = space.n
    off = ~np.eye(n, dtype=bool)
    d_safe = np.where(off, d, 1.0)
    if spec.family == "hilbert":
        if coords is None or coords.shape[1] != 1:
            raise ValidationError("hilbert kernel needs 1D coordinates")
        x = coords[:, 0]
        K = np.where(off, 1.0 / np.where(off, x[:, None] - x[None, :], 1.0), 0.0)
    elif spec.family == "riesz":
        if coords is None:
            raise ValidationError("riesz kernel needs coordinates")
        dim = coords.shape[1]
        j = spec.riesz_axis
        if not (0 <= j < dim):
            raise ValidationError("riesz axis outside coordinate dimension")
        K = np.where(off, (coords[:, j][:, None] - coords[:, j][None, :])
                     / d_safe ** (dim + 1), 0.0)
    elif spec.family == "beurling":
        if coords is None or coords.shape[1] != 2:
            raise ValidationError("beurling kernel needs 2D coordinates")
        z = coords[:, 0] + 1j * coords[:, 1]
        zdiff = np.where(off, z[:, None] - z[None, :], 1.0)
        K = np.where(off, 1.0 / zdiff**2, 0.0)
    elif spec.family == "power":
        # symmetrised volume kernel 1/sqrt(V(x,y) V(y,x)): comparable to 1/V
        # by doubling, but keeps genuine dependence on both arguments where
        # one-sided ball volumes saturate at the boundary
        V = ball_volume_matrix(space)
        Vs = np.sqrt(V * V.T)
        if spec.eta >= 1.0:
            K = np.where(off, 1.0 / Vs, 0.0)
        else:
            K = np.where(off, np.cos((d_safe / space.diameter) ** spec.eta) / Vs, 0.0)
    elif spec.family == "four-squares":
        if space.meta.get("generator") != "four-squares":
            raise ValidationError("four-squares kernel needs the four-squares space")
        z = coords[:, 0] + 1j * coords[:, 1]
        quad = np.array(space.meta["quadrant"])
        zdiff = np.where(off, z[:, None] - z[None, :], 1.0)
        K = np.where(off, 1.0 / zdiff**2, 0.0)
        # quadrants are indexed by offsets (0,0),(0,3),(3,0),(3,3); the kernel
        # couples each square with itself and with its diagonal opposite
        mask = (quad[:, None] == quad[None, :]) | (quad[:, None] == 3 - quad[None, :])
        K = K * mask
    else:
        raise ValidationError(f"unknown kernel family {spec.family!r}")
    if spec.truncation is not None:
        r0, r1 = spec.truncation
        K = K * ((d >= r0) & (d <= r1))
    return K


def assemble_kernel(space: FiniteSpace, spec: KernelSpec) -> OperatorMatrix:
    """T[i][j] = K(x_i, x_j) sqrt(mass_i mass_j) off the diagonal, zero on it."""
    K = _kernel_values(space, spec)
    sm = np.sqrt(space.mass)
    return OperatorMatrix(K * sm[:, None] * sm[None, :])


def measure_cz_constants(space: FiniteSpace, spec: KernelSpec) -> dict:
    """Realized size/smoothness constants of a kernel on this space.

    cz0 = sup |K(x,y)| V(x,y); cz1 = sup over triples with
    dist(x,x') <= dist(x,y)/4 of |K(x,y)-K(x',y)| V(x,y) / (dist(x,x')/dist(x,y))^eta,
    sampled over nearest-neighbour perturbations x'.
    """
    K = _kernel_values(space, spec)
    V = ball_volume_matrix(space)
    off = ~np.eye(space.n, dtype=bool)
    cz0 = float(np.max(np.abs(K[off]) * V[off]))
    d = space.dist
    cz1 = 0.0
    for x in range(space.n):
        order = np.argsort(d[x], kind="stable")
        xp = int(order[1]) if space.n > 1 else x
        s = d[x, xp]
        if s == 0:
            continue
        ys = np.where(d[x] > 4.0 * s)[0]
        if ys.size == 0:
            continue
        num = np.abs(K[x, ys] - K[xp, ys]) * V[x, ys]
        cz1 = max(cz1, float(np.max(num / (s / d[x, ys]) ** spec.eta)))
    return {"cz0": cz0, "cz1": cz1, "eta": spec.eta}


def measure_nondegeneracy(space: FiniteSpace, spec: KernelSpec,
                          num_scales: int = 5) -> float:
    """Realized non-degeneracy: min over (x, scale) of the best
    (|K(x,y)|+|K(y,x)|) V(x,y) among y with dist(x,y) in the dyadic scale band."""
    K = np.abs(_kernel_values(space, spec))
    V = ball_volume_matrix(space)
    d = space.dist
    lo, hi = space.min_gap, space.diameter
    edges = np.geomspace(lo, hi * 1.0001, num_scales + 1)
    worst = np.inf
    for x in range(space.n):
        for s in range(num_scales):
            ys = np.where((d[x] >= edges[s]) & (d[x] < edges[s + 1]))[0]
            if ys.size == 0:
                continue
            worst = min(worst, float(np.max((K[x, ys] + K[ys, x]) * V[x, ys])))
    return worst


# ---------------------------------------------------------------------------
# commutators and weighted conjugation
# ---------------------------------------------------------------------------


def commutator(b: np.ndarray, T: OperatorMatrix) -> OperatorMatrix:
    """[b, T] = diag(b) T - T diag(b), computed entrywise as (b(x)-b(y)) T[x][y]
    so the kernel identity is exact."""
    b = np.asarray(b, dtype=float)
    M = (b[:, None] - b[None, :]) * T.entries
    return OperatorMatrix(M, T.frame)


def conjugate_to_weighted(T: OperatorMatrix, w: np.ndarray) -> OperatorMatrix:
    """diag(w^1/2) T diag(w^-1/2): its singular values are the L2(w) singular
    values of T (multiplication by w^1/2 is an isometry L2(w) -> L2(mu))."""
    if T.frame != "L2(mu)":
        raise ValidationError("operator is already in a weighted frame")
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise ValidationError("weight must be positive")
    sw = np.sqrt(w)
    return OperatorMatrix(sw[:, None] * T.entries / sw[None, :], "L2(w)")


# ---------------------------------------------------------------------------
# dyadic shifts
# ---------------------------------------------------------------------------


def admissible_nodes(system: DyadicSystem, i: int, j: int) -> list[tuple[int, int]]:
    """(level, cube) nodes whose complexity-(i,j) block can be nonzero.

    A block needs cancellative Haar functions at depths i and j below (R,k),
    which forces k >= k_max(R) - min(i,j) (and k+max(i,j) within the ladder).
    """
    out = []
    for k in range(system.levels):
        if k + max(i, j) > system.levels - 1:
            continue
        for idx in range(system.n_cubes(k)):
            sid = int(system.set_id[k][idx])
            if k >= system.set_kmax[sid] - min(i, j):
                out.append((k, idx))
    return out


@dataclass
class ShiftCoefficients:
    """Blocks a_{(P,alpha),(Q,beta)} per admissible (R,k) node.

    rows[r] / cols[r]: Haar column indices (into basis.frame) of the
    cancellative functions on ch^i(R,k) / ch^j(R,k); a[r]: the coefficient
    block.  `normalization` is the recorded constant C with
    |a| <= C sqrt(mu(P) mu(Q)) / mu(R) entrywise.
    """

    complexity: tuple[int, int]
    blocks: dict = field(default_factory=dict)  # (k, idx) -> dict(rows, cols, a)
    normalization: float = 0.0

    def block_frobenius(self) -> dict:
        return {node: float(np.linalg.norm(blk["a"])) for node, blk in self.blocks.items()}


def _haar_columns_below(system: DyadicSystem, basis: HaarBasis, k: int, idx: int,
                        depth: int):
    """Haar columns and their cube masses for all cubes in ch^depth(R,k)."""
    cols, masses = [], []
    for c in system.descendants(k, idx, depth):
        sl = basis.cube_columns(min(k + depth, system.levels - 1), int(c))
        for t in range(sl.start, sl.stop):
            cols.append(t)
            masses.append(system.cube_mass(k + depth, int(c)))
    return cols, np.array(masses)


def random_shift_coefficients(system: DyadicSystem, basis: HaarBasis,
                              i: int, j: int, rng: np.random.Generator,
                              saturated: bool = False) -> ShiftCoefficients:
    """Normalized random coefficients: uniform in [-1,1] scaled by
    sqrt(mu(P) mu(Q))/mu(R); `saturated` pins |a| to the bound exactly."""
    coeffs = ShiftCoefficients((i, j), {}, 1.0)
    for (k, idx) in admissible_nodes(system, i, j):
        rows, mP = _haar_columns_below(system, basis, k, idx, i)
        cols, mQ = _haar_columns_below(system, basis, k, idx, j)
        if not rows or not cols:
            continue
        mR = system.cube_mass(k, idx)
        bound = np.sqrt(mP[:, None] * mQ[None, :]) / mR
        raw = rng.uniform(-1.0, 1.0, size=(len(rows), len(cols)))
        if saturated:
            raw = np.sign(raw)
            raw[raw == 0] = 1.0
        coeffs.blocks[(k, idx)] = {"rows": rows, "cols": cols, "a": raw * bound}
    return coeffs


def validate_shift_coefficients(system: DyadicSystem, coeffs: ShiftCoefficients) -> None:
    i, j = coeffs.complexity
    admissible = set(admissible_nodes(system, i, j))
    for node in coeffs.blocks:
        if node not in admissible:
            raise ValidationError(
                f"shift block at node {node} outside the admissible level range")


def build_shift(system: DyadicSystem, basis: HaarBasis,
                coeffs: ShiftCoefficients) -> OperatorMatrix:
    """S = sum over blocks of a_{(P,alpha),(Q,beta)} h_P^alpha (x) h_Q^beta."""
    validate_shift_coefficients(system, coeffs)
    n = system.space.n
    M = np.zeros((n, n))
    for blk in coeffs.blocks.values():
        HP = basis.frame[:, blk["rows"]]
        HQ = basis.frame[:, blk["cols"]]
        M += HP @ blk["a"] @ HQ.T
    return OperatorMatrix(M)


def shift_block_singular_values(basis: HaarBasis, coeffs: ShiftCoefficients):
    """Per-block singular values; their multiset union is the shift's spectrum."""
    out = []
    for blk in coeffs.blocks.values():
        out.append(np.linalg.svd(blk["a"], compute_uv=False))
    return out


def shift_coefficient_norm(coeffs: ShiftCoefficients, p: float, q: float) -> float:
    """|a|_{ell^{p,q}(ell^2)}: Lorentz norm over blocks of Frobenius masses."""
    from .norms import lorentz_sequence_norm

    fro = [np.linalg.norm(blk["a"]) for blk in coeffs.blocks.values()]
    return lorentz_sequence_norm(np.array(fro), p, q)


def special_shift_coefficients(system: DyadicSystem, basis: HaarBasis,
                               coeffs: ShiftCoefficients,
                               b: np.ndarray) -> ShiftCoefficients:
    """Coefficients a' = a * (<b>_P - <b>_Q) of the shift arising in [b, S]."""
    b = np.asarray(b, dtype=float)
    space = system.space
    out = ShiftCoefficients(coeffs.complexity, {}, coeffs.normalization)
    avg_cache: dict[tuple[int, int], float] = {}

    def cube_avg(k, idx):
        if (k, idx) not in avg_cache:
            pts = system.cubes[k][idx]
            avg_cache[(k, idx)] = float(np.average(b[pts], weights=space.mass[pts]))
        return avg_cache[(k, idx)]

    for node, blk in coeffs.blocks.items():
        rows, cols = blk["rows"], blk["cols"]
        avP = np.array([cube_avg(*basis.node_of[t]) for t in rows])
        avQ = np.array([cube_avg(*basis.node_of[t]) for t in cols])
        out.blocks[node] = {"rows": rows, "cols": cols,
                            "a": blk["a"] * (avP[:, None] - avQ[None, :])}
    return out


def shift_commutator_decomposition(b: np.ndarray, coeffs: ShiftCoefficients,
                                   system: DyadicSystem, basis: HaarBasis) -> dict:
    """[b, S] = [Pi_b, S] + sum_alpha [Gamma_b^alpha, S] + S_<b>, as matrices.

    Returns the three parts, the special-shift coefficients, and the residual
    of the identity against the directly computed commutator.
    """
    from .haar import product_decomposition

    S = build_shift(system, basis, coeffs)
    trip = product_decomposition(basis, b)
    pi_part = trip.pi @ S.entries - S.entries @ trip.pi
    gamma_parts = [G @ S.entries - S.entries @ G for G in trip.gamma]
    special = special_shift_coefficients(system, basis, coeffs, b)
    special_matrix = build_shift(system, basis, special).entries
    direct = commutator(b, S).entries
    recon = pi_part + sum(gamma_parts) + special_matrix
    denom = max(np.abs(direct).max(), 1e-300)
    residual = float(np.abs(direct - recon).max() / denom)
    return {
        "pi_part": pi_part,
        "gamma_parts": gamma_parts,
        "special_shift": special_matrix,
        "special_coeffs": special,
        "residual": residual,
    }
