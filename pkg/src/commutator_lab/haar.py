"""Haar bases per cube, martingale projections, and paraproduct operators.

Functions live in two representations: pointwise values f (length-n vectors)
and the mass frame f*sqrt(mass), where L2(mu) inner products are Euclidean.
All operator matrices returned here are in the mass frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicSystem
from .space import ValidationError


def to_frame(space, f: np.ndarray) -> np.ndarray:
    return np.asarray(f) * np.sqrt(space.mass)


def from_frame(space, v: np.ndarray) -> np.ndarray:
    return np.asarray(v) / np.sqrt(space.mass)


@dataclass
class HaarBasis:
    """All cancellative Haar functions of a dyadic system.

    frame: (n, n_haar) matrix whose columns are orthonormal in the Euclidean
    sense (mass frame).  Column t belongs to cube node `node_of[t] = (k, idx)`
    with in-cube index alpha = `alpha_of[t]` (1-based).  Cubes with a single
    child contribute no columns.
    """

    system: DyadicSystem
    frame: np.ndarray
    node_of: list[tuple[int, int]]
    alpha_of: np.ndarray
    columns: dict = field(default_factory=dict)  # (k, idx) -> slice

    @property
    def n_haar(self) -> int:
        return self.frame.shape[1]

    def cube_columns(self, k: int, idx: int) -> slice:
        return self.columns.get((k, idx), slice(0, 0))

    def n_cancellative(self, k: int, idx: int) -> int:
        sl = self.cube_columns(k, idx)
        return sl.stop - sl.start

    def haar_pointwise(self, t: int) -> np.ndarray:
        return from_frame(self.system.space, self.frame[:, t])


def build_haar(system: DyadicSystem) -> HaarBasis:
    """Per-cube orthonormal cancellative vectors via the child-splitting recursion.

    With children Q_1..Q_M ordered by ascending minimal point index and
    tails Qhat_i = union of Q_j for j >= i,
    h_Q^i = sqrt(mu(Q_i) mu(Qhat_{i+1}) / mu(Qhat_i))
            * (1_{Q_i}/mu(Q_i) - 1_{Qhat_{i+1}}/mu(Qhat_{i+1})).
    """
    space = system.space
    n = space.n
    cols: list[np.ndarray] = []
    node_of: list[tuple[int, int]] = []
    alpha_of: list[int] = []
    columns: dict = {}
    sqrt_mass = np.sqrt(space.mass)
    for k in range(system.levels - 1):
        for idx in range(system.n_cubes(k)):
            ch = system.children(k, idx)
            if len(ch) < 2:
                columns[(k, idx)] = slice(len(cols), len(cols))
                continue
            ch = sorted(ch, key=lambda c: int(system.cubes[k + 1][c].min()))
            start = len(cols)
            masses = np.array([system.cube_mass(k + 1, c) for c in ch])
            tails = np.cumsum(masses[::-1])[::-1]
            for i in range(len(ch) - 1):
                vec = np.zeros(n)
                pts_i = system.cubes[k + 1][ch[i]]
                vec[pts_i] = 1.0 / masses[i]
                for j in range(i + 1, len(ch)):
                    vec[system.cubes[k + 1][ch[j]]] = -1.0 / tails[i + 1]
                scale = np.sqrt(masses[i] * tails[i + 1] / tails[i])
                cols.append(scale * vec * sqrt_mass)
                node_of.append((k, idx))
                alpha_of.append(i + 1)
            columns[(k, idx)] = slice(start, len(cols))
    # bottom-level cubes are singletons: never any cancellative vectors
    for idx in range(system.n_cubes(system.levels - 1)):
        columns[(system.levels - 1, idx)] = slice(len(cols), len(cols))
    frame = np.array(cols).T if cols else np.zeros((n, 0))
    return HaarBasis(system, frame, node_of, np.array(alpha_of, dtype=int), columns)


# ---------------------------------------------------------------------------
# martingale projections
# ---------------------------------------------------------------------------


def _check_level(basis: HaarBasis, k: int) -> None:
    if not (0 <= k < basis.system.levels):
        raise ValidationError(f"level {k} outside system range")


def project_E_cube(basis: HaarBasis, f: np.ndarray, k: int, idx: int) -> np.ndarray:
    """E_Q f = <f>_Q 1_Q (pointwise representation)."""
    _check_level(basis, k)
    system = basis.system
    pts = system.cubes[k][idx]
    out = np.zeros_like(np.asarray(f, dtype=float))
    out[pts] = np.average(np.asarray(f)[pts], weights=system.space.mass[pts])
    return out

def project_D_cube(basis: HaarBasis, f: np.ndarray, k: int, idx: int) -> np.ndarray:
    """D_Q f = sum_alpha <f, h_Q^alpha> h_Q^alpha."""
    _check_level(basis, k)
    sl = basis.cube_columns(k, idx)
    H = basis.frame[:, sl]
    v = to_frame(basis.system.space, f)
    return from_frame(basis.system.space, H @ (H.T @ v))

def project_E_level(basis: HaarBasis, f: np.ndarray, k: int) -> np.ndarray:
    _check_level(basis, k)
    system = basis.system
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    for idx in range(system.n_cubes(k)):
        pts = system.cubes[k][idx]
        out[pts] = np.average(f[pts], weights=system.space.mass[pts])
    return out

def project_D_level(basis: HaarBasis, f: np.ndarray, k: int) -> np.ndarray:
    """D_k f = E_{k+1} f - E_k f."""
    _check_level(basis, k)
    if k == basis.system.levels - 1:
        return np.zeros_like(np.asarray(f, dtype=float))
    return project_E_level(basis, f, k + 1) - project_E_level(basis, f, k)


def martingale_project(basis: HaarBasis, f: np.ndarray, which: str,
                       level: int, cube: int | None = None) -> np.ndarray:
    ops = {"E_Q": project_E_cube, "D_Q": project_D_cube,
           "E_k": project_E_level, "D_k": project_D_level}
    if which not in ops:
        raise ValidationError(f"unknown projection {which!r}")
    if which.endswith("_Q"):
        if cube is None:
            raise ValidationError("cube index required for E_Q / D_Q")
        return ops[which](basis, f, level, cube)
    return ops[which](basis, f, level)


def E_level_matrix(basis: HaarBasis, k: int) -> np.ndarray:
    """Frame matrix of E_k (orthogonal projection onto level-k averages)."""
    _check_level(basis, k)
    system = basis.system
    n = system.space.n
    P = np.zeros((n, n))
    sm = np.sqrt(system.space.mass)
    for idx in range(system.n_cubes(k)):
        pts = system.cubes[k][idx]
        u = np.zeros(n)
        u[pts] = sm[pts]
        u /= np.linalg.norm(u)
        P += np.outer(u, u)
    return P


def D_level_matrix(basis: HaarBasis, k: int) -> np.ndarray:
    sl_cols = [basis.columns[(k, idx)] for idx in range(basis.system.n_cubes(k))]
    n = basis.system.space.n
    P = np.zeros((n, n))
    for sl in sl_cols:
        H = basis.frame[:, sl]
        P += H @ H.T
    return P


def haar_coefficients(basis: HaarBasis, f: np.ndarray) -> np.ndarray:
    """<f, h_Q^alpha> for all cancellative Haar functions."""
    return basis.frame.T @ to_frame(basis.system.space, f)


def global_average(space, f: np.ndarray) -> float:
    return float(np.average(np.asarray(f, dtype=float), weights=space.mass))


# ---------------------------------------------------------------------------
# paraproducts and the pointwise-product decomposition
# ---------------------------------------------------------------------------


def paraproduct_operator(system: DyadicSystem, basis: HaarBasis,
                         symbol: np.ndarray, adjoint: bool = False) -> np.ndarray:
    """Frame matrix of Pi_b = sum_Q D_Q b (x) 1_Q / mu(Q) (or its adjoint).

    The sum over (cube, level) nodes equals the strict-children sum over
    distinct sets, since D_(Q,k) vanishes except at k = k_max(Q).
    """
    space = system.space
    n = space.n
    b = np.asarray(symbol, dtype=float)
    sm = np.sqrt(space.mass)
    M = np.zeros((n, n))
    for k in range(system.levels - 1):
        for idx in range(system.n_cubes(k)):
            if basis.n_cancellative(k, idx) == 0:
                continue
            Db = project_D_cube(basis, b, k, idx)
            pts = system.cubes[k][idx]
            mass = system.cube_mass(k, idx)
            ind = np.zeros(n)
            ind[pts] = 1.0 / mass
            M += np.outer(Db * sm, ind * sm)
    return M.T if adjoint else M


@dataclass
class ParaproductTriple:
    pi: np.ndarray                 # Pi_b
    gamma: list[np.ndarray]        # Gamma_b^alpha, alpha = 1..max cancellative
    h_avg: np.ndarray              # sum_P <b>_P D_P
    avg_b: float                   # <b>_X

    def product_matrix(self, space) -> np.ndarray:
        """b*f = (pi + sum gamma + h_avg) f + <b>_X <f>_X, as one frame matrix."""
        n = space.mass.size
        sm = np.sqrt(space.mass)
        EX = np.outer(sm, sm) / space.mass.sum()
        return self.pi + sum(self.gamma) + self.h_avg + self.avg_b * EX


def product_decomposition(basis: HaarBasis, b: np.ndarray) -> ParaproductTriple:
    """Exact splitting of pointwise multiplication by b into paraproduct parts.

    diag(b) = Pi_b + sum_alpha Gamma_b^alpha + H_<b> + <b>_X E_X on the full
    finite ladder (the finite-measure branch is always active).
    """
    system = basis.system
    space = system.space
    n = space.n
    b = np.asarray(b, dtype=float)
    sm = np.sqrt(space.mass)
    pi = paraproduct_operator(system, basis, b)
    max_alpha = int(basis.alpha_of.max()) if basis.n_haar else 0
    gamma = [np.zeros((n, n)) for _ in range(max_alpha)]
    h_avg = np.zeros((n, n))
    for k in range(system.levels - 1):
        for idx in range(system.n_cubes(k)):
            sl = basis.cube_columns(k, idx)
            if sl.stop == sl.start:
                continue
            Db = project_D_cube(basis, b, k, idx)
            pts = system.cubes[k][idx]
            avg = np.average(b[pts], weights=space.mass[pts])
            for t in range(sl.start, sl.stop):
                h_pt = basis.haar_pointwise(t)
                alpha = int(basis.alpha_of[t])
                gamma[alpha - 1] += np.outer(Db * h_pt * sm, h_pt * sm)
                h_avg += avg * np.outer(basis.frame[:, t], basis.frame[:, t])
    return ParaproductTriple(pi, gamma, h_avg, global_average(space, b))


def strict_child_bound_constant(system: DyadicSystem) -> float:
    """max over strict children of mu(parent)/mu(child): the constant in
    |[D]_Q b|_inf <= C * m_b(Q)."""
    best = 1.0
    strict = system.strict_parent
    for sid in range(len(system.set_kmin)):
        par = strict[sid]
        if par >= 0:
            best = max(best, system.set_mass[par] / system.set_mass[sid])
    return float(best)


# ---------------------------------------------------------------------------
# weighted square function
# ---------------------------------------------------------------------------


def weighted_square_function(basis: HaarBasis, w: np.ndarray, f: np.ndarray):
    """(|<f>_X|^2_{L2(w)} + sum_Q |D_Q f|^2_{L2(w)},  |f|^2_{L2(w)})."""
    system = basis.system
    space = system.space
    w = np.asarray(w, dtype=float)
    f = np.asarray(f, dtype=float)
    avg = global_average(space, f)
    lhs = avg * avg * float((w * space.mass).sum())
    for k in range(system.levels - 1):
        for idx in range(system.n_cubes(k)):
            if basis.n_cancellative(k, idx) == 0:
                continue
            Df = project_D_cube(basis, f, k, idx)
            lhs += float((Df * Df * w * space.mass).sum())
    rhs = float((f * f * w * space.mass).sum())
    return lhs, rhs


def export_haar_coefficients(basis: HaarBasis, f: np.ndarray, path: str) -> None:
    """CSV (cube-id, level, alpha, coefficient) of <f, h_Q^alpha>."""
    import csv

    coeffs = haar_coefficients(basis, f)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["cube-id", "level", "alpha", "coefficient"])
        for t in range(basis.n_haar):
            k, idx = basis.node_of[t]
            wr.writerow([idx, k, int(basis.alpha_of[t]), repr(float(coeffs[t]))])
