"""Norm computations: Schatten-Lorentz, sequence Lorentz, Besov, oscillation,
mean-oscillation weak norm, and the Hajlasz upper-gradient program.

Matrix norms act on operators in the mass-conjugated frame e_i = delta_i /
sqrt(mass_i), where the L2(mu) inner product is Euclidean, so singular values
are frame-independent of the underlying masses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .space import FiniteSpace, ValidationError, ball_volume_matrix


@dataclass
class SingularValues:
    values: np.ndarray  # nonincreasing, nonnegative

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @property
    def n(self) -> int:
        return self.values.size


def svd(entries: np.ndarray) -> SingularValues:
    """Full singular spectrum, nonincreasing.

    LAPACK is the workhorse; `jacobi_svd` below is the high-accuracy
    cross-check used in tests, and an independent symmetric eigensolver on
    T*T validates the spectrum (see tests).
    """
    A = np.asarray(entries)
    if not np.all(np.isfinite(A)):
        raise ValidationError("non-finite entries")
    vals = np.linalg.svd(A, compute_uv=False)
    return SingularValues(np.sort(vals)[::-1])


def jacobi_svd(entries: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60) -> SingularValues:
    """One-sided Jacobi singular values (column orthogonalisation)."""
    A = np.array(entries, dtype=complex if np.iscomplexobj(entries) else float)
    if A.shape[0] < A.shape[1]:
        A = A.T.conj() if np.iscomplexobj(A) else A.T
    m, n = A.shape
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai, aj = A[:, i], A[:, j]
                aij = np.vdot(ai, aj)
                aii = np.vdot(ai, ai).real
                ajj = np.vdot(aj, aj).real
                if abs(aij) <= tol * np.sqrt(aii * ajj) or aii * ajj == 0:
                    continue
                off = max(off, abs(aij) / np.sqrt(aii * ajj))
                tau = (ajj - aii) / (2.0 * aij.real) if aij.imag == 0 else None
                if tau is None:
                    # complex rotation: diagonalise the 2x2 Gram block
                    G = np.array([[aii, aij], [np.conj(aij), ajj]])
                    _, vecs = np.linalg.eigh(G)
                    B = A[:, [i, j]] @ vecs
                    A[:, i], A[:, j] = B[:, 0], B[:, 1]
                    continue
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                Ai = c * ai - s * aj
                Aj = s * ai + c * aj
                A[:, i], A[:, j] = Ai, Aj
        if off <= tol:
            break
    vals = np.sqrt(np.sum(np.abs(A) ** 2, axis=0))
    return SingularValues(np.sort(vals)[::-1])


# ---------------------------------------------------------------------------
# Lorentz norms
# ---------------------------------------------------------------------------


def _lorentz_from_sorted(sv: np.ndarray, p: float, q: float) -> float:
    if p <= 0:
        raise ValidationError("p must be positive")
    if q <= 0:
        raise ValidationError("q must be positive (or inf)")
    sv = sv[sv > 0]
    if sv.size == 0:
        return 0.0
    n = np.arange(1, sv.size + 1, dtype=float)
    if np.isinf(q):
        return float(np.max(n ** (1.0 / p) * sv))
    return float(np.sum((n ** (1.0 / p - 1.0 / q) * sv) ** q) ** (1.0 / q))


def schatten_lorentz(sv: SingularValues, p: float, q: float) -> float:
    """S^{p,q} norm from singular values; S^{p,p} is the plain Schatten p-norm."""
    return _lorentz_from_sorted(sv.values, p, q)


def schatten_norm(entries: np.ndarray, p: float, q: float | None = None) -> float:
    return schatten_lorentz(svd(entries), p, q if q is not None else p)


def lorentz_sequence_norm(seq, p: float, q: float) -> float:
    """ell^{p,q} norm of a sequence via its decreasing rearrangement."""
    vals = np.sort(np.abs(np.asarray(seq, dtype=float)).ravel())[::-1]
    return _lorentz_from_sorted(vals, p, q)


def lorentz_distribution_norm(seq, p: float) -> float:
    """ell^{p,inf} via the distribution function; cross-check for q = inf."""
    vals = np.sort(np.abs(np.asarray(seq, dtype=float)).ravel())[::-1]
    vals = vals[vals > 0]
    best = 0.0
    for i, t in enumerate(vals):
        best = max(best, t * (i + 1) ** (1.0 / p))
    return best


# ---------------------------------------------------------------------------
# Besov norm
# ---------------------------------------------------------------------------


def besov_norm(space: FiniteSpace, b: np.ndarray, p: float,
               V: np.ndarray | None = None) -> float:
    """(sum_{x != y} |b(x)-b(y)|^p V(x,y)^-2 mu(x) mu(y))^(1/p), closed-ball V."""
    if p <= 0:
        raise ValidationError("p must be positive")
    b = np.asarray(b, dtype=float)
    V = ball_volume_matrix(space) if V is None else V
    diff = np.abs(b[:, None] - b[None, :])
    np.fill_diagonal(diff, 0.0)
    mu = space.mass
    total = np.sum(diff**p / V**2 * mu[:, None] * mu[None, :])
    return float(total ** (1.0 / p))


# ---------------------------------------------------------------------------
# oscillation norms over dyadic cubes
# ---------------------------------------------------------------------------


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values)
    cw = np.cumsum(weights[order])
    return float(values[order][np.searchsorted(cw, cw[-1] / 2.0)])


def osc_values(system, b: np.ndarray, r: float = 1.0,
               ball_factor: float | None = None) -> np.ndarray:
    """Per distinct cube set: inf_c (avg over B_Q of |b - c|^r)^(1/r).

    B_Q is the closed ball around z_Q of radius ball_factor * ell(Q) at the
    set's coarsest level; ball_factor defaults to the realized sandwich
    constant C0 so that Q is contained in B_Q.  The inf over c is exact for
    r in {1, 2} (weighted median / mean) and c = <b>_{B_Q} otherwise.
    """
    space = system.space
    b = np.asarray(b, dtype=float)
    mu = space.mass
    c_fac = system.C0 if ball_factor is None else ball_factor
    out = np.empty(len(system.set_kmin))
    seen = set()
    for k in range(system.levels):
        for idx in range(system.n_cubes(k)):
            sid = int(system.set_id[k][idx])
            if sid in seen:
                continue
            seen.add(sid)
            kmin = int(system.set_kmin[sid])
            pos = np.where(system.set_id[kmin] == sid)[0][0]
            z = int(system.centers[kmin][pos])
            radius = c_fac * system.scales[kmin]
            ball = np.where(space.dist[z] <= radius)[0]
            w = mu[ball]
            v = b[ball]
            if r == 2.0:
                c = float(np.average(v, weights=w))
            elif r == 1.0:
                c = _weighted_median(v, w)
            else:
                c = float(np.average(v, weights=w))
            out[sid] = (np.average(np.abs(v - c) ** r, weights=w)) ** (1.0 / r)
    return out


def osc_norm(system, b: np.ndarray, p: float, q: float, r: float = 1.0,
             ball_factor: float | None = None) -> float:
    """ell^{p,q} norm over distinct cube sets of local oscillations of b."""
    if p <= 0 or r <= 0:
        raise ValidationError("p and r must be positive")
    return lorentz_sequence_norm(osc_values(system, b, r, ball_factor), p, q)


# ---------------------------------------------------------------------------
# mean oscillation field and the weak nu_d norm
# ---------------------------------------------------------------------------


def geometric_ladder(t_min: float, t_max: float, per_decade: int = 4) -> np.ndarray:
    if not (0 < t_min < t_max):
        raise ValidationError("need 0 < t_min < t_max")
    count = max(int(np.ceil(np.log(t_max / t_min) / np.log(10.0) * per_decade)) + 1, 2)
    return np.geomspace(t_min, t_max, count)


def mean_oscillation_field(space: FiniteSpace, b: np.ndarray,
                           ladder: np.ndarray) -> np.ndarray:
    """m_b(x, t) = avg over B(x,t) of |b - <b>_{B(x,t)}|, exact per (x, t)."""
    b = np.asarray(b, dtype=float)
    mu = space.mass
    out = np.empty((space.n, len(ladder)))
    for i in range(space.n):
        d = space.dist[i]
        for j, t in enumerate(ladder):
            ball = d <= t
            w = mu[ball]
            v = b[ball]
            avg = np.average(v, weights=w)
            out[i, j] = np.average(np.abs(v - avg), weights=w)
    return out


def weak_nu_norm(field: np.ndarray, mass: np.ndarray, ladder: np.ndarray,
                 d: float) -> float:
    """L^{d,inf}(nu_d) quasinorm of m_b with nu_d = dmu dt / t^(d+1).

    Each ladder cell [t_k, t_{k+1}) carries the exact weight
    mu(x) * (t_k^-d - t_{k+1}^-d)/d; the supremum of kappa * nu{m > kappa}^(1/d)
    is evaluated at the realised field values.
    """
    if d <= 0:
        raise ValidationError("d must be positive")
    tw = (ladder[:-1] ** (-d) - ladder[1:] ** (-d)) / d
    vals = field[:, :-1].ravel()
    wts = (mass[:, None] * tw[None, :]).ravel()
    order = np.argsort(-vals)
    vals, wts = vals[order], np.cumsum(wts[order])
    best = 0.0
    i = 0
    m = vals.size
    while i < m:
        if vals[i] <= 0:
            break
        j = i
        while j + 1 < m and vals[j + 1] == vals[i]:
            j += 1
        best = max(best, vals[i] * wts[j] ** (1.0 / d))
        i = j + 1
    return float(best)


# ---------------------------------------------------------------------------
# Hajlasz upper-gradient program
# ---------------------------------------------------------------------------


@dataclass
class HajlaszResult:
    value: float
    converged: bool
    iterations: int
    lower_bound: float
    meta: dict = field(default_factory=dict)


def _pair_lower_bound(space: FiniteSpace, g: np.ndarray, p: float) -> float:
    """Exact optimum of the single-constraint problems; valid global lower bound.

    For one pair, min (mx hx^p + my hy^p)^(1/p) over hx + hy = g has the
    closed form g * (mx^(1/(p-1)) * my^(1/(p-1)))^... reduced via Lagrange:
    hx proportional to mx^(-1/(p-1)).
    """
    mu = space.mass
    e = 1.0 / (p - 1.0)
    best = 0.0
    n = space.n
    for x in range(n):
        for y in range(x + 1, n):
            gxy = g[x, y]
            if gxy <= 0:
                continue
            ax, ay = mu[x] ** (-e), mu[y] ** (-e)
            hx = gxy * ax / (ax + ay)
            hy = gxy * ay / (ax + ay)
            best = max(best, (mu[x] * hx**p + mu[y] * hy**p) ** (1.0 / p))
    return best


def _feasibility_sweeps(h: np.ndarray, g: np.ndarray, max_sweeps: int = 200,
                        tol: float = 1e-12) -> np.ndarray:
    """Project towards {h_x + h_y >= g_xy, h >= 0} by pairwise corrections."""
    for _ in range(max_sweeps):
        viol = g - h[:, None] - h[None, :]
        np.fill_diagonal(viol, -np.inf)
        worst = viol.max()
        if worst <= tol:
            break
        idx = np.argwhere(viol > max(worst * 0.5, tol))
        bump = np.zeros_like(h)
        for x, y in idx:
            np.maximum.at(bump, [x, y], viol[x, y] / 2.0)
        h = np.maximum(h + bump, 0.0)
    return h


def hajlasz_norm(space: FiniteSpace, b: np.ndarray, p: float,
                 max_iter: int = 5000, rel_gap: float = 1e-4,
                 stall_limit: int = 1500, seed: int = 0) -> HajlaszResult:
    """Minimal L^p(mu) norm of an upper gradient h >= 0 with
    h(x) + h(y) >= |b(x) - b(y)| / dist(x, y) for all x != y.

    Projected subgradient with a diminishing step and pairwise feasibility
    sweeps; stops early when the objective is within `rel_gap` of the exact
    single-pair lower bound, otherwise reports the best feasible value with
    converged=False.  Every reported value is feasible, hence >= the true
    optimum >= the lower bound.
    """
    if not (1.0 < p < np.inf):
        raise ValidationError("p must lie in (1, inf)")
    b = np.asarray(b, dtype=float)
    mu = space.mass
    n = space.n
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.abs(b[:, None] - b[None, :]) / space.dist
    np.fill_diagonal(g, 0.0)
    if np.all(g <= 0):
        return HajlaszResult(0.0, True, 0, 0.0)
    lb = _pair_lower_bound(space, g, p)

    def objective(h):
        return float(np.sum(mu * h**p) ** (1.0 / p))

    h = 0.5 * g.max(axis=1)  # feasible start
    best_h = h.copy()
    best = objective(h)
    scale0 = best
    it = 0
    since_improve = 0
    for it in range(1, max_iter + 1):
        if best <= lb * (1.0 + rel_gap):
            return HajlaszResult(best, True, it, lb)
        if since_improve >= stall_limit:
            break
        f = objective(h)
        grad = f ** (1.0 - p) * mu * h ** (p - 1.0)
        gnorm = np.linalg.norm(grad)
        if gnorm == 0:
            break
        step = 0.5 * scale0 / (gnorm * np.sqrt(it))
        h = np.maximum(h - step * grad, 0.0)
        h = _feasibility_sweeps(h, g)
        f = objective(h)
        if f < best * (1.0 - 1e-10):
            best = f
            best_h = h.copy()
            since_improve = 0
        else:
            since_improve += 1
    converged = best <= lb * (1.0 + rel_gap)
    return HajlaszResult(best, converged, it, lb, {"h": best_h})


def hajlasz_norm_bruteforce(space: FiniteSpace, b: np.ndarray, p: float,
                            grid: int = 21, rounds: int = 6) -> float:
    """Zooming grid search over gradients; oracle for n <= 4."""
    if space.n > 4:
        raise ValidationError("brute force oracle is for n <= 4")
    b = np.asarray(b, dtype=float)
    mu = space.mass
    n = space.n
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.abs(b[:, None] - b[None, :]) / space.dist
    np.fill_diagonal(g, 0.0)
    if np.all(g <= 0):
        return 0.0
    hi = np.full(n, g.max())
    lo = np.zeros(n)
    best_val, best_h = np.inf, None
    for _ in range(rounds):
        axes = [np.linspace(lo[i], hi[i], grid) for i in range(n)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        feas = np.ones(mesh.shape[0], dtype=bool)
        for x in range(n):
            for y in range(x + 1, n):
                feas &= mesh[:, x] + mesh[:, y] >= g[x, y] - 1e-12
        cand = mesh[feas]
        vals = (cand**p @ mu) ** (1.0 / p)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_h = float(vals[i]), cand[i]
        span = (hi - lo) / (grid - 1)
        lo = np.maximum(best_h - 2 * span, 0.0)
        hi = best_h + 2 * span
    return best_val


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------

NORM_REPORT_HEADER = ["kind", "p", "q", "value", "space-id", "system-id", "seed"]


@dataclass
class NormReport:
    kind: str
    p: float
    q: float
    value: float
    space_id: str = ""
    system_id: str = ""
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    def row(self) -> list:
        return [self.kind, self.p, self.q, self.value, self.space_id,
                self.system_id, self.seed]
