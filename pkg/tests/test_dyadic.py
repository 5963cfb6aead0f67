import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commutator_lab.dyadic import (
    ancestor_probability,
    build_dyadic_system,
    calibrate_m0,
    carleson_operator_norm_probe,
    carleson_transform,
    random_dyadic_system,
)
from commutator_lab.norms import lorentz_sequence_norm
from commutator_lab.operators import admissible_nodes
from commutator_lab.space import (
    FiniteSpace,
    ValidationError,
    cantor_space,
    euclidean_grid,
    four_squares,
)

from conftest import binary_stack, cantor_stack


def check_system_invariants(system):
    space = system.space
    n = space.n
    for k in range(system.levels):
        # exact partition
        seen = np.concatenate(system.cubes[k])
        assert sorted(seen.tolist()) == list(range(n))
        # nesting
        if k > 0:
            for i, pts in enumerate(system.cubes[k]):
                parents = set(system.point_cube[k - 1][pts].tolist())
                assert len(parents) == 1
        # ball sandwich with the realized constants
        for i, pts in enumerate(system.cubes[k]):
            z = int(system.centers[k][i])
            inner = np.where(space.dist[z] <= system.c0 * system.scales[k])[0]
            assert set(inner).issubset(set(pts.tolist()))
            outer = np.where(space.dist[z] <= system.C0 * system.scales[k] + 1e-12)[0]
            assert set(pts.tolist()).issubset(set(outer.tolist()))
    assert len(system.cubes[0]) == 1
    assert all(len(p) == 1 for p in system.cubes[-1])


class TestConstruction:
    def test_aligned_grid_reproduces_standard_cubes(self):
        space, system, _ = binary_stack(3)
        assert [system.n_cubes(k) for k in range(system.levels)] == [1, 2, 4, 8]
        assert sorted(system.cubes[1][0].tolist()) == [0, 1, 2, 3]
        check_system_invariants(system)

    def test_cantor_natural_tree_equal_child_masses(self):
        space, system, _ = cantor_stack(4)
        assert [system.n_cubes(k) for k in range(system.levels)] == [1, 2, 4, 8, 16]
        for k in range(system.levels - 1):
            for i in range(system.n_cubes(k)):
                for ch in system.children(k, i):
                    assert system.cube_mass(k + 1, int(ch)) == pytest.approx(
                        system.cube_mass(k, i) / 2)
        check_system_invariants(system)

    def test_strict_parent_constant(self):
        _, sys_b, _ = binary_stack(4)
        assert sys_b.strict_constant == pytest.approx(2.0)
        _, sys_c, _ = cantor_stack(4)
        assert sys_c.strict_constant == pytest.approx(2.0)

    def test_delta_validation(self):
        g = euclidean_grid(1, 4, 1.0)
        with pytest.raises(ValidationError):
            build_dyadic_system(g, 1.5)

    def test_net_strategy_valid(self):
        # distance-only space: greedy farthest-point nets
        rng = np.random.default_rng(3)
        pts = rng.uniform(0, 1, size=(20, 2))
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
        sp = FiniteSpace(d, np.full(20, 0.05), 1.0)
        system = build_dyadic_system(sp, 0.5, seed=1)
        check_system_invariants(system)

    def test_single_point_trivial(self):
        sp = FiniteSpace(np.zeros((1, 1)), np.array([1.0]), 1.0)
        system = build_dyadic_system(sp, 0.3)
        assert system.levels == 1
        assert system.cubes[0][0].tolist() == [0]

    def test_unique_levels_on_positive_dimension(self):
        # no cube set repeats across levels on the aligned binary tree and
        # the cantor tree (delta below the splitting threshold)
        for stack in (binary_stack(4), cantor_stack(4)):
            system = stack[1]
            assert np.all(system.set_kmin == system.set_kmax)

    def test_four_squares_has_repeats(self):
        fs = four_squares(4)
        system = build_dyadic_system(fs, 0.5)
        assert np.any(system.set_kmin != system.set_kmax)
        check_system_invariants(system)

    def test_strict_ancestor_geometric_sum(self):
        # sum_k (mu(Q)/mu(Q^[k]))^a <= c^a/(c^a - 1) with the realized c
        for stack in (binary_stack(5), cantor_stack(5)):
            system = stack[1]
            c = system.strict_constant
            strict = system.strict_parent
            for sid in range(len(system.set_kmin)):
                for alpha in (0.5, 1.0, 2.0):
                    total, cur = 0.0, sid
                    while cur >= 0:
                        total += (system.set_mass[sid] / system.set_mass[cur]) ** alpha
                        cur = strict[cur]
                    assert total <= c**alpha / (c**alpha - 1.0) + 1e-12


class TestAdmissibleLevels:
    def test_at_most_min_plus_one(self):
        fs = four_squares(4)
        system = build_dyadic_system(fs, 0.5)
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)]:
            nodes = admissible_nodes(system, i, j)
            per_set: dict = {}
            for (k, idx) in nodes:
                sid = int(system.set_id[k][idx])
                per_set.setdefault(sid, []).append(k)
            for sid, ks in per_set.items():
                assert len(ks) <= min(i, j) + 1


class TestRandomSystems:
    def test_draws_are_valid_systems(self, rng):
        g = euclidean_grid(1, 16, 1.0)
        for seed in range(5):
            check_system_invariants(random_dyadic_system(g, 0.5, seed))

    def test_random_net_draws_are_valid(self):
        # label-free space forces the net strategy with random order and
        # random admissible parents
        r = np.random.default_rng(8)
        pts = r.uniform(0, 1, size=(18, 2))
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
        sp = FiniteSpace(d, np.full(18, 1 / 18), 1.0)
        for seed in range(8):
            check_system_invariants(random_dyadic_system(sp, 0.5, seed))

    def test_single_point_any_omega(self):
        sp = FiniteSpace(np.zeros((1, 1)), np.array([1.0]), 1.0)
        system = random_dyadic_system(sp, 0.5, 123)
        assert system.levels == 1

    def test_translation_uniformity_chi_square(self):
        # at the 4-cell level of a 16-point unit grid the partition pattern is
        # determined by the shift mod 4: four equally likely configurations
        g = euclidean_grid(1, 16, 1.0)
        rng = np.random.default_rng(11)
        counts = np.zeros(4)
        draws = 2000
        for _ in range(draws):
            system = random_dyadic_system(g, 0.5, rng)
            # locate the level with cell side 4 via its scale
            k = int(np.argmin(np.abs(system.scales - 4.0)))
            first = system.cubes[k][system.point_cube[k, 0]]
            counts[(4 - len(first)) % 4] += 1
        expected = draws / 4.0
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        # chi-square(3) critical value at p = 0.01 is 11.34
        assert chi2 < 11.34

    def test_boundary_smallness_fit(self):
        # fraction of (point, level) pairs within eps*delta^k of a cube
        # boundary decays like C*eps^eta with positive fitted eta
        g = euclidean_grid(1, 32, 1 / 32)
        rng = np.random.default_rng(5)
        eps_grid = [0.4, 0.2, 0.1]
        fracs = []
        for eps in eps_grid:
            hit = 0
            tot = 0
            for _ in range(60):
                system = random_dyadic_system(g, 0.5, rng)
                for k in range(1, system.levels - 1):
                    for i, pts in enumerate(system.cubes[k]):
                        z_out = np.setdiff1d(np.arange(g.n), pts)
                        if z_out.size == 0:
                            continue
                        for p in pts:
                            tot += 1
                            if g.dist[p, z_out].min() < eps * system.scales[k]:
                                hit += 1
            fracs.append(max(hit / tot, 1e-6))
        slope = np.polyfit(np.log(eps_grid), np.log(fracs), 1)[0]
        assert slope > 0.2  # fitted eta > 0, stable over the eps ladder


class TestAncestorProbability:
    def test_same_cube_probability_one(self):
        g = euclidean_grid(1, 8, 1.0)
        est = ancestor_probability(g, 0.5, (2, 3), (2, 3), 0, trials=20)
        assert est["estimate"] == 1.0

    def test_level_mismatch_rejected(self):
        g = euclidean_grid(1, 8, 1.0)
        with pytest.raises(ValidationError):
            ancestor_probability(g, 0.5, (1, 0), (2, 0), 1)

    def test_adjacent_cubes_majority(self):
        g = euclidean_grid(1, 16, 1.0)
        est = ancestor_probability(g, 0.5, (3, 7), (3, 8), 3, trials=400, seed=2)
        assert est["estimate"] >= 0.5 - 3 * est["stderr"]

    def test_calibration_returns_m0(self):
        g = euclidean_grid(1, 16, 1.0)
        cal = calibrate_m0(g, 0.5, trials=60, seed=4)
        assert cal["m0"] >= 1


class TestCarleson:
    def test_single_cube_indicator(self):
        _, system, _ = binary_stack(3)
        lam = {(2, 1): 1.0}
        car = carleson_transform(system, lam)
        mQ = system.cube_mass(2, 1)
        for k in range(system.levels):
            for i in range(system.n_cubes(k)):
                contains = set(system.cubes[2][1]).issubset(set(system.cubes[k][i]))
                expect = mQ / system.cube_mass(k, i) if contains else 0.0
                assert car[(k, i)] == pytest.approx(expect)

    def test_depth_two_tree_all_ones(self):
        _, system, _ = binary_stack(2)
        lam = {(k, i): 1.0 for k in range(system.levels)
               for i in range(system.n_cubes(k))}
        car = carleson_transform(system, lam)
        assert car[(0, 0)] == pytest.approx(3.0)
        assert car[(1, 0)] == pytest.approx(2.0)
        assert car[(2, 0)] == pytest.approx(1.0)
        # l1 ratio 11/7 <= c/(c-1) = 2
        assert sum(car.values()) / 7.0 == pytest.approx(11 / 7)

    def test_tree_pass_matches_quadratic_oracle(self, rng):
        _, system, _ = cantor_stack(3)
        nodes = [(k, i) for k in range(system.levels)
                 for i in range(system.n_cubes(k))]
        lam = {nodes[t]: float(v) for t, v in
               zip(rng.choice(len(nodes), 6, replace=False), rng.normal(size=6))}
        car = carleson_transform(system, lam)
        for (k, i) in nodes:
            pts_p = set(system.cubes[k][i].tolist())
            total = 0.0
            for (kq, iq), v in lam.items():
                if kq >= k and set(system.cubes[kq][iq].tolist()) <= pts_p:
                    total += abs(v) * system.cube_mass(kq, iq)
            assert car[(k, i)] == pytest.approx(total / system.cube_mass(k, i),
                                                abs=1e-14)

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=20, deadline=None)
    def test_homogeneity_and_monotonicity(self, seed):
        _, system, _ = binary_stack(3)
        r = np.random.default_rng(seed)
        nodes = [(k, i) for k in range(system.levels)
                 for i in range(system.n_cubes(k))]
        picks = r.choice(len(nodes), 4, replace=False)
        lam = {nodes[t]: float(v) for t, v in zip(picks, r.normal(size=4))}
        car = carleson_transform(system, lam)
        car2 = carleson_transform(system, {k: 2.0 * v for k, v in lam.items()})
        for key in car:
            assert car2[key] == pytest.approx(2.0 * car[key], abs=1e-13)
            assert car[key] >= 0.0

    def test_operator_norm_probe_respects_bound(self):
        _, system, _ = binary_stack(4)
        c = system.strict_constant
        for p in (0.5, 1.0, 2.0, 4.0):
            p_hat = min(p, 1.0)
            bound = c / (c**p_hat - 1.0) ** (1.0 / p_hat)
            probe = carleson_operator_norm_probe(system, p, p, samples=100, seed=1)
            assert probe <= bound + 1e-9

    def test_single_cube_ratio_geometric_bound(self):
        _, system, _ = binary_stack(4)
        c = system.strict_constant
        for p in (1.0, 2.0):
            lam = {(3, 2): 1.0}
            car = carleson_transform(system, lam)
            num = lorentz_sequence_norm(np.array(list(car.values())), p, p)
            den = lorentz_sequence_norm(np.array(list(lam.values())), p, p)
            assert num / den <= (c**p / (c**p - 1.0)) ** (1.0 / p) + 1e-9
