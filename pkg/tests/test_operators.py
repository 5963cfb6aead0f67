import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commutator_lab.norms import schatten_lorentz, svd
from commutator_lab.operators import (
    KernelSpec,
    OperatorMatrix,
    _kernel_values,
    admissible_nodes,
    assemble_kernel,
    build_shift,
    commutator,
    conjugate_to_weighted,
    measure_cz_constants,
    measure_nondegeneracy,
    random_shift_coefficients,
    shift_block_singular_values,
    shift_commutator_decomposition,
    shift_coefficient_norm,
    special_shift_coefficients,
    validate_shift_coefficients,
)
from commutator_lab.space import ValidationError, euclidean_grid, four_squares

from conftest import binary_stack, cantor_stack


class TestKernels:
    def test_hilbert_antisymmetric(self):
        g = euclidean_grid(1, 16, 1.0)
        T = assemble_kernel(g, KernelSpec("hilbert"))
        assert np.abs(T.entries + T.entries.T).max() < 1e-15
        assert np.all(np.diag(T.entries) == 0.0)

    def test_cz0_constant_stable_under_refinement(self):
        vals = []
        for pps in (32, 64, 128):
            g = euclidean_grid(1, pps, 1.0 / pps)
            vals.append(measure_cz_constants(g, KernelSpec("hilbert"))["cz0"])
        assert max(vals) / min(vals) <= 1.3  # +-30%

    def test_power_kernel_size_bound(self):
        # |K| V <= sqrt(V(x,y)/V(y,x)) <= sqrt(2) on the line (half-ball clip)
        g = euclidean_grid(1, 32, 1 / 32)
        c = measure_cz_constants(g, KernelSpec("power", eta=1.0))
        assert c["cz0"] <= np.sqrt(2.0) + 1e-9

    def test_four_squares_mask(self):
        fs = four_squares(3)
        K = _kernel_values(fs, KernelSpec("four-squares"))
        quad = np.array(fs.meta["quadrant"])
        for a in range(4):
            for b in range(4):
                blk = K[np.ix_(quad == a, quad == b)]
                coupled = (a == b) or (a == 3 - b)
                if coupled and a != b:
                    assert np.abs(blk).max() > 0
                if not coupled:
                    assert np.abs(blk).max() == 0.0

    def test_kernel_geometry_mismatch(self):
        fs = four_squares(2)
        with pytest.raises(ValidationError):
            assemble_kernel(fs, KernelSpec("hilbert"))
        g = euclidean_grid(1, 4, 1.0)
        with pytest.raises(ValidationError):
            assemble_kernel(g, KernelSpec("beurling"))
        with pytest.raises(ValidationError):
            assemble_kernel(g, KernelSpec("four-squares"))

    def test_truncation_zeroes_annulus_complement(self):
        g = euclidean_grid(1, 16, 1.0)
        T = assemble_kernel(g, KernelSpec("hilbert", truncation=(2.0, 5.0)))
        d = g.dist
        assert np.all(T.entries[(d < 2.0) | (d > 5.0)] == 0.0)

    def test_eta_domain(self):
        with pytest.raises(ValidationError):
            KernelSpec("hilbert", eta=0.0)

    def test_nondegeneracy_measured_positive(self):
        g = euclidean_grid(1, 32, 1 / 32)
        nd = measure_nondegeneracy(g, KernelSpec("hilbert"))
        assert nd > 0.1


class TestCommutator:
    def test_constant_symbol_zero(self, rng):
        g = euclidean_grid(1, 8, 1.0)
        T = assemble_kernel(g, KernelSpec("hilbert"))
        C = commutator(np.full(8, 4.2), T)
        assert np.abs(C.entries).max() == 0.0

    def test_two_by_two_hand_algebra(self):
        t = 0.7
        T = OperatorMatrix(np.array([[0.0, t], [-t, 0.0]]))
        C = commutator(np.array([0.0, 1.0]), T)
        assert np.allclose(C.entries, [[0.0, -t], [-t, 0.0]])

    def test_four_squares_degenerate(self):
        fs = four_squares(3)
        T = assemble_kernel(fs, KernelSpec("four-squares"))
        quad = np.array(fs.meta["quadrant"])
        b = np.where((quad == 0) | (quad == 3), 5.0, -2.0)
        C = commutator(b, T)
        assert np.abs(C.entries).max() <= 1e-14

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=25, deadline=None)
    def test_entry_identity(self, seed):
        r = np.random.default_rng(seed)
        n = 7
        g = euclidean_grid(1, n, 1.0)
        T = assemble_kernel(g, KernelSpec("hilbert"))
        b = r.normal(size=n)
        C = commutator(b, T)
        expect = (b[:, None] - b[None, :]) * T.entries
        assert np.abs(C.entries - expect).max() == 0.0


class TestWeightedConjugation:
    def test_identity_weight(self, rng):
        g = euclidean_grid(1, 8, 1.0)
        T = assemble_kernel(g, KernelSpec("hilbert"))
        Tw = conjugate_to_weighted(T, np.ones(8))
        assert np.abs(Tw.entries - T.entries).max() == 0.0
        assert Tw.frame == "L2(w)"

    def test_rank_one_weighted_s2(self, rng):
        n = 10
        e = rng.normal(size=n)
        h = rng.normal(size=n)
        w = np.exp(rng.normal(size=n) * 0.4)
        T = OperatorMatrix(np.outer(e, h))
        Tw = conjugate_to_weighted(T, w)
        s2 = np.sqrt((svd(Tw.entries).values ** 2).sum())
        expect = np.linalg.norm(np.sqrt(w) * e) * np.linalg.norm(h / np.sqrt(w))
        assert s2 == pytest.approx(expect, rel=1e-12)

    def test_commutator_conjugation_commute(self, rng):
        g = euclidean_grid(1, 8, 1.0)
        T = assemble_kernel(g, KernelSpec("hilbert"))
        b = rng.normal(size=8)
        w = np.exp(rng.normal(size=8) * 0.3)
        A = conjugate_to_weighted(commutator(b, T), w).entries
        B = commutator(b, conjugate_to_weighted(T, w)).entries
        assert np.allclose(A, B, atol=1e-13)

    def test_double_conjugation_rejected(self):
        g = euclidean_grid(1, 4, 1.0)
        T = assemble_kernel(g, KernelSpec("hilbert"))
        Tw = conjugate_to_weighted(T, np.full(4, 2.0))
        with pytest.raises(ValidationError):
            conjugate_to_weighted(Tw, np.full(4, 2.0))


class TestShifts:
    def test_complexity_00_root_block(self, rng, binary5):
        space, system, basis = binary5
        coeffs = random_shift_coefficients(system, basis, 0, 0, rng)
        root_nodes = [node for node in coeffs.blocks if node[0] == 0]
        for node in root_nodes:
            blk = coeffs.blocks[node]
            mX = system.cube_mass(0, 0)
            assert blk["a"].shape[0] <= mX  # block is (M_X-1) x (M_X-1) here
        S = build_shift(system, basis, coeffs)
        assert np.linalg.matrix_rank(
            build_shift(system, basis, coeffs).entries) <= sum(
                min(*b["a"].shape) for b in coeffs.blocks.values())

    def test_s2_identity(self, rng, binary5):
        space, system, basis = binary5
        coeffs = random_shift_coefficients(system, basis, 1, 1, rng)
        S = build_shift(system, basis, coeffs)
        s2 = (svd(S.entries).values ** 2).sum()
        blocks = sum(np.linalg.norm(b["a"]) ** 2 for b in coeffs.blocks.values())
        assert s2 == pytest.approx(blocks, rel=1e-12)

    def test_direct_sum_singular_values(self, rng, binary5):
        space, system, basis = binary5
        for (i, j) in [(1, 1), (2, 1), (0, 2)]:
            coeffs = random_shift_coefficients(system, basis, i, j, rng)
            S = build_shift(system, basis, coeffs)
            sv_blocks = np.sort(np.concatenate(
                shift_block_singular_values(basis, coeffs)))[::-1]
            sv_full = svd(S.entries).values[:len(sv_blocks)]
            assert np.abs(sv_full - sv_blocks).max() < 1e-10
            for p in (1.0, 2.0, 4.0):
                lhs = schatten_lorentz(svd(S.entries), p, p) ** p
                rhs = sum(np.sum(np.linalg.svd(b["a"], compute_uv=False) ** p)
                          for b in coeffs.blocks.values())
                assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_schatten_bound_p_ge_2(self, rng, binary5):
        space, system, basis = binary5
        for (i, j) in [(0, 0), (1, 2), (2, 2)]:
            coeffs = random_shift_coefficients(system, basis, i, j, rng,
                                               saturated=True)
            S = build_shift(system, basis, coeffs)
            sv = svd(S.entries)
            for p in (2.0, 3.0, 4.0):
                assert schatten_lorentz(sv, p, p) <= \
                    shift_coefficient_norm(coeffs, p, p) * (1 + 1e-12)

    def test_haar_roundtrip(self, rng, binary5):
        space, system, basis = binary5
        coeffs = random_shift_coefficients(system, basis, 1, 2, rng)
        S = build_shift(system, basis, coeffs)
        node, blk = next(iter(coeffs.blocks.items()))
        r, c = blk["rows"][0], blk["cols"][0]
        val = basis.frame[:, r] @ S.entries @ basis.frame[:, c]
        assert val == pytest.approx(blk["a"][0, 0], abs=1e-13)

    def test_rank_cap_and_child_count(self, binary6, rng):
        space, system, basis = binary6
        # descendant count: #ch^i <= C * delta^{-i*Delta} with Delta ~ 1
        for i in (1, 2, 3):
            for k in range(system.levels - i):
                for idx in range(system.n_cubes(k)):
                    cnt = len(system.descendants(k, idx, i))
                    assert cnt <= 2.0 * 2.0 ** (i * 1.0)
        coeffs = random_shift_coefficients(system, basis, 2, 1, rng)
        for (k, idx), blk in coeffs.blocks.items():
            rank = np.linalg.matrix_rank(blk["a"])
            # rank A_(R,k) <= #ch^(i^j)(R,k) with i^j = min(2, 1) = 1
            assert rank <= len(system.descendants(k, idx, 1))

    def test_out_of_range_coefficients_rejected(self, binary5):
        space, system, basis = binary5
        coeffs = random_shift_coefficients(system, basis, 1, 1,
                                           np.random.default_rng(0))
        # move a block to an inadmissible node
        bad_node = (system.levels - 1, 0)
        blk = next(iter(coeffs.blocks.values()))
        coeffs.blocks[bad_node] = blk
        with pytest.raises(ValidationError):
            validate_shift_coefficients(system, coeffs)


class TestShiftCommutator:
    def test_constant_symbol_all_parts_vanish(self, rng, binary5):
        space, system, basis = binary5
        coeffs = random_shift_coefficients(system, basis, 1, 1, rng)
        dec = shift_commutator_decomposition(np.full(space.n, 3.0), coeffs,
                                             system, basis)
        assert np.abs(dec["pi_part"]).max() < 1e-12
        assert all(np.abs(G).max() < 1e-12 for G in dec["gamma_parts"])
        assert np.abs(dec["special_shift"]).max() < 1e-12

    def test_haar_symbol_identity(self, rng):
        space, system, basis = binary_stack(2)
        b = basis.haar_pointwise(0)  # h_X
        coeffs = random_shift_coefficients(system, basis, 1, 1, rng)
        dec = shift_commutator_decomposition(b, coeffs, system, basis)
        assert dec["residual"] <= 1e-10

    def test_random_symbols_identity(self, rng):
        for stack in (binary_stack(4), cantor_stack(4)):
            space, system, basis = stack
            for (i, j) in [(0, 0), (1, 1), (2, 0)]:
                coeffs = random_shift_coefficients(system, basis, i, j, rng)
                b = rng.normal(size=space.n)
                dec = shift_commutator_decomposition(b, coeffs, system, basis)
                assert dec["residual"] <= 1e-10

    def test_special_shift_block_bound(self, rng, binary5):
        # |a'_{(R,k)}|_F <= 2 * C_N * (avg_R |b - <b>_R|^2)^(1/2) on binary
        # trees (single cancellative function per cube)
        space, system, basis = binary5
        coeffs = random_shift_coefficients(system, basis, 1, 1, rng,
                                           saturated=True)
        for _ in range(100):
            b = rng.normal(size=space.n)
            special = special_shift_coefficients(system, basis, coeffs, b)
            for (k, idx), blk in special.blocks.items():
                pts = system.cubes[k][idx]
                avg = np.average(b[pts], weights=space.mass[pts])
                osc2 = np.sqrt(np.average((b[pts] - avg) ** 2,
                                          weights=space.mass[pts]))
                assert np.linalg.norm(blk["a"]) <= 2.0 * osc2 + 1e-12
