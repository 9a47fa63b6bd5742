"""Tests for Haar shifts, paraproducts, martingale transforms and the CZ kernel."""

import numpy as np
import pytest

from cbdom.dyadic.functions import GridFunction, average, martingale_difference
from cbdom.dyadic.lattice import DyadicCube, DyadicLattice
from cbdom.errors import DomainError
from cbdom.operators import apply_shift
from cbdom.operators.base import IdentityOperator, estimate_norm, operator_norm
from cbdom.operators.cz import CZKernel, cz_apply, maximal_mt, sharp_truncation
from cbdom.operators.haar import (
    HaarShift,
    martingale_transform,
    random_shift,
    separate,
    truncate_shift,
)
from cbdom.operators.paraproduct import make_paraproduct
from tests.conftest import random_function


class TestHaarShift:
    def test_kernel_bound_and_big(self, line, rng):
        T = random_shift(line, 1, rng)
        report = T.kernel_report()
        assert report["bound_ok"]
        assert report["zero_sums"]
        assert report["big_ok"]

    def test_plain_shift_is_not_big(self, line, rng):
        T = random_shift(line, 0, rng, big=False)
        assert T.kind == "haar_shift"
        assert T.kernel_report()["bound_ok"]

    def test_wrong_block_shape(self, line):
        with pytest.raises(DomainError):
            HaarShift(line, 0, {0: np.zeros((1, 3, 3))})

    def test_no_room_for_block(self, line):
        with pytest.raises(DomainError):
            HaarShift(line, 1, {5: np.ones((32, 4, 4))})

    def test_adjoint_pairing(self, square, rng):
        T = random_shift(square, 0, rng)
        f, g = random_function(square, rng), random_function(square, rng)
        lhs = np.sum(T.apply(f).values * g.values)
        rhs = np.sum(f.values * T.adjoint_apply(g).values)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)

    def test_adjoint_shift_matches(self, line, rng):
        T = random_shift(line, 1, rng)
        f = random_function(line, rng)
        np.testing.assert_allclose(T.adjoint().apply(f).values, T.adjoint_apply(f).values,
                                   atol=1e-12)

    def test_componentwise(self, line, rng):
        T = random_shift(line, 0, rng)
        f = random_function(line, rng, d=3)
        Tf = T.apply(f)
        for i in range(3):
            single = T.apply(GridFunction(line, f.values[:, i]))
            np.testing.assert_allclose(Tf.values[:, i], single.scalar, atol=1e-12)

    def test_big_shift_kills_constants(self, line, rng):
        T = random_shift(line, 1, rng)
        assert T.apply(GridFunction.constant(line, [1.0, 2.0])).sup_norm() < 1e-10

    def test_block_action_matches_dense(self):
        lat = DyadicLattice(1, 2)
        K = np.arange(4.0).reshape(1, 2, 2) - 1.5
        T = HaarShift(lat, 0, {0: K})
        f = GridFunction(lat, np.array([1.0, 3.0, -1.0, 5.0]))
        # both halves average 2
        expected = np.repeat(K[0] @ np.array([2.0, 2.0]) * 0.5, 2)
        np.testing.assert_allclose(T.apply(f).scalar, expected)

    def test_apply_shift_alias(self, line, rng):
        T = random_shift(line, 0, rng)
        f = random_function(line, rng)
        np.testing.assert_array_equal(apply_shift(T, f).values, T.apply(f).values)

    def test_grid_mismatch(self, line, rng):
        T = random_shift(line, 0, rng)
        with pytest.raises(DomainError):
            T.apply(random_function(DyadicLattice(1, 5), rng))


class TestSeparation:
    def test_pieces_sum_to_shift(self, line, rng):
        T = random_shift(line, 2, rng)
        pieces = separate(T)
        assert len(pieces) == 3
        f = random_function(line, rng)
        total = sum((P.apply(f) for P in pieces), GridFunction.zeros(line, 2))
        np.testing.assert_allclose(total.values, T.apply(f).values, atol=1e-12)

    def test_pieces_are_separated(self, line, rng):
        for k, P in enumerate(separate(random_shift(line, 1, rng))):
            assert P.separation_class() == k
            assert P.sublattice().separation == (k, 1)

    def test_unseparated_has_no_sublattice(self, line, rng):
        T = random_shift(line, 1, rng)
        assert T.separation_class() is None
        with pytest.raises(DomainError):
            T.sublattice()


class TestTruncation:
    def test_inside_plus_outside(self, line, rng):
        T = random_shift(line, 0, rng)
        G = [DyadicCube(2, (1,)), DyadicCube(1, (1,))]
        f = random_function(line, rng)
        parts = truncate_shift(T, G, "inside").apply(f) + truncate_shift(T, G, "outside").apply(f)
        np.testing.assert_allclose(parts.values, T.apply(f).values, atol=1e-12)

    def test_overlapping_family(self, line, rng):
        T = random_shift(line, 0, rng)
        with pytest.raises(DomainError):
            truncate_shift(T, [DyadicCube(1, (0,)), DyadicCube(2, (0,))])

    def test_unknown_mode(self, line, rng):
        with pytest.raises(DomainError):
            truncate_shift(random_shift(line, 0, rng), [], "middle")


class TestMartingaleTransform:
    def test_is_sign_flip_of_differences(self, line, rng):
        signs = {lv: np.ones(1 << lv) for lv in range(line.max_level)}
        T = martingale_transform(line, rng, signs=signs)
        f = GridFunction(line, rng.normal(size=line.n_cells))
        # all signs +1: sum of all differences = f - <f>
        expected = f.scalar - average(f, line.root)[0]
        np.testing.assert_allclose(T.apply(f).scalar, expected, atol=1e-10)

    def test_single_level_difference(self, line, rng):
        signs = {lv: np.zeros(1 << lv) for lv in range(line.max_level)}
        signs[2] = np.zeros(4)
        signs[2][1] = -1.0
        T = martingale_transform(line, rng, signs=signs)
        f = GridFunction(line, rng.normal(size=line.n_cells))
        expected = -martingale_difference(f, DyadicCube(2, (1,))).scalar
        np.testing.assert_allclose(T.apply(f).scalar, expected, atol=1e-10)

    def test_norm_at_most_one(self, line, rng):
        T = martingale_transform(line, rng)
        assert operator_norm(T, tol=1e-8) <= 1.0 + 1e-6


class TestParaproduct:
    def test_normalized_bounds(self, line, rng):
        b = GridFunction(line, rng.normal(size=line.n_cells))
        P = make_paraproduct(b, 1)
        assert P.kernel_report()["bound_ok"]
        assert operator_norm(P, tol=1e-8) <= 2 ** -0.5 * (1.0 + 1e-5)

    def test_order_zero_formula(self):
        lat = DyadicLattice(1, 3)
        b = GridFunction(lat, np.array([1.0, 0, 0, 0, 0, 0, 0, 0]))
        P = make_paraproduct(b, 0, normalize=False)
        f = GridFunction.constant(lat, 1.0)
        # with f = 1 the paraproduct is b - <b>
        np.testing.assert_allclose(P.apply(f).scalar, b.scalar - 1 / 8, atol=1e-12)

    def test_constant_symbol_is_zero(self, line):
        P = make_paraproduct(GridFunction.constant(line, 2.0), 0)
        assert P.is_zero()
        assert P.notes

    def test_negative_order(self, line):
        with pytest.raises(DomainError):
            make_paraproduct(GridFunction.zeros(line), -1)


class TestNorms:
    def test_identity(self, line):
        assert operator_norm(IdentityOperator(line)) == pytest.approx(1.0, rel=1e-6)

    def test_matches_dense_svd(self, rng):
        lat = DyadicLattice(1, 5)
        T = random_shift(lat, 0, rng)
        dense = np.linalg.svd(T.matrix(), compute_uv=False)[0]
        assert operator_norm(T, tol=1e-10) == pytest.approx(dense, rel=1e-6)

    def test_small_dense_path(self):
        A = np.diag([3.0, 1.0, 2.0])
        assert estimate_norm(lambda v: A @ v, lambda v: A.T @ v, 3) == pytest.approx(3.0)

    def test_empty(self):
        assert estimate_norm(lambda v: v, lambda v: v, 0) == 0.0


class TestCZ:
    @pytest.fixture
    def kernel(self):
        return CZKernel(DyadicLattice(1, 7))

    def test_two_dimensional_rejected(self):
        with pytest.raises(DomainError):
            CZKernel(DyadicLattice(2, 3))

    def test_matches_dense(self, kernel, rng):
        f = random_function(kernel.lattice, rng, d=1)
        dense = kernel.kernel_matrix() @ f.scalar
        np.testing.assert_allclose(cz_apply(kernel, f).scalar, dense, atol=1e-10)

    def test_adjoint(self, kernel, rng):
        f = random_function(kernel.lattice, rng, d=1)
        dense = kernel.kernel_matrix().T @ f.scalar
        np.testing.assert_allclose(kernel.adjoint_apply(f).scalar, dense, atol=1e-10)

    def test_antisymmetric(self, kernel):
        M = kernel.kernel_matrix()
        np.testing.assert_allclose(M, -M.T)

    def test_envelope(self, kernel):
        env = kernel.envelope()
        assert env["size"] == pytest.approx(1.0)
        assert env["smoothness"] > 0

    def test_maximal_zero(self, kernel):
        assert not np.any(maximal_mt(kernel, GridFunction.zeros(kernel.lattice)).values)

    def test_maximal_dominates_far_part(self, kernel, rng):
        f = random_function(kernel.lattice, rng)
        M = maximal_mt(kernel, f).scalar
        n, level = kernel.lattice.n_cells, 3
        s = n >> level
        for q in range(1 << level):
            outside = f.values.copy()
            outside[max(0, (q - 1) * s):(q + 2) * s] = 0.0
            far = kernel.kernel_matrix() @ outside
            cells = np.arange(q * s, (q + 1) * s)
            peak = np.linalg.norm(far[cells], axis=1).max()
            assert np.all(M[cells] >= peak - 1e-9)

    def test_sharp_truncation_single_cell(self, kernel):
        values = np.zeros(kernel.lattice.n_cells)
        values[0] = 1.0
        f = GridFunction(kernel.lattice, values)
        T_sharp = sharp_truncation(kernel, f).scalar
        # at distance 10 cells the largest kept term is the single kernel value
        assert T_sharp[10] == pytest.approx(abs(kernel.weight(np.array([10]))[0]))
