"""Tests for dyadic cubes, lattices and grid functions."""

import numpy as np
import pytest

from cbdom.dyadic.functions import (
    GridFunction,
    average,
    block_sums,
    cell_level_averages,
    expand,
    group_children,
    level_averages,
    martingale_difference,
    martingale_differences,
    maximal_function,
    ungroup_children,
)
from cbdom.dyadic.lattice import DyadicCube, DyadicLattice, GridBox
from cbdom.errors import DomainError
from tests.conftest import random_function


class TestCubes:
    def test_children_tile_parent(self):
        Q = DyadicCube(2, (1, 3))
        kids = Q.children()
        assert len(kids) == 4
        assert all(Q.contains(R) for R in kids)
        assert sum(R.volume for R in kids) == Q.volume

    def test_parent_and_ancestor(self):
        Q = DyadicCube(3, (5,))
        assert Q.parent() == DyadicCube(2, (2,))
        assert Q.ancestor(0) == DyadicCube(0, (0,))

    def test_root_has_no_parent(self):
        with pytest.raises(DomainError):
            DyadicCube(0, (0,)).parent()

    def test_index_out_of_range(self):
        with pytest.raises(DomainError):
            DyadicCube(1, (2,))

    def test_box_of_cube(self):
        box = DyadicCube(1, (1, 0)).box(3)
        assert box.lo == (4, 0)
        assert box.hi == (8, 4)
        assert box.n_cells == 16


class TestLattice:
    def test_level_caps(self):
        DyadicLattice(1, 14)
        DyadicLattice(2, 7)
        with pytest.raises(DomainError):
            DyadicLattice(1, 15)
        with pytest.raises(DomainError):
            DyadicLattice(2, 8)
        with pytest.raises(DomainError):
            DyadicLattice(3, 2)

    def test_volume_sums_to_one(self, square):
        assert square.cell_volume * square.n_cells == 1.0

    def test_separation_levels(self):
        lat = DyadicLattice(1, 10, (1, 2))
        assert lat.levels() == [1, 4, 7, 10]
        assert lat.cubes(2) == []

    def test_invalid_separation(self):
        with pytest.raises(DomainError):
            DyadicLattice(1, 6, (3, 2))

    def test_check_cube_outside_sublattice(self):
        lat = DyadicLattice(1, 6, (0, 1))
        with pytest.raises(DomainError):
            lat.check_cube(DyadicCube(1, (0,)))

    def test_cell_indices_row_major(self, square):
        cells = square.cell_indices(DyadicCube(1, (0, 1)))
        assert len(cells) == 64
        assert cells[0] == 8
        assert cells[1] == 9

    def test_cell_cube_roundtrip(self, square):
        Q = DyadicCube(2, (3, 1))
        for cell in square.cell_indices(Q):
            assert square.cell_cube(cell, 2) == Q

    def test_enlarge_clips(self, line):
        box = line.enlarge(DyadicCube(2, (0,)))
        assert box.lo == (0,)
        assert box.hi == (32,)
        assert box.side == 48

    def test_enlarge_rejects_even_factor(self, line):
        with pytest.raises(DomainError):
            line.enlarge(line.root, factor=2)

    def test_box_outside_grid(self, line):
        with pytest.raises(DomainError):
            line.check_region(GridBox((60,), (70,)))


class TestGridFunction:
    def test_rejects_wrong_shape(self, line):
        with pytest.raises(DomainError):
            GridFunction(line, np.zeros(10))

    def test_rejects_nan(self, line):
        values = np.zeros(line.n_cells)
        values[3] = np.nan
        with pytest.raises(DomainError):
            GridFunction(line, values)

    def test_values_are_read_only(self, line):
        f = GridFunction.zeros(line)
        with pytest.raises(ValueError):
            f.values[0, 0] = 1.0

    def test_linear_ops(self, line, rng):
        f = random_function(line, rng)
        g = random_function(line, rng)
        np.testing.assert_allclose((2.0 * f + g - f).values, (f + g).values)

    def test_dimension_mismatch(self, line, rng):
        with pytest.raises(DomainError):
            random_function(line, rng, d=2) + random_function(line, rng, d=3)

    def test_l2_norm_of_indicator(self, line):
        f = GridFunction.indicator(line, DyadicCube(2, (1,)))
        assert f.l2_norm() == pytest.approx(0.5)

    def test_scalar_requires_d1(self, line, rng):
        with pytest.raises(DomainError):
            random_function(line, rng).scalar


class TestAverages:
    def test_average_of_indicator(self, square):
        f = GridFunction.indicator(square, DyadicCube(2, (0, 0)))
        assert average(f, square.root)[0] == 1 / 16
        assert average(f, DyadicCube(1, (0, 0)))[0] == 0.25

    def test_level_averages_match_direct(self, square, rng):
        f = random_function(square, rng)
        avg = level_averages(f, square, 2)
        for Q in square.cubes(2):
            np.testing.assert_allclose(avg[Q.index], average(f, Q), atol=1e-14)

    def test_parent_is_mean_of_children(self, line, rng):
        f = random_function(line, rng)
        for Q in line.cubes(3):
            kids = np.mean([average(f, R) for R in Q.children()], axis=0)
            np.testing.assert_allclose(kids, average(f, Q), atol=1e-14)

    def test_block_sums_and_expand(self, square):
        grid = np.ones(square.shape)
        sums = block_sums(grid, 2, 4, 1)
        assert sums.shape == (2, 2)
        assert np.all(sums == 64)
        assert expand(sums, 2, 4, 1).shape == square.shape

    def test_group_ungroup(self, square, rng):
        a = rng.normal(size=(8, 8))
        grouped = group_children(a, 2, 1, 2)
        assert grouped.shape == (4, 16)
        np.testing.assert_array_equal(ungroup_children(grouped, 2, 1, 2), a)

    def test_cell_level_averages_constant_on_cubes(self, line, rng):
        f = random_function(line, rng)
        avg = cell_level_averages(f, 2)
        cells = line.cell_indices(DyadicCube(2, (1,)))
        np.testing.assert_allclose(avg[cells], np.tile(avg[cells[0]], (len(cells), 1)))


class TestMartingale:
    def test_difference_has_mean_zero(self, line, rng):
        f = random_function(line, rng)
        R = DyadicCube(2, (1,))
        diff = martingale_difference(f, R)
        np.testing.assert_allclose(average(diff, R), 0.0, atol=1e-14)
        outside = np.setdiff1d(np.arange(line.n_cells), line.cell_indices(R))
        assert not np.any(diff.values[outside])

    def test_level_array_matches_single(self, line, rng):
        f = random_function(line, rng)
        all_diffs = martingale_differences(f, 2)
        single = martingale_difference(f, DyadicCube(2, (3,)))
        for child in DyadicCube(2, (3,)).children():
            np.testing.assert_allclose(all_diffs[child.index], average(single, child),
                                       atol=1e-14)

    def test_no_difference_at_finest_level(self, line, rng):
        with pytest.raises(DomainError):
            martingale_differences(random_function(line, rng), line.max_level)


class TestMaximal:
    def test_dominates_function(self, line, rng):
        f = GridFunction(line, rng.normal(size=line.n_cells))
        M = maximal_function(f, line.root)
        assert np.all(M.scalar >= np.abs(f.scalar) - 1e-14)

    def test_zero_off_cube(self, line, rng):
        f = GridFunction(line, rng.normal(size=line.n_cells))
        Q = DyadicCube(1, (0,))
        M = maximal_function(f, Q)
        assert not np.any(M.scalar[32:])

    def test_constant_function(self, line):
        M = maximal_function(GridFunction.constant(line, 2.0), line.root)
        np.testing.assert_allclose(M.scalar, 2.0)
