"""Reduced-size end-to-end properties: inclusion, sparseness constants and weight lemmas."""

import numpy as np
import pytest

from cbdom.domination.engine import dominate_cz, dominate_shift
from cbdom.domination.families import make_simple_sparse
from cbdom.domination.stopping import scalar_stopping_step, vector_stopping_step
from cbdom.domination.verify import verify_domination
from cbdom.dyadic.functions import GridFunction
from cbdom.dyadic.lattice import DyadicCube, DyadicLattice
from cbdom.estimates.bounds import bound_ratio
from cbdom.estimates.probes import power_weight_probe
from cbdom.estimates.square import CarlesonSequence, carleson_embedding
from cbdom.geometry.nets import direction_net, random_directions
from cbdom.operators.cz import CZKernel
from cbdom.operators.haar import martingale_transform, random_shift, separate
from cbdom.operators.paraproduct import make_paraproduct
from cbdom.weights.characteristics import (
    a2_matrix,
    a2_scalar,
    a_infty_scalar,
    direction_weight,
    maximal_integral_ratio,
    reverse_holder_check,
)
from cbdom.weights.generators import matrix_rotating, random_log_bounded
from tests.conftest import cbdom_json, random_function, write_config

SEEDS = (0, 1, 2)


def _shifts(lattice, rng):
    yield random_shift(lattice, 0, rng)
    yield random_shift(lattice, 1, rng)
    b = GridFunction(lattice, rng.standard_normal(lattice.n_cells))
    yield make_paraproduct(b, 0)


def _spiky(lattice, rng, cells, size=10.0, noise=1e-3):
    """Small noise plus a few large vectors at the given cells."""
    values = noise * rng.normal(size=(lattice.n_cells, 2))
    values[cells] += size * random_directions(rng, len(cells), 2)
    return GridFunction(lattice, values)


class TestConvexBodyInclusion:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_shifts_and_paraproducts(self, seed):
        lat = DyadicLattice(1, 6)
        rng = np.random.default_rng([seed, 1])
        f = random_function(lat, rng)
        for T in _shifts(lat, rng):
            for P in separate(T):
                if P.is_zero():
                    continue
                res = dominate_shift(P, f, 0.5, threads=1)
                assert res.family.check("eps").value <= 0.5
                Tf = P.apply(f)
                report = verify_domination(f, Tf, res.family, res.constant, threads=1)
                assert report.passed
                assert report.max_residual <= 1e-8 * (1.0 + Tf.sup_norm())

    @pytest.mark.parametrize("seed", SEEDS[:2])
    def test_kernel_weak_sparseness(self, seed):
        lat = DyadicLattice(1, 7)
        rng = np.random.default_rng([seed, 2])
        values = np.zeros((lat.n_cells, 2))
        n = lat.n_side
        values[n // 4:n - n // 4] = rng.normal(size=(n // 2, 2))
        f = GridFunction(lat, values)
        K = CZKernel(lat)
        res = dominate_cz(K, f, 0.5, threads=1)
        assert res.verified
        assert res.family.certificates["weak"].value >= 1.0 / 6.0 - 1e-12
        assert res.verification.max_residual <= 1e-8 * (1.0 + K.apply(f).sup_norm())


class TestStoppingTrees:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_spikes_stop_and_recur(self, seed):
        lat = DyadicLattice(1, 8)
        rng = np.random.default_rng([seed, 7])
        f = _spiky(lat, rng, rng.choice(lat.n_cells, size=4, replace=False))
        results = []
        for T in _shifts(lat, rng):
            for P in separate(T):
                if P.is_zero():
                    continue
                res = dominate_shift(P, f, 0.5, threads=1)
                assert res.verified
                assert res.achieved_eps <= 0.5
                Tf = P.apply(f)
                assert res.verification.max_residual <= 1e-8 * (1.0 + Tf.sup_norm())
                results.append(res)
        assert all(len(res.generations) > 1 for res in results)
        assert all(res.achieved_eps > 0.0 for res in results)

    def test_sub_cube_gets_tail(self):
        lat = DyadicLattice(1, 7)
        rng = np.random.default_rng(8)
        Q0 = DyadicCube(4, (5,))
        values = np.zeros((lat.n_cells, 2))
        values[lat.cell_indices(Q0)] = rng.normal(size=(8, 2))
        f = GridFunction(lat, values)
        P = separate(random_shift(lat, 0, rng))[0]
        res = dominate_shift(P, f, 0.5, Q0=Q0, threads=1)
        assert res.verified
        assert any(m.startswith(f"tail cubes above {Q0}") for m in res.deviations)
        ancestors = [Q0.ancestor(level) for level in range(Q0.level)]
        assert all(R in res.family.cubes for R in ancestors)
        assert res.family.check("eps").value <= 0.5

    def test_kernel_spikes_stop(self):
        lat = DyadicLattice(1, 7)
        rng = np.random.default_rng(9)
        f = _spiky(lat, rng, [40, 64, 88], noise=0.0)
        K = CZKernel(lat)
        res = dominate_cz(K, f, 0.5, threads=1)
        assert res.verified
        assert len(res.generations) > 1
        assert len(res.family) > 1
        assert res.achieved_eps > 0.0
        assert res.family.certificates["weak"].value >= 1.0 / 6.0 - 1e-12
        assert res.verification.max_residual <= 1e-8 * (1.0 + K.apply(f).sup_norm())


class TestSharpnessTrend:
    def test_chain_norm_is_linear_in_a2(self):
        result = power_weight_probe(DyadicLattice(1, 14), threads=1)
        assert result.within_target
        norms = [row["norm"] for row in result.rows]
        assert all(a < b for a, b in zip(norms, norms[1:]))
        assert result.grid_slope is not None
        assert result.grid_slope < result.slope


class TestNormEnvelope:
    def test_ratios_stay_in_a_band(self):
        lat = DyadicLattice(1, 6)
        rng = np.random.default_rng(10)
        S = make_simple_sparse(lat, lat.max_level)
        S.certify(("eps", "dyadic_carleson"))
        T = martingale_transform(lat, rng)
        targets = ("S2", "S3", "lerner", "theorem")
        ratios = {t: [] for t in targets}
        for p1 in (0.2, 0.4, 0.6):
            for p2 in (-0.2, -0.4):
                for twist in (0.5, 2.0):
                    W = matrix_rotating(lat, p1, p2, twist=twist)
                    V = W.inverse_weight()
                    known = {}
                    for t in targets:
                        report = bound_ratio(t, W, V, S=S, T=T, known=known, threads=1)
                        ratios[t].append(report.ratio)
        for t in targets:
            values = np.array(ratios[t])
            assert len(values) == 12
            assert np.all(values > 0)
            assert values.max() <= 10.0 * np.median(values)


class TestScalarCoherence:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_vector_step_matches_scalar_step(self, seed):
        lat = DyadicLattice(1, 7)
        rng = np.random.default_rng([seed, 3])
        T = martingale_transform(lat, rng)
        f = GridFunction(lat, rng.normal(size=lat.n_cells))
        scalar = scalar_stopping_step(T, f, lat.root, 0.5)
        vector = vector_stopping_step(T, f, lat.root, 0.5, threads=1)
        assert vector.cubes == sorted(scalar.cubes)
        assert vector.deviations == []


class TestWeightLemmas:
    @pytest.mark.parametrize("seed", range(8))
    def test_scalar_weight_inequalities(self, seed):
        lat = DyadicLattice(1, 7)
        w = random_log_bounded(lat, 1, np.random.default_rng([seed, 4]), bound=1.5)
        a2 = a2_scalar(w).value
        a_inf = a_infty_scalar(w).value
        assert maximal_integral_ratio(w, lat.root) <= 4.0 * a2
        assert a_inf <= 4.0 * a2
        delta = 2.0 ** (-lat.dim - 1) / a_inf
        assert reverse_holder_check(w, delta).holds

    @pytest.mark.parametrize("seed", range(4))
    def test_direction_weights_below_matrix_a2(self, seed):
        lat = DyadicLattice(1, 6)
        W = random_log_bounded(lat, 2, np.random.default_rng([seed, 5]), bound=1.5)
        bound = a2_matrix(W).value
        for e in direction_net(2, 64):
            assert a2_scalar(direction_weight(W, e)).value <= bound * (1.0 + 1e-10)


class TestCarlesonCorpus:
    def test_no_violations(self):
        rng = np.random.default_rng(6)
        lat = DyadicLattice(1, 6)
        for _ in range(20):
            a = CarlesonSequence.random(lat, rng, density=rng.uniform(0.1, 0.9))
            f = GridFunction(lat, rng.exponential(size=lat.n_cells))
            p = float(rng.uniform(1.1, 4.0))
            assert carleson_embedding(a, f, p).holds


class TestCommandExamples:
    def test_identity_weight_characteristic(self, tmp_path):
        path = write_config(tmp_path / "c.json", command="characteristics", level=5,
                            weights={"W": {"kind": "identity"}}, nets={"d2": 64})
        record, rc = cbdom_json("characteristics", "--config", path)
        assert rc == 0
        assert record["W"]["a2_matrix"]["value"] == pytest.approx(1.0, abs=1e-12)

    def test_dominate_replay(self, tmp_path):
        path = write_config(tmp_path / "c.json", command="dominate", level=6, vector_dim=2,
                            seed=7, operator={"kind": "big_haar_shift", "complexity": 1},
                            nets={"d2": 180})
        first, rc1 = cbdom_json("dominate", "--config", path)
        second, rc2 = cbdom_json("dominate", "--config", path)
        assert rc1 == rc2 == 0
        assert first == second
        assert len(first["pieces"]) == 2
