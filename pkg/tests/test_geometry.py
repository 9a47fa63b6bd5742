"""Tests for small-matrix algebra, direction nets, zonotopes and John ellipsoids."""

import numpy as np
import pytest

from cbdom.dyadic.functions import GridFunction, average
from cbdom.dyadic.lattice import DyadicCube, DyadicLattice
from cbdom.errors import CertificateError, DomainError, NotInvertibleError, NotPSDError
from cbdom.geometry.john import john_ellipsoid, principal_axes
from cbdom.geometry.nets import direction_net, random_directions
from cbdom.geometry.representation import rank_one_representation
from cbdom.geometry.smallmat import (
    SymMatrix,
    eig_decompose,
    hs_norm,
    mat_inv,
    mat_inv_sqrt,
    mat_sqrt,
    op_norm,
    sandwich_norm_sq,
)
from cbdom.geometry.zonotope import (
    INDETERMINATE,
    INSIDE,
    MEMBERSHIP_MAX_ITER,
    MEMBERSHIP_TOL,
    OUTSIDE,
    MembershipCertificate,
    Zonotope,
    body_average,
)
from tests.conftest import random_function


def _random_psd(rng, d, n=None):
    shape = (d, d) if n is None else (n, d, d)
    A = rng.normal(size=shape)
    return A @ np.swapaxes(A, -1, -2) + 0.1 * np.eye(d)


# ---- Small matrices ----

class TestSmallMat:
    def test_eig_reconstructs(self, rng):
        A = _random_psd(rng, 4)
        vals, vecs = eig_decompose(A)
        assert np.all(np.diff(vals) <= 0)
        np.testing.assert_allclose(vecs @ np.diag(vals) @ vecs.T, A, atol=1e-12 * op_norm(A))
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(4), atol=1e-12)

    def test_sqrt_squares_back(self, rng):
        A = _random_psd(rng, 3, n=10)
        R = mat_sqrt(A)
        np.testing.assert_allclose(R @ R, A, atol=1e-10 * np.max(op_norm(A)))

    def test_inverse_and_inverse_sqrt(self, rng):
        A = _random_psd(rng, 3)
        np.testing.assert_allclose(mat_inv(A) @ A, np.eye(3), atol=1e-9)
        S = mat_inv_sqrt(A)
        np.testing.assert_allclose(S @ A @ S, np.eye(3), atol=1e-9)

    def test_not_psd(self):
        with pytest.raises(NotPSDError):
            mat_sqrt(np.diag([1.0, -1.0]))

    def test_tiny_negative_is_zero(self):
        R = mat_sqrt(np.diag([1.0, -1e-13]))
        np.testing.assert_allclose(R, np.diag([1.0, 0.0]))

    def test_singular_inverse(self):
        with pytest.raises(NotInvertibleError):
            mat_inv(np.diag([1.0, 0.0]))

    def test_pseudo_inverse(self):
        np.testing.assert_allclose(mat_inv(np.diag([4.0, 0.0]), pseudo=True),
                                   np.diag([0.25, 0.0]))

    def test_op_norm_matches_svd(self, rng):
        A = rng.normal(size=(4, 4))
        assert op_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-10)

    def test_hs_norm(self):
        assert hs_norm(np.eye(3)) == pytest.approx(np.sqrt(3))

    def test_sandwich(self, rng):
        A, B = _random_psd(rng, 2), _random_psd(rng, 2)
        direct = op_norm(mat_sqrt(A) @ mat_sqrt(B)) ** 2
        assert sandwich_norm_sq(A, B) == pytest.approx(direct, rel=1e-9)

    def test_symmatrix_rejects_large(self):
        with pytest.raises(DomainError):
            SymMatrix(np.eye(5))

    def test_symmatrix_psd(self):
        assert SymMatrix(np.eye(2)).is_psd()
        assert not SymMatrix(np.diag([1.0, -1.0])).is_psd()


# ---- Nets ----

class TestNets:
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_unit_length(self, k):
        net = direction_net(k, 200)
        assert net.shape == (200, k)
        np.testing.assert_allclose(np.linalg.norm(net, axis=1), 1.0)

    def test_default_sizes(self):
        assert len(direction_net(2)) == 720
        assert len(direction_net(3)) == 2048

    def test_scalar_net(self):
        np.testing.assert_array_equal(direction_net(1), np.ones((1, 1)))

    def test_no_net_beyond_four(self):
        with pytest.raises(DomainError):
            direction_net(5, 10)

    def test_random_directions(self, rng):
        E = random_directions(rng, 50, 3)
        np.testing.assert_allclose(np.linalg.norm(E, axis=1), 1.0)


# ---- Zonotopes ----

class TestZonotope:
    def test_support_matches_vertices(self, rng):
        Z = Zonotope(rng.normal(size=(6, 2)))
        E = direction_net(2, 64)
        brute = np.max(E @ Z.sign_points().T, axis=1)
        np.testing.assert_allclose(Z.support(E), brute, atol=1e-12)

    def test_support_is_symmetric(self, rng):
        Z = Zonotope(rng.normal(size=(5, 3)))
        E = direction_net(3, 100)
        np.testing.assert_allclose(Z.support(E), Z.support(-E))

    def test_contains_generator_sum(self, rng):
        G = rng.normal(size=(4, 2))
        Z = Zonotope(G)
        assert Z.contains(0.5 * G.sum(axis=0)).status == INSIDE

    def test_outside_along_direction(self, rng):
        Z = Zonotope(rng.normal(size=(8, 2)))
        e = np.array([0.6, 0.8])
        x = 1.01 * Z.support(e) * e
        assert Z.contains(x).status == OUTSIDE
        gap, _ = Z.separation(x, direction_net(2, 3600))
        assert gap > 0

    def test_zero_body(self):
        Z = Zonotope.zero(2)
        assert Z.is_zero()
        assert Z.contains(np.zeros(2)).inside
        assert not Z.contains(np.array([1e-3, 0.0])).inside

    def test_minkowski_sum(self, rng):
        A = Zonotope(rng.normal(size=(3, 2)))
        B = Zonotope(rng.normal(size=(2, 2)))
        e = direction_net(2, 32)
        np.testing.assert_allclose((A + B).support(e), A.support(e) + B.support(e))

    def test_wrong_dimension(self):
        with pytest.raises(DomainError):
            Zonotope.zero(2).minkowski_sum(Zonotope.zero(3))

    def test_vertex_enumeration_limit(self, rng):
        with pytest.raises(DomainError):
            Zonotope(rng.normal(size=(13, 2))).sign_points()

    def test_body_average_contains_average(self, rng):
        lat = DyadicLattice(1, 5)
        f = random_function(lat, rng)
        Q = DyadicCube(1, (1,))
        Z = body_average(f, Q)
        assert Z.m == 16
        assert Z.contains(average(f, Q)).inside

    def test_body_average_of_scalar(self):
        lat = DyadicLattice(1, 3)
        f = GridFunction(lat, np.arange(8.0))
        Z = body_average(f, lat.root)
        assert Z.support(np.ones(1)) == pytest.approx(np.arange(8.0).mean())


# ---- John ellipsoids ----

class TestJohn:
    @pytest.mark.parametrize("d", [2, 3])
    def test_sandwich(self, rng, d):
        Z = Zonotope(rng.normal(size=(10, d)))
        cert = john_ellipsoid(Z)
        assert cert.inner_ok
        assert cert.outer_ok

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_sandwich_on_fresh_directions(self, d, seed):
        rng = np.random.default_rng(seed)
        Z = Zonotope(rng.normal(size=(6 + 2 * seed, d)))
        cert = john_ellipsoid(Z)
        E = random_directions(np.random.default_rng(100 + seed), 500, d)
        ratios = Z.support(E) / cert.support(E)
        assert ratios.min() * (1.0 + 1e-5) >= 1.0
        assert ratios.max() <= np.sqrt(d) * (1.0 + 1e-4)

    def test_segment(self):
        cert = john_ellipsoid(Zonotope.segment([3.0, 4.0]))
        assert cert.dim == 1
        assert cert.gauge(np.array([3.0, 4.0])) == pytest.approx(1.0)
        assert cert.gauge(np.array([1.0, 0.0])) == float("inf")

    def test_square_is_disc(self):
        cert = john_ellipsoid(Zonotope(np.eye(2)))
        np.testing.assert_allclose(cert.M, np.eye(2), atol=1e-3)

    def test_square_corner_slack(self):
        Z = Zonotope(np.eye(2))
        cert = john_ellipsoid(Z)
        diagonals = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
        E = np.vstack([direction_net(2, 256), diagonals])
        ratios = Z.support(E) / cert.support(E)
        assert abs(ratios.max() - np.sqrt(2.0)) <= 1e-6

    def test_zero_body(self):
        with pytest.raises(DomainError):
            john_ellipsoid(Zonotope.zero(2))

    def test_principal_axes_padded(self):
        cert = john_ellipsoid(Zonotope.segment([0.0, 2.0, 0.0]))
        axes = principal_axes(cert)
        assert len(axes) == 3
        assert axes[0][1] == pytest.approx(2.0)
        assert axes[1][1] == 0.0


class TestRankOne:
    def test_reconstructs_member(self, rng):
        lat = DyadicLattice(1, 4)
        f = random_function(lat, rng)
        Q = lat.root
        g = GridFunction.constant(lat, 0.5 * average(f, Q))
        rep = rank_one_representation(f, Q, g)
        assert rep.reconstruction_error <= 1e-8
        cells = lat.cell_indices(Q)
        recon = sum(np.outer(rep.psi[i].scalar[cells], rep.vectors[i]) for i in range(2))
        np.testing.assert_allclose(recon, g.values[cells], atol=1e-8)

    def test_rejects_outside_point(self, rng):
        lat = DyadicLattice(1, 4)
        f = random_function(lat, rng)
        Z = body_average(f, lat.root)
        e = np.array([1.0, 0.0])
        g = GridFunction.constant(lat, 2.0 * Z.support(e) * e)
        with pytest.raises(DomainError):
            rank_one_representation(f, lat.root, g)

    def test_zero_body(self):
        lat = DyadicLattice(1, 3)
        f = GridFunction.zeros(lat, 2)
        rep = rank_one_representation(f, lat.root, GridFunction.zeros(lat, 2))
        assert rep.bound == 0.0

    @pytest.mark.parametrize("d", [2, 3])
    def test_vertices_of_body(self, d):
        rng = np.random.default_rng(7 + d)
        lat = DyadicLattice(1, 4)
        f = random_function(lat, rng, d=d)
        Q = lat.root
        Z = body_average(f, Q)
        signs = rng.choice([-1.0, 1.0], size=(lat.n_cells, Z.m))
        g = GridFunction(lat, signs @ Z.generators)
        rep = rank_one_representation(f, Q, g)
        assert rep.reconstruction_error <= 1e-8
        assert rep.bound <= np.sqrt(d) * (1.0 + 1e-4)

    @pytest.mark.parametrize("d", [2, 3])
    def test_ellipsoid_points_have_unit_coordinates(self, d):
        rng = np.random.default_rng(20 + d)
        lat = DyadicLattice(1, 4)
        f = random_function(lat, rng, d=d)
        Q = lat.root
        cert = john_ellipsoid(body_average(f, Q))
        u = random_directions(rng, lat.n_cells, d) * rng.uniform(0.0, 1.0, size=(lat.n_cells, 1))
        g = GridFunction(lat, u @ cert.M)
        rep = rank_one_representation(f, Q, g, cert=cert)
        assert rep.reconstruction_error <= 1e-8
        assert rep.bound <= 1.0 + 1e-6
        for phi in rep.phi:
            assert np.max(np.abs(phi.scalar)) <= 1.0


class TestUncertifiedMembership:
    @pytest.fixture
    def undecided(self, monkeypatch):
        def contains(self, x, tol=MEMBERSHIP_TOL, max_iter=MEMBERSHIP_MAX_ITER):
            return MembershipCertificate(INDETERMINATE, 1.0, np.zeros(self.m))

        monkeypatch.setattr(Zonotope, "contains", contains)

    def test_axis_not_certified(self, rng, undecided):
        lat = DyadicLattice(1, 4)
        f = random_function(lat, rng)
        cert = john_ellipsoid(body_average(f, lat.root))
        g = GridFunction.zeros(lat, 2)
        with pytest.raises(CertificateError):
            rank_one_representation(f, lat.root, g, cert=cert)

    def test_point_not_certified(self, rng, undecided):
        lat = DyadicLattice(1, 4)
        f = random_function(lat, rng)
        Z = body_average(f, lat.root)
        cert = john_ellipsoid(Z)
        e = np.array([1.0, 0.0])
        g = GridFunction.constant(lat, 2.0 * Z.support(e) * e)
        with pytest.raises(CertificateError):
            rank_one_representation(f, lat.root, g, cert=cert)

    def test_iteration_cap(self):
        assert MEMBERSHIP_MAX_ITER == 20000
