from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cartan import operators as O
from cartan.domain import DomainSpec, esym_all, haar_sample_shilov, haar_unitary, singular_values
from cartan.fixtures import off_boundary_fixture, shilov_fixture
from cartan.tripledet import MinorIndexPair, minor_pairs, minor_polynomial

from conftest import cgauss


def _per_point_oracle(points, r):
    # residual of a diagonal normal tuple is the worst point residual
    worst = np.zeros(r)
    for p in points:
        t2 = singular_values(p) ** 2
        binom = np.array([comb(r, l) for l in range(1, r + 1)])
        worst = np.maximum(worst, np.abs(esym_all(t2)[1:] - binom))
    return worst


def test_commuting_checks(rng):
    dom = DomainSpec(1, 1)
    diag = O.CommutingTuple(np.stack([np.diag(rng.standard_normal(3)) for _ in range(2)]), dom)
    assert O.check_commuting(diag) == 0
    rand = O.CommutingTuple(cgauss(rng, (2, 3, 3)), dom)
    assert O.check_commuting(rand) > 0.1
    u = haar_unitary(3, rng)
    tri = [u @ np.triu(cgauss(rng, (3, 3))) @ u.conj().T for _ in range(2)]
    tri[1] = tri[0] @ tri[0] + 2 * tri[0]  # a polynomial in the first, so it commutes
    assert O.check_commuting(O.CommutingTuple(np.stack(tri), dom)) <= 1e-12
    with pytest.raises(ValueError):
        O.cartan_isometry_certificate(rand)
    with pytest.raises(ValueError):
        O.CommutingTuple(np.zeros((3, 2, 2)), dom)


def test_tuple_json_roundtrip(rng):
    T, _, _ = shilov_fixture(DomainSpec(2, 1), rng)
    back = O.CommutingTuple.from_json(T.to_json())
    np.testing.assert_array_equal(back.matrices, T.matrices)
    with pytest.raises(ValueError):
        O.CommutingTuple.from_json({"n": 2, "domain": {"r": 1, "b": 0}, "matrices": []})
    with pytest.raises(ValueError):
        O.CommutingTuple.from_json({"n": 2})


def test_hereditary_examples(rng):
    dom = DomainSpec(2, 1)
    T, _, _ = shilov_fixture(dom, rng)
    one = {(0,) * dom.d: 1}
    np.testing.assert_allclose(O.hereditary_apply(one, one, T), np.eye(T.n), atol=1e-14)
    z11 = {(1,) + (0,) * (dom.d - 1): 1}
    np.testing.assert_allclose(O.hereditary_apply(z11, one, T), T[0, 0], atol=1e-14)


@pytest.mark.parametrize("r,b", [(2, 0), (2, 1), (3, 0)])
def test_hereditary_delta_matches_leibniz(r, b, rng):
    dom = DomainSpec(r, b)
    pts = cgauss(rng, (4, r, r + b), 0.5)
    T = O.normal_fixture(pts, dom, [1, 2, 1, 3], haar_unitary(7, rng))
    for ell in range(1, r + 1):
        direct = np.zeros((T.n, T.n), dtype=complex)
        for pair in minor_pairs(r, r + b, ell):
            poly = minor_polynomial(pair, dom)
            m = O.hereditary_apply(poly, poly, T)
            np.testing.assert_allclose(O.operator_minor(T, pair).conj().T @ O.operator_minor(T, pair), m, atol=1e-10)
            direct += m
        np.testing.assert_allclose(O.hereditary_delta_l(T, ell), direct, atol=1e-10)


def test_certificate_examples(rng):
    disc = DomainSpec(1, 0)
    cert = O.cartan_isometry_certificate(O.CommutingTuple(np.full((1, 1, 1, 1), 0.5), disc))
    assert cert.residuals == pytest.approx([0.75]) and not cert.passed
    dom = DomainSpec(2, 0)
    u = haar_unitary(2, rng)
    cert = O.cartan_isometry_certificate(O.normal_fixture([u], dom))
    assert max(cert.residuals) <= 1e-12 and cert.passed
    assert cert.to_json()["pass"] is True


@given(seed=st.integers(0, 2**32 - 1))
def test_certificate_matches_per_point_oracle(seed):
    g = np.random.default_rng(seed)
    dom = DomainSpec(int(g.integers(1, 4)), int(g.integers(0, 3)))
    if g.random() < 0.5:
        T, pts, _ = shilov_fixture(dom, g)
        assert O.cartan_isometry_certificate(T).passed
    else:
        T, pts, _ = off_boundary_fixture(dom, g)
        assert min(O.cartan_isometry_certificate(T).residuals[:1]) >= 0.05
    cert = O.cartan_isometry_certificate(T, tol=1.0)
    np.testing.assert_allclose(cert.residuals, _per_point_oracle(pts, dom.r), atol=1e-10 * max(1, max(cert.residuals)))


def test_normal_fixture_validation(rng):
    dom = DomainSpec(1, 1)
    with pytest.raises(ValueError):
        O.normal_fixture([], dom)
    with pytest.raises(ValueError):
        O.normal_fixture([np.zeros((1, 2))], dom, [0])
    with pytest.raises(ValueError):
        O.normal_fixture([np.zeros((2, 2))], dom)
    T = O.normal_fixture(haar_sample_shilov(dom, 1, 0), dom)
    assert T.n == 1 and O.cartan_isometry_certificate(T).passed


def test_joint_eigenvalues(rng):
    dom = DomainSpec(1, 1)
    a = cgauss(rng, (5, 5))
    pa = a @ a - 3 * a + np.eye(5)
    T = O.CommutingTuple(np.stack([a, pa]), dom)
    pts = O.joint_eigenvalues(T).reshape(5, 2)
    lam = pts[:, 0]
    np.testing.assert_allclose(pts[:, 1], lam**2 - 3 * lam + 1, atol=1e-9)
    oracle = np.linalg.eigvals(a)
    assert np.abs(np.sort_complex(lam) - np.sort_complex(oracle)).max() <= 1e-9
    d = O.CommutingTuple(np.stack([np.diag([1.0, 2.0]), np.diag([3.0, 4.0])]), dom)
    got = O.joint_eigenvalues(d).reshape(2, 2)
    assert sorted(map(tuple, got.real.round(12))) == [(1, 3), (2, 4)]


def test_joint_eigenvalues_rejects_noncommuting(rng):
    T = O.CommutingTuple(cgauss(rng, (2, 4, 4)), DomainSpec(1, 1))
    with pytest.raises(ValueError):
        O.joint_eigenvalues(T)


def test_spectral_radius_examples(rng):
    dom = DomainSpec(2, 0)
    assert O.omega_spectral_radius(O.CommutingTuple(np.zeros((2, 2, 3, 3)), dom)) == 0
    T = O.normal_fixture([np.diag([0.3, 0.2])], dom)
    assert O.omega_spectral_radius(T) == pytest.approx(0.3)
    for _ in range(5):
        T, _, _ = shilov_fixture(DomainSpec(2, 1), rng)
        assert abs(O.omega_spectral_radius(T) - 1) <= 1e-10
        pts = O.joint_eigenvalues(T)
        assert np.linalg.norm(pts, 2, axis=(-2, -1)).max() <= 1 + 1e-8


def test_linear_automorphism(rng):
    dom = DomainSpec(2, 1)
    T, _, _ = shilov_fixture(dom, rng)
    same = O.automorphism_apply_normal(T, O.LinearAuto(np.eye(2), np.eye(3)))
    np.testing.assert_allclose(same.matrices, T.matrices, atol=1e-15)
    moved = O.automorphism_apply_normal(T, O.LinearAuto(haar_unitary(2, rng), haar_unitary(3, rng)))
    assert O.cartan_isometry_certificate(moved).passed
    with pytest.raises(ValueError):
        O.automorphism_apply_normal(T, O.LinearAuto(2 * np.eye(2), np.eye(3)))


def test_mobius_automorphism(rng):
    disc = DomainSpec(1, 0)
    mob = O.BallMobius(np.array([0.5]))
    assert abs(mob([[1.0]])[0, 0]) == pytest.approx(1)
    assert mob([[0.5]])[0, 0] == pytest.approx(0)
    assert mob([[0.0]])[0, 0] == pytest.approx(0.5)
    T = O.normal_fixture([[[1.0]], [[1j]]], disc, [1, 2], haar_unitary(3, rng))
    out = O.automorphism_apply_normal(T, mob)
    assert O.cartan_isometry_certificate(out).passed
    ball = DomainSpec(1, 2)
    a = 0.4 * cgauss(rng, (1, 3)) / 2
    z = haar_sample_shilov(ball, 1, 3)[0]
    img = O.BallMobius(a)(z)
    assert np.linalg.norm(img) == pytest.approx(1)
    np.testing.assert_allclose(O.BallMobius(a)(img), z, atol=1e-12)  # involution
    with pytest.raises(ValueError):
        O.automorphism_apply_normal(O.normal_fixture([[[1.0, 0]]], ball), O.BallMobius(np.array([1.0, 0, 0])))
    with pytest.raises(ValueError):
        O.BallMobius(np.array([0.1])).check(DomainSpec(2, 0))


def test_automorphism_rejects_non_normal():
    disc = DomainSpec(1, 0)
    jordan = O.CommutingTuple(np.array([[[[0, 1], [0, 0]]]], dtype=complex), disc)
    with pytest.raises(ValueError):
        O.automorphism_apply_normal(jordan, O.LinearAuto(np.eye(1), np.eye(1)))


def _brute_dimension(T):
    n = T.n
    cols = []
    for k in range(n * n):
        x = np.zeros(n * n, dtype=complex)
        x[k] = 1
        x = x.reshape(n, n)
        y = sum(t.conj().T @ x @ t for t in T.flat()) - T.domain.r * x
        cols.append(y.reshape(-1))
    s = np.linalg.svd(np.array(cols).T, compute_uv=False)
    return int(np.sum(s <= 1e-8 * max(1, s[0])))


def test_t_toeplitz_examples(rng):
    dom = DomainSpec(2, 1)
    pts = haar_sample_shilov(dom, 2, 7)
    T = O.normal_fixture(pts, dom, [1, 1], haar_unitary(2, rng))
    sol = O.t_toeplitz_solve(T)
    assert len(sol) == 2 == _brute_dimension(T)
    T = O.normal_fixture(pts[:1], dom, [2])
    assert len(O.t_toeplitz_solve(T)) == 4
    T, pts, mult = shilov_fixture(dom, rng)
    sol = O.t_toeplitz_solve(T)
    assert len(sol) == O.spectral_group_dimension(np.repeat(pts, mult, axis=0), dom.r) == _brute_dimension(T)
    for x in sol:
        lhs = sum(t.conj().T @ x @ t for t in T.flat())
        np.testing.assert_allclose(lhs, dom.r * x, atol=1e-9)
    # identity lies in the span
    basis = sol.reshape(len(sol), -1).T
    coef, *_ = np.linalg.lstsq(basis, np.eye(T.n).reshape(-1), rcond=None)
    np.testing.assert_allclose(basis @ coef, np.eye(T.n).reshape(-1), atol=1e-9)


def test_t_toeplitz_rejects_non_isometry():
    T = O.normal_fixture([np.diag([0.5, 0.5])], DomainSpec(2, 0))
    with pytest.raises(ValueError):
        O.t_toeplitz_solve(T)
