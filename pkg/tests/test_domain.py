from itertools import combinations
from math import comb, prod

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cartan import domain as D
from cartan.domain import DomainSpec, MatrixPoint, Signature


@pytest.mark.parametrize("r,b,d,p,nu", [(1, 2, 3, 4, 3), (2, 0, 4, 4, 2), (2, 1, 6, 5, 3)])
def test_make_domain(r, b, d, p, nu):
    dom = D.make_domain(r, b)
    assert (dom.d, dom.genus, dom.hardy_nu, dom.a) == (d, p, nu, 2)
    assert dom.genus == r + (r + b)


@pytest.mark.parametrize("r,b", [(0, 1), (-1, 0), (1, -1)])
def test_make_domain_rejects(r, b):
    with pytest.raises(ValueError):
        D.make_domain(r, b)


def test_signature_validation():
    assert Signature.ell(2, 3) == (1, 1, 0)
    with pytest.raises(ValueError):
        Signature([0, 1])
    with pytest.raises(ValueError):
        Signature([1, -1])


@pytest.mark.parametrize("x,s,val", [(7.3, (0, 0), 1.0), (-1, (1, 1), 2.0), (3, (2, 1), 24.0)])
def test_pochhammer_examples(x, s, val):
    assert D.pochhammer(x, Signature(s), 2) == pytest.approx(val)


@given(st.floats(-5, 5), st.integers(1, 5))
def test_pochhammer_ell_is_product_of_shifted_factors(x, ell):
    # (x)_(ell) for a=2: one factor per row, shifted down by the row index
    expected = prod(x - j for j in range(ell))
    assert D.pochhammer(x, Signature.ell(ell, 5), 2) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_singular_values_examples(rng):
    z = np.zeros((2, 3))
    z[0, 0], z[1, 1] = 0.3, 0.7
    np.testing.assert_allclose(D.singular_values(z), [0.7, 0.3])
    np.testing.assert_allclose(D.singular_values(np.zeros((2, 2))), [0, 0])
    m = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    ev = np.sort(np.linalg.eigvalsh(m @ m.conj().T))[::-1]
    np.testing.assert_allclose(D.singular_values(m) ** 2, ev, atol=1e-10)
    with pytest.raises(ValueError):
        D.singular_values(np.array([[np.nan, 0]]))


def test_matrix_point_roundtrip_and_errors(rng):
    z = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    p = MatrixPoint(z)
    assert p.spectral_norm == pytest.approx(np.linalg.norm(z, 2))
    q = MatrixPoint.from_json(p.to_json())
    np.testing.assert_array_equal(q.matrix, p.matrix)
    assert p.domain() == DomainSpec(2, 1)
    with pytest.raises(ValueError):
        MatrixPoint(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        MatrixPoint.from_json({"rows": 2, "cols": 2, "re": [0], "im": [0]})
    with pytest.raises(ValueError):
        MatrixPoint.from_json({"rows": 2})


def test_elementary_symmetric_examples():
    assert D.elementary_symmetric(0, [5.0, 6.0]) == 1
    assert D.elementary_symmetric(1, [1.5, 2.0, 3.0]) == pytest.approx(6.5)
    assert D.elementary_symmetric(2, [2, 3, 4]) == pytest.approx(26)
    with pytest.raises(ValueError):
        D.elementary_symmetric(3, [1, 2])


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6))
def test_esym_matches_subset_sums(t):
    brute = [sum(prod(c) for c in combinations(t, l)) for l in range(len(t) + 1)]
    np.testing.assert_allclose(D.esym_all(t), brute, atol=1e-9)


def test_leading_ones_examples():
    np.testing.assert_allclose(D.leading_ones_residual([1, 1, 0.3], 2), 0, atol=1e-14)
    res = D.leading_ones_residual([0.9, 0.2], 1)
    assert res[0] == pytest.approx(-0.1)
    assert np.max(np.abs(res)) > 0.01
    np.testing.assert_allclose(D.leading_ones_residual(np.ones(4), 4), 0, atol=1e-14)
    with pytest.raises(ValueError):
        D.leading_ones_residual([1, 1], 3)


@given(st.integers(1, 6).flatmap(lambda r: st.tuples(
    st.just(r), st.integers(1, r), st.integers(0, r),
    st.lists(st.floats(0, 0.999), min_size=r, max_size=r))))
def test_residual_vanishes_iff_leading_ones(case):
    r, q, ones, tail = case
    t = np.sort(np.concatenate([np.ones(ones), tail[: r - ones]]))[::-1]
    res = D.leading_ones_residual(t, q)
    # brute force both sides of the identity
    full = [sum(prod(c) for c in combinations(t, l)) for l in range(r + 1)]
    rest = [sum(prod(c) for c in combinations(t[q:], l)) for l in range(r - q + 1)]
    brute = [full[l] - sum(comb(q, i) * rest[l - i] for i in range(max(l - (r - q), 0), min(q, l) + 1))
             for l in range(1, r + 1)]
    np.testing.assert_allclose(res, brute, atol=1e-12)
    assert (np.max(np.abs(res)) <= 1e-12) == (ones >= q)


@pytest.mark.parametrize("r,b", [(1, 0), (1, 3), (2, 1), (3, 0)])
def test_haar_samples_are_coisometries(r, b):
    z = D.haar_sample_shilov(DomainSpec(r, b), 500, seed=3)
    gram = z @ np.conj(np.swapaxes(z, -1, -2))
    assert np.abs(gram - np.eye(r)).max() <= 1e-12
    np.testing.assert_allclose(np.sum(np.abs(z) ** 2, axis=(1, 2)), r, atol=1e-12)


def test_haar_first_entry_second_moment():
    dom = DomainSpec(2, 1)
    z = D.haar_sample_shilov(dom, 100_000, seed=11)
    v = np.abs(z[:, 0, 0]) ** 2
    se = v.std(ddof=1) / np.sqrt(len(v))
    assert abs(v.mean() - 1 / dom.cols) <= 4 * se


def test_haar_stream_independent_of_threads(monkeypatch):
    dom = DomainSpec(2, 1)
    n = 2 * D.SAMPLE_BLOCK + 17
    monkeypatch.setenv("CARTAN_THREADS", "1")
    a = D.haar_sample_shilov(dom, n, 5)
    monkeypatch.setenv("CARTAN_THREADS", "4")
    b = D.haar_sample_shilov(dom, n, 5)
    assert a.tobytes() == b.tobytes()
    assert a.shape == (n, 2, 3)
    with pytest.raises(ValueError):
        D.haar_sample_shilov(dom, 0, 1)


def test_haar_unitary_phase_convention(rng):
    u = D.haar_unitary(4, rng)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    # the QR of a phase-fixed unitary has a positive real diagonal
    _, r = np.linalg.qr(u)
    d = np.diag(r)
    np.testing.assert_allclose(np.abs(d), 1, atol=1e-12)


def test_random_point_has_requested_singular_values(rng):
    dom = DomainSpec(3, 2)
    t = np.array([0.9, 0.5, 0.1])
    np.testing.assert_allclose(D.singular_values(D.random_point(dom, t, rng)), t, atol=1e-12)
def test_interface_alias():
    assert D.lemma_a1_residual is D.leading_ones_residual
