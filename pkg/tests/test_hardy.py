from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cartan import hardy as H
from cartan.domain import DomainSpec
from cartan.tripledet import MinorIndexPair

DISC = DomainSpec(1, 0)
BALL3 = DomainSpec(1, 2)
U2 = DomainSpec(2, 0)


@pytest.fixture(scope="module")
def u2_oracle():
    return H.make_oracle(U2, H.MC, 4, n=60_000, seed=21, symmetrize=False)


def _pair(oracle, a, b):
    val, se = oracle(np.array(a), np.array(b))
    return complex(val), float(se)


def test_probability_normalization(u2_oracle):
    zero = (0,) * 3
    assert _pair(H.ExactRank1Moments(BALL3), zero, zero)[0] == pytest.approx(1, abs=1e-14)
    assert _pair(H.LowDegreeMoments(U2), (0,) * 4, (0,) * 4)[0] == 1
    assert _pair(u2_oracle, (0,) * 4, (0,) * 4)[0] == pytest.approx(1, abs=1e-12)
    phi = H.make_oracle(U2, H.MC, 1, n=5000, seed=3, measure=H.PHI1)
    assert _pair(phi, (0,) * 4, (0,) * 4)[0] == pytest.approx(1, abs=1e-12)


def test_first_moments():
    e1 = (1, 0, 0)
    assert _pair(H.ExactRank1Moments(BALL3), e1, e1)[0] == pytest.approx(1 / 3)
    assert _pair(H.LowDegreeMoments(BALL3), e1, e1)[0] == pytest.approx(1 / 3)
    mc = H.make_oracle(BALL3, H.MC, 2, n=50_000, seed=1, symmetrize=False)
    v, se = _pair(mc, e1, e1)
    assert abs(v - 1 / 3) <= 4 * se


def test_unitary_group_entry(u2_oracle):
    v, se = _pair(u2_oracle, (1, 0, 0, 0), (1, 0, 0, 0))
    assert abs(v - 0.5) <= 4 * se


def test_low_degree_coverage():
    with pytest.raises(ValueError):
        H.LowDegreeMoments(U2)(np.array([2, 0, 0, 0]), np.array([2, 0, 0, 0]))
    with pytest.raises(ValueError):
        H.ExactRank1Moments(U2)


def test_exact_rank1_against_mc():
    mons = H.exponents_up_to(3, 3)
    exact, _ = H.ExactRank1Moments(BALL3)(mons[None], mons[:, None])
    mc = H.make_oracle(BALL3, H.MC, 3, n=100_000, seed=5, symmetrize=False)
    est, se = mc(mons[None], mons[:, None])
    band = 4 * np.maximum(se, 1e-12)
    assert np.all(np.abs(est - exact) <= band)
    # beta-integral closed form for z1^2: 2! 2! / 4!
    assert exact[4, 4].real == pytest.approx(2 * 2 / 24)


def test_mc_is_deterministic_and_thread_independent(monkeypatch):
    monkeypatch.setenv("CARTAN_THREADS", "1")
    a = H.make_oracle(BALL3, H.MC, 2, n=9000, seed=4)
    monkeypatch.setenv("CARTAN_THREADS", "3")
    b = H.make_oracle(BALL3, H.MC, 2, n=9000, seed=4)
    assert a.table.tobytes() == b.table.tobytes()
    with pytest.raises(ValueError):
        H.make_oracle(BALL3, H.MC, 2, n=9000)
    with pytest.raises(ValueError):
        a(np.array([3, 0, 0]), np.array([3, 0, 0]))
    with pytest.raises(ValueError):
        H.make_oracle(BALL3, H.EXACT_RANK1, 2, measure=H.PHI1)


def test_trace_identity_on_mc_grams(u2_oracle):
    assert H.trace_identity_gap(u2_oracle, 4, 3) <= 1e-12
    phi = H.make_oracle(U2, H.MC, 3, n=5000, seed=9, measure=H.PHI1)
    assert H.trace_identity_gap(phi, 4, 2) <= 1e-12


def test_phi1_norm(u2_oracle):
    v, se = H.phi1_norm_sq(U2, u2_oracle)
    assert abs(v - 1 / U2.d) <= 4 * se
    v, _ = H.phi1_norm_sq(BALL3, H.ExactRank1Moments(BALL3))
    assert v == pytest.approx(1 / 3)


def test_minor_norm_law(u2_oracle):
    det = MinorIndexPair((0, 1), (0, 1))
    assert H.minor_norm_law(2, U2) == pytest.approx(1)
    assert H.minor_norm_law(1, DomainSpec(2, 1)) == pytest.approx(1 / 3)
    mean, se = u2_oracle.expectation(lambda z: np.abs(np.linalg.det(z)) ** 2)
    assert abs(mean - 1) <= 1e-12 and se <= 1e-12
    val = H.minor_norm_sq(det, u2_oracle, U2)
    assert val.real == pytest.approx(1, abs=1e-10)
    one = H.minor_norm_sq(MinorIndexPair((1,), (0,)), u2_oracle, U2)
    se1 = float(u2_oracle(np.array([0, 0, 1, 0]), np.array([0, 0, 1, 0]))[1])
    assert abs(one.real - H.minor_norm_law(1, U2)) <= 4 * se1
    for k in range(3):
        assert H.minor_norm_sq(MinorIndexPair((0,), (k,)), H.ExactRank1Moments(BALL3), BALL3) == pytest.approx(1 / 3)


def test_orthonormalize_identity_and_duplicates():
    basis = H.MonomialBasis(3, 1)
    eye = H.GramEstimate(np.eye(4, dtype=complex), np.zeros((4, 4)), "exact", None, None, H.HAAR, None)
    tr = H.orthonormalize(eye, basis, BALL3)
    np.testing.assert_allclose(tr.coeffs, np.eye(4))
    ora = H.ExactRank1Moments(BALL3)
    alpha = np.array([[0, 0, 0], [1, 0, 0], [1, 0, 0], [0, 1, 0]])
    g, se = H.pairing(ora, alpha, np.zeros_like(alpha))
    tr = H._Truncation(BALL3, alpha, np.zeros_like(alpha), H.GramEstimate(g, se, "x", None, None, H.HAAR, ora), 1e-8, 1e-8)
    assert tr.dim == 3 and list(tr.kept) == [0, 1, 3]
    bad = H.GramEstimate(np.diag([1.0, -1.0]).astype(complex), np.zeros((2, 2)), "x", None, None, H.HAAR, None)
    with pytest.raises(ValueError):
        H.orthonormalize(bad, H.MonomialBasis(1, 1), DISC)


def test_rank1_exact_onb_reproduces_norms():
    tr = H.hardy_truncation(BALL3, 4)
    ora = H.ExactRank1Moments(BALL3)
    norms = np.array([ora(a, a)[0].real for a in tr.basis.alpha])
    # diagonal Gram: the ONB is z^alpha / ||z^alpha||
    np.testing.assert_allclose(np.abs(np.diag(tr.coeffs)) ** -2, norms, rtol=1e-12)
    assert tr.orthonormality_defect() <= 1e-12


def test_disc_shift_has_unit_weights():
    tr = H.hardy_truncation(DISC, 5)
    (s,) = H.szego_shift_compressions(tr)
    np.testing.assert_allclose(s, np.eye(6, k=-1), atol=1e-13)
    x = H.toeplitz_matrix(H.SymbolPoly.coordinate(1, 0) + H.SymbolPoly.coordinate(1, 0, conj=True), tr)
    band = np.eye(6, k=1) + np.eye(6, k=-1)
    safe = tr.safe(1)
    np.testing.assert_allclose(x[np.ix_(safe, safe)], band[np.ix_(safe, safe)], atol=1e-13)


def test_shift_on_constant_and_safe_block():
    tr = H.hardy_truncation(BALL3, 3)
    shifts = H.szego_shift_compressions(tr)
    for k in range(3):
        col = shifts[k][:, 0]
        expect = np.zeros(tr.dim)
        expect[tr.basis.index[tuple(np.eye(3, dtype=int)[k])]] = np.sqrt(1 / 3)
        np.testing.assert_allclose(col, expect, atol=1e-13)
    total = sum(s.conj().T @ s for s in shifts)
    safe = tr.safe(1)
    np.testing.assert_allclose(total[np.ix_(safe, safe)], np.eye(len(safe)), atol=1e-12)


def test_mc_safe_block_identity(u2_oracle):
    tr = H.hardy_truncation(U2, 2, oracle=u2_oracle)
    total = sum(s.conj().T @ s for s in H.szego_shift_compressions(tr))
    safe = tr.safe(1)
    assert np.abs(total[np.ix_(safe, safe)] - 2 * np.eye(len(safe))).max() <= 1e-8


def test_toeplitz_simple_symbols():
    tr = H.hardy_truncation(BALL3, 3)
    np.testing.assert_allclose(H.toeplitz_matrix(H.SymbolPoly.constant(3), tr), np.eye(tr.dim), atol=1e-13)
    shifts = H.szego_shift_compressions(tr)
    np.testing.assert_allclose(H.toeplitz_matrix(H.SymbolPoly.coordinate(3, 0), tr), shifts[0])
    with pytest.raises(ValueError):
        H.toeplitz_matrix(H.SymbolPoly.constant(2), tr)


def test_brown_halmos_examples():
    tr = H.hardy_truncation(BALL3, 4)
    assert H.brown_halmos_residual(np.eye(tr.dim), tr) <= 1e-12
    x = H.toeplitz_matrix(H.SymbolPoly.coordinate(3, 0) + H.SymbolPoly.coordinate(3, 0, conj=True), tr)
    assert H.brown_halmos_residual(x, tr) <= 1e-8
    v = np.zeros(tr.dim)
    v[1] = 1
    assert H.brown_halmos_residual(np.eye(tr.dim) + np.outer(v, v), tr) >= 0.1
    with pytest.raises(ValueError):
        H.brown_halmos_residual(np.eye(tr.dim), tr, ell=2)
    with pytest.raises(ValueError):
        H.brown_halmos_residual(np.eye(3), tr)


@given(seed=st.integers(0, 2**32 - 1))
def test_brown_halmos_necessity_exact(seed):
    tr = _disc_ball_trunc()
    g = np.random.default_rng(seed)
    sym = H.random_symbol(3, 2, g)
    assert H.brown_halmos_residual(H.toeplitz_matrix(sym, tr), tr) <= 1e-8


_CACHE = {}


def _disc_ball_trunc():
    if "ball" not in _CACHE:
        _CACHE["ball"] = H.hardy_truncation(BALL3, 5, symbol_degree=2)
    return _CACHE["ball"]


def test_brown_halmos_mc_rank2(u2_oracle):
    tr = H.hardy_truncation(U2, 2, oracle=u2_oracle)
    sym = H.SymbolPoly.coordinate(4, 0) + H.SymbolPoly.coordinate(4, 3, conj=True)
    x = H.toeplitz_matrix(sym, tr)
    for ell in (1, 2):
        assert H.brown_halmos_residual(x, tr, ell) <= tr.residual_tolerance()


def test_berezin_constant_and_errors():
    tr = H.hardy_truncation(DISC, 30)
    pts = [[[t]] for t in (0.0, 0.5, 0.9)]
    vals = H.berezin_scan(np.eye(tr.dim), pts, tr)
    for v in vals:
        assert v["value"] == pytest.approx(1) and v["kernel_norm"] == pytest.approx(1)
    with pytest.raises(ValueError):
        H.berezin_scan(np.eye(tr.dim), [[[1.0]]], tr)


def test_l2_blocks_for_simple_symbols():
    tr = H.l2_truncation(DISC, 5)
    blocks = H.l2_block_decomposition(H.SymbolPoly.constant(1), tr)
    np.testing.assert_allclose(blocks.full, np.eye(tr.dim), atol=1e-12)
    z, zbar = H.SymbolPoly.coordinate(1, 0), H.SymbolPoly.coordinate(1, 0, conj=True)
    assert H.hankel_safe_norm(z, tr) <= 1e-8
    b = H.l2_block_decomposition(zbar, tr)
    rows = tr.safe_hardy(1)
    assert np.abs(b.hankel_adjoint[rows]).max() <= 1e-8


def test_l2_ball_hankel_vanishes_for_analytic():
    tr = H.l2_truncation(DomainSpec(1, 1), 3, symbol_degree=2)
    g = np.random.default_rng(0)
    for _ in range(3):
        assert H.hankel_safe_norm(H.random_symbol(2, 2, g, analytic=True), tr) <= 1e-8


def test_dual_examples():
    tr = H.l2_truncation(DISC, 6)
    m = tr.complement.size
    res = H.dual_brown_halmos_residual(np.eye(m), tr)
    assert res.residual <= 1e-10 and max(res.isometry_residuals) <= 1e-10
    sym = H.SymbolPoly([((1,), (0,), 1.0), ((0,), (2,), 0.5j), ((0,), (0,), 2.0)])
    s_phi = H.l2_block_decomposition(sym, tr).dual
    assert H.dual_brown_halmos_residual(s_phi, tr).residual <= 1e-8
    g = np.random.default_rng(1)
    x = g.standard_normal((m, m))
    assert H.dual_brown_halmos_residual(x, tr).residual >= 0.1
    with pytest.raises(ValueError):
        H.dual_brown_halmos_residual(np.eye(2), tr)


def test_symbol_json_and_validation():
    sym = H.SymbolPoly([((1, 0), (0, 1), 1 + 2j), ((0, 0), (0, 0), -1)])
    back = H.SymbolPoly.from_json(sym.to_json())
    assert back.terms == sym.terms
    assert not sym.is_analytic and sym.analytic_degree == 1 and sym.conj_degree == 1
    z = np.array([0.3 + 0.1j, -0.2j])
    assert sym.evaluate(z)[0] == pytest.approx((1 + 2j) * z[0] * np.conj(z[1]) - 1)
    assert sym.conj().evaluate(z)[0] == pytest.approx(np.conj(sym.evaluate(z)[0]))
    for bad in ([], [((1,), (0, 0), 1)], [((-1,), (0,), 1)]):
        with pytest.raises(ValueError):
            H.SymbolPoly(bad)
    with pytest.raises(ValueError):
        H.SymbolPoly.from_json([{"beta": [0]}])


def test_exponent_ordering():
    e = H.exponents_up_to(2, 2)
    assert [tuple(x) for x in e] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert len(H.exponents_up_to(4, 3)) == factorial(7) // (factorial(4) * factorial(3))
