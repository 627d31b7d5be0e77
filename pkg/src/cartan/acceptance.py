"""End-to-end acceptance checks, one function per criterion.

Each runner returns an :class:`Outcome` carrying the measured quantities and
its own verdict; wall time counts toward the verdict through ``limit``.
Oracles here are deliberately naive (subset sums, explicit loops) so they do
not share code paths with the library routines they check.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import combinations
from math import comb, prod

import numpy as np
from scipy.integrate import quad

from . import _kernels
from . import hardy as H
from .domain import DomainSpec, haar_unitary, leading_ones_residual, singular_values
from .fixtures import off_boundary_fixture, sample_fixture_domain, shilov_fixture
from .operators import (
    BallMobius,
    LinearAuto,
    automorphism_apply_normal,
    cartan_isometry_certificate,
    joint_eigenvalues,
    omega_spectral_radius,
    spectral_group_dimension,
    t_toeplitz_solve,
)
from .strata import boundary_scan
from .tripledet import (
    cauchy_binet_sum,
    delta,
    delta_components,
    delta_l_principal_minors,
    fk_residual_rank1,
    poisson_kernel,
)

MC_SAMPLES = 200_000


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    metrics: dict
    seconds: float = 0.0
    limit: float = float("inf")

    @property
    def ok(self) -> bool:
        return self.passed and self.seconds <= self.limit

    def line(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        return f"[{verdict}] {self.number:2d} {self.title} ({self.seconds:.2f}s / {self.limit:g}s)"

    def to_json(self, timing: bool = False) -> dict:
        out = {"criterion": self.number, "title": self.title, "pass": self.passed, "metrics": _plain(self.metrics)}
        if timing:
            out["seconds"] = self.seconds
            out["limit"] = self.limit
        return out


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _timed(number, title, limit):
    def wrap(fn):
        def run(**kw):
            t0 = time.perf_counter()
            passed, metrics = fn(**kw)
            return Outcome(number, title, bool(passed), metrics, time.perf_counter() - t0, limit)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


def _sigma_subsets(t):
    """All ``sigma_l`` by summing products over subsets."""
    return [sum(prod(c) for c in combinations(t, l)) for l in range(len(t) + 1)]


def _gauss(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


# ---------------------------------------------------------------------------

def det_identity_residuals(dom: DomainSpec, pairs: int, rng) -> dict:
    """Worst residuals of the determinant identities over random pairs."""
    r, c = dom.shape
    z = _gauss(rng, (pairs, r, c), 1 / np.sqrt(c))
    w = _gauss(rng, (pairs, r, c), 1 / np.sqrt(c))
    comps = delta_components(z, w)
    signs = (-1.0) ** np.arange(r + 1)
    out = {"alternating_sum": float(np.abs(delta(z, w) - comps @ signs).max()),
           "cauchy_binet": 0.0, "principal_minors": 0.0}
    for ell in range(1, r + 1):
        out["cauchy_binet"] = max(out["cauchy_binet"], float(np.abs(cauchy_binet_sum(z, w, ell) - comps[:, ell]).max()))
        out["principal_minors"] = max(out["principal_minors"],
                                      float(np.abs(delta_l_principal_minors(z, w, ell) - comps[:, ell]).max()))
    u = haar_unitary(r, rng, size=pairs)
    v = haar_unitary(c, rng, size=pairs)
    vh = np.conj(np.swapaxes(v, -1, -2))
    out["k_invariance"] = float(np.abs(delta_components(u @ z @ vh, u @ w @ vh) - comps).max())
    out["hermitian_symmetry"] = float(np.abs(delta_components(w, z) - comps.conj()).max())
    return out


@_timed(1, "determinant identities", 30.0)
def determinant_identities(seed: int = 101, pairs: int = 1000):
    rng = np.random.default_rng(seed)
    per = {f"{r},{b}": det_identity_residuals(DomainSpec(r, b), pairs, rng) for r, b in ((1, 2), (2, 0), (2, 1), (3, 0))}
    worst = max(max(v.values()) for v in per.values())
    return worst <= 1e-10, {"max_residual": worst, "per_domain": per}


@_timed(2, "boundary stratification", 10.0)
def boundary_stratification(seed: int = 202, per_class: int = 500, tol: float = 1e-8):
    out = {}
    ok = True
    for k, (r, b) in enumerate(((1, 1), (1, 2), (2, 0), (2, 1), (3, 0))):
        rep = boundary_scan(DomainSpec(r, b), per_class, seed + k, tol)
        out[f"{r},{b}"] = {"agreement": rep["agreement"], "planted_agreement": rep["planted_agreement"],
                           "points": rep["points"]}
        ok &= rep["agreement"] == 1.0 and rep["planted_agreement"] == 1.0
    return ok, out


@_timed(3, "symmetric-polynomial reduction lemma", 5.0)
def leading_ones_equivalence(seed: int = 303, vectors: int = 10_000, thresh: float = 1e-12):
    rng = np.random.default_rng(seed)
    mismatched_verdicts = 0
    oracle_gap = 0.0
    planted = 0
    for _ in range(vectors):
        r = int(rng.integers(1, 7))
        q = int(rng.integers(1, r + 1))
        ones = int(rng.integers(0, r + 1))
        t = np.sort(np.concatenate([np.ones(ones), rng.uniform(0.0, 1.0, r - ones)]))[::-1]
        planted += ones >= q
        res = leading_ones_residual(t, q)
        full, tail = _sigma_subsets(list(t)), _sigma_subsets(list(t[q:]))
        brute = [full[l] - sum(comb(q, i) * tail[l - i] for i in range(max(l - (r - q), 0), min(q, l) + 1))
                 for l in range(1, r + 1)]
        oracle_gap = max(oracle_gap, float(np.max(np.abs(res - brute))))
        zero = np.max(np.abs(res)) <= thresh
        mismatched_verdicts += zero != bool(np.all(t[:q] == 1.0))
    return mismatched_verdicts == 0 and oracle_gap <= thresh, {
        "vectors": vectors, "planted_zero_cases": planted, "verdict_mismatches": mismatched_verdicts,
        "max_oracle_gap": oracle_gap}


def _point_oracle(points, r):
    """``max_p |sigma_l(t_p^2) - C(r, l)|`` for each ``l`` by subset sums."""
    worst = np.zeros(r)
    for p in points:
        s = _sigma_subsets(list(singular_values(p) ** 2))
        worst = np.maximum(worst, [abs(s[l] - comb(r, l)) for l in range(1, r + 1)])
    return worst


@_timed(4, "Cartan-isometry certificate", 20.0)
def isometry_certificate(seed: int = 404, count: int = 50):
    rng = np.random.default_rng(seed)
    shilov_worst, oracle_gap, max_n = 0.0, 0.0, 0
    for k in range(count):
        dom = sample_fixture_domain(rng)
        big = k % 10 == 0
        T, pts, _ = shilov_fixture(dom, rng, max_points=25 if big else 8, max_mult=4, conjugate=k % 2 == 0)
        cert = cartan_isometry_certificate(T)
        shilov_worst = max(shilov_worst, max(cert.residuals))
        oracle_gap = max(oracle_gap, float(np.max(np.abs(np.array(cert.residuals) - _point_oracle(pts, dom.r)))))
        max_n = max(max_n, T.n)
    fail_min, all_failed = np.inf, True
    for k in range(count):
        dom = sample_fixture_domain(rng)
        T, pts, _ = off_boundary_fixture(dom, rng, conjugate=k % 2 == 0)
        cert = cartan_isometry_certificate(T)
        all_failed &= not cert.passed
        fail_min = min(fail_min, max(cert.residuals))
        oracle_gap = max(oracle_gap, float(np.max(np.abs(np.array(cert.residuals) - _point_oracle(pts, dom.r)))))
    ok = shilov_worst <= 1e-10 and all_failed and fail_min >= 0.05 and oracle_gap <= 1e-10 and max_n <= 100
    return ok, {"shilov_max_residual": shilov_worst, "off_boundary_min_residual": fail_min,
                "max_oracle_gap": oracle_gap, "largest_n": max_n}


def _automorphism_cases(rng, count):
    """Yield ``(fixture, automorphism)`` pairs: linear maps on all shapes, Mobius maps at rank one."""
    for k in range(count):
        if k % 3 == 2:
            b = int(rng.integers(0, 3))
            dom = DomainSpec(1, b)
            T, _, _ = shilov_fixture(dom, rng, conjugate=k % 2 == 0)
            a = _gauss(rng, dom.d)
            a *= rng.uniform(0.0, 0.9) / np.linalg.norm(a)
            yield T, BallMobius(a)
        else:
            dom = sample_fixture_domain(rng)
            T, _, _ = shilov_fixture(dom, rng, conjugate=k % 2 == 0)
            yield T, LinearAuto(haar_unitary(dom.r, rng), haar_unitary(dom.cols, rng))


@_timed(5, "automorphism invariance", 10.0)
def automorphism_invariance(seed: int = 505, count: int = 50):
    rng = np.random.default_rng(seed)
    worst, image_gap, mobius = 0.0, 0.0, 0
    for T, auto in _automorphism_cases(rng, count):
        moved = automorphism_apply_normal(T, auto)
        worst = max(worst, max(cartan_isometry_certificate(moved).residuals))
        before = joint_eigenvalues(T, seed=1)
        after = joint_eigenvalues(moved, seed=2)
        mapped = np.stack([auto(p) for p in before])
        # every mapped eigenvalue must appear in the new joint spectrum
        dist = np.linalg.norm((mapped[:, None] - after[None]).reshape(len(mapped), len(after), -1), axis=-1)
        image_gap = max(image_gap, float(dist.min(axis=1).max()))
        mobius += isinstance(auto, BallMobius)
    return worst <= 1e-10 and image_gap <= 1e-8, {"max_residual": worst, "max_image_gap": image_gap,
                                                   "applications": count, "mobius": mobius}


@_timed(6, "Omega-spectral radius", 5.0)
def spectral_radius(seed: int = 606, count: int = 50):
    rng = np.random.default_rng(seed)
    fixtures = [shilov_fixture(sample_fixture_domain(rng), rng, conjugate=k % 2 == 0)[0] for k in range(count)]
    fixtures += [automorphism_apply_normal(T, a) for T, a in _automorphism_cases(rng, 20)]
    gaps, checked = [], 0
    for T in fixtures:
        if cartan_isometry_certificate(T).passed:
            checked += 1
            gaps.append(abs(omega_spectral_radius(T, seed=checked) - 1.0))
    return checked == len(fixtures) and max(gaps) <= 1e-10, {"fixtures": checked, "max_gap": max(gaps)}


def _brute_nullity(T, r, rtol=1e-9):
    n = T.n
    cols = []
    for q in range(n):
        for p in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[p, q] = 1.0
            img = sum(t.conj().T @ e @ t for t in T.flat()) - r * e
            cols.append(img.reshape(-1, order="F"))
    s = np.linalg.svd(np.array(cols).T, compute_uv=False)
    return int(np.sum(s <= rtol * max(1.0, s[0])))


@_timed(7, "T-Toeplitz solver", 10.0)
def t_toeplitz(seed: int = 707, count: int = 30):
    rng = np.random.default_rng(seed)
    mismatches, eq_res, max_n = 0, 0.0, 0
    for k in range(count):
        dom = sample_fixture_domain(rng)
        T, _, mult = shilov_fixture(dom, rng, max_points=4, max_mult=3, conjugate=k % 2 == 0)
        max_n = max(max_n, T.n)
        basis = t_toeplitz_solve(T)
        expected = sum(m * m for m in mult)
        grouped = spectral_group_dimension(joint_eigenvalues(T, seed=k), dom.r)
        mismatches += not (len(basis) == expected == grouped == _brute_nullity(T, dom.r))
        for X in basis:
            eq_res = max(eq_res, float(np.linalg.norm(sum(t.conj().T @ X @ t for t in T.flat()) - dom.r * X, 2)))
    return mismatches == 0 and eq_res <= 1e-10 and max_n <= 12, {
        "fixtures": count, "mismatches": mismatches, "max_equation_residual": eq_res, "largest_n": max_n}


@_timed(8, "rank-one Faraut-Koranyi series", 1.0)
def faraut_koranyi(seed: int = 808, pairs: int = 200, n_terms: int = 40):
    rng = np.random.default_rng(seed)
    worst = {}
    for b in (0, 1, 2):
        dom = DomainSpec(1, b)
        for nu in (0.5, 1.0, 3.0, float(dom.d)):
            top = 0.0
            for k in range(pairs):
                z = _gauss(rng, dom.shape)
                w = _gauss(rng, dom.shape)
                z *= rng.uniform(0, 1) / np.linalg.norm(z)
                w *= rng.uniform(0, 1) / np.linalg.norm(w)
                x = abs(np.vdot(w, z))
                if x > 0.5 or k == 0:
                    # k == 0 pins the extreme case |<z, w>| = 0.5
                    w *= 0.5 / x if k == 0 else rng.uniform(0.5, 1.0) * 0.5 / x
                top = max(top, fk_residual_rank1(z, w, nu, n_terms, dom))
            worst[f"d={dom.d},nu={nu:g}"] = top
    return max(worst.values()) <= 1e-8, worst


@_timed(9, "Hardy moments", 60.0)
def hardy_moments(seed: int = 909, n: int = MC_SAMPLES):
    m = {}
    d3 = DomainSpec(1, 2)
    basis = H.MonomialBasis(d3.d, 4)
    exact = H.gram_matrix(basis, d3, method=H.EXACT_RANK1)
    raw = H.make_oracle(d3, H.MC, 5, n, seed, symmetrize=False)
    mc = H.gram_matrix(basis, d3, oracle=raw)
    band = 4.0 * mc.stderr + 1e-12
    m["rank1_entries_outside_4se"] = int(np.sum(np.abs(mc.matrix - exact.matrix) > band))
    m["rank1_max_z_score"] = float(np.max(np.abs(mc.matrix - exact.matrix) / band) * 4.0)
    m["rank1_const_norm"] = float(mc.matrix[0, 0].real)
    m["rank1_trace_identity"] = H.trace_identity_gap(raw, d3.d, 4)

    u2 = DomainSpec(2, 0)
    orc = H.make_oracle(u2, H.MC, 3, n, seed + 1)
    raw2 = H.make_oracle(u2, H.MC, 3, n, seed + 1, symmetrize=False)
    e11 = np.array([1, 0, 0, 0])
    val, se = orc(e11, e11)
    m["z11_norm"], m["z11_se"] = float(val.real), float(se)
    det_mean, det_se = orc.expectation(lambda z: np.abs(np.linalg.det(z)) ** 2)
    m["det_norm"], m["det_se"] = float(np.real(det_mean)), det_se
    det_from_moments = H.minor_norm_sq(H.minor_pairs(2, 2, 2)[0], orc, u2)
    m["det_norm_from_moments"] = float(det_from_moments.real)
    m["u2_trace_identity"] = max(H.trace_identity_gap(orc, 4, 2), H.trace_identity_gap(raw2, 4, 2))
    phi = H.make_oracle(u2, H.MC, 3, n, seed + 2, measure=H.PHI1)
    m["phi1_trace_identity"] = H.trace_identity_gap(phi, 4, 2)
    m["phi1_const_norm"] = float(phi(np.zeros(4, dtype=np.int64), np.zeros(4, dtype=np.int64))[0].real)
    pn, pse = H.phi1_norm_sq(u2, orc)
    m["phi1_norm"], m["phi1_se"] = pn, pse
    ok = (
        m["rank1_entries_outside_4se"] == 0
        and abs(m["rank1_const_norm"] - 1) <= 1e-12
        and abs(m["z11_norm"] - 0.5) <= 4 * m["z11_se"]
        and abs(m["det_norm"] - 1) <= 4 * m["det_se"] + 1e-12
        and abs(m["phi1_norm"] - 1 / u2.d) <= 4 * pse
        and abs(m["phi1_const_norm"] - 1) <= 1e-12
        and max(m["rank1_trace_identity"], m["u2_trace_identity"], m["phi1_trace_identity"]) <= 1e-12
    )
    return ok, m


def _safe_perturbation(trunc_dim, safe, rng):
    v = np.zeros(trunc_dim, dtype=complex)
    g = _gauss(rng, len(safe))
    v[safe] = g / np.linalg.norm(g)
    return np.outer(v, v.conj())


@_timed(10, "Brown-Halmos identity", 60.0)
def brown_halmos(seed: int = 1010, symbols: int = 20, n: int = MC_SAMPLES):
    rng = np.random.default_rng(seed)
    dom = DomainSpec(1, 2)
    tr = H.hardy_truncation(dom, 6, method=H.EXACT_RANK1)
    shifts = H.szego_shift_compressions(tr)
    toep, pert = 0.0, np.inf
    for _ in range(symbols):
        X = H.toeplitz_matrix(H.random_symbol(dom.d, 2, rng), tr)
        toep = max(toep, H.brown_halmos_residual(X, tr, 1, shifts))
        Y = X + _safe_perturbation(tr.dim, tr.safe(1), rng)
        pert = min(pert, H.brown_halmos_residual(Y, tr, 1, shifts))
    u2 = DomainSpec(2, 0)
    mc = H.hardy_truncation(u2, 3, method=H.MC, n=n, seed=seed)
    tol = mc.residual_tolerance()
    mshifts = H.szego_shift_compressions(mc)
    mc_worst = 0.0
    for _ in range(10):
        X = H.toeplitz_matrix(H.random_symbol(u2.d, 1, rng), mc)
        for ell in (1, 2):
            mc_worst = max(mc_worst, H.brown_halmos_residual(X, mc, ell, mshifts))
    ok = toep <= 1e-8 and pert >= 0.1 and mc_worst <= tol
    return ok, {"exact_toeplitz_max": toep, "exact_perturbed_min": pert, "mc_max": mc_worst,
                "mc_tolerance": tol, "mc_stderr_max": mc.gram.stderr_max}


@_timed(11, "dual Toeplitz decomposition", 60.0)
def dual_toeplitz(seed: int = 1111, symbols: int = 20, n: int = MC_SAMPLES):
    rng = np.random.default_rng(seed)
    m = {"hankel_max": 0.0, "structure_max": 0.0, "dual_max": 0.0, "dual_cert_max": 0.0, "perturbed_min": np.inf}
    for dom, degree in ((DomainSpec(1, 0), 6), (DomainSpec(1, 1), 4)):
        L = H.l2_truncation(dom, degree, method=H.EXACT_RANK1)
        sh = H.dual_shifts(L)
        for _ in range(symbols):
            m["hankel_max"] = max(m["hankel_max"], H.hankel_safe_norm(H.random_symbol(dom.d, 2, rng, analytic=True), L))
            S = H.l2_block_decomposition(H.random_symbol(dom.d, 2, rng), L).dual
            res = H.dual_brown_halmos_residual(S, L, sh)
            m["dual_max"] = max(m["dual_max"], res.residual)
            m["dual_cert_max"] = max(m["dual_cert_max"], max(res.isometry_residuals))
            Y = S + _safe_perturbation(len(L.complement), L.safe_complement(1), rng)
            m["perturbed_min"] = min(m["perturbed_min"], H.dual_brown_halmos_residual(Y, L, sh).residual)
        # block shape for conj(z_1): zero upper-right block on safe Hardy rows, T-block adjoint to that of z_1
        zc = H.l2_block_decomposition(H.SymbolPoly.coordinate(dom.d, 0, conj=True), L)
        z = H.l2_block_decomposition(H.SymbolPoly.coordinate(dom.d, 0), L)
        rows = L.safe_hardy(1)
        m["structure_max"] = max(m["structure_max"], float(np.linalg.norm(zc.hankel_adjoint[rows], 2)),
                                 float(np.linalg.norm(zc.toeplitz - z.toeplitz.conj().T, 2)))
        one = H.l2_block_decomposition(H.SymbolPoly.constant(dom.d), L).full
        m["structure_max"] = max(m["structure_max"], float(np.linalg.norm(one - np.eye(L.dim), 2)))
    u2 = DomainSpec(2, 0)
    L = H.l2_truncation(u2, 2, method=H.MC, n=n, seed=seed)
    tol = L.residual_tolerance()
    sh = H.dual_shifts(L)
    mc_worst = mc_hankel = 0.0
    for _ in range(10):
        S = H.l2_block_decomposition(H.random_symbol(u2.d, 1, rng), L).dual
        mc_worst = max(mc_worst, H.dual_brown_halmos_residual(S, L, sh).residual)
        mc_hankel = max(mc_hankel, H.hankel_safe_norm(H.random_symbol(u2.d, 1, rng, analytic=True), L))
    m.update(mc_max=mc_worst, mc_hankel_max=mc_hankel, mc_tolerance=tol)
    ok = (m["hankel_max"] <= 1e-8 and m["structure_max"] <= 1e-8 and m["dual_max"] <= 1e-8
          and m["dual_cert_max"] <= 1e-8 and m["perturbed_min"] >= 0.1 and mc_worst <= tol and mc_hankel <= tol)
    return ok, m


def disc_poisson_oracle(symbol: H.SymbolPoly, z: complex) -> float:
    """Poisson integral of a real symbol on the circle, by quadrature."""
    disc = DomainSpec(1, 0)
    zm = np.array([[z]])

    def f(theta):
        xi = np.exp(1j * theta)
        return float(np.real(symbol.evaluate(np.array([xi]))[0])) * poisson_kernel(np.array([[xi]]), zm, disc)

    val, _ = quad(f, 0.0, 2 * np.pi, limit=400, points=[np.angle(z) % (2 * np.pi)] if z else None)
    return val / (2 * np.pi)


@_timed(12, "Berezin decay on the disc", 10.0)
def berezin_decay(degree: int = 1000):
    disc = DomainSpec(1, 0)
    tr = H.hardy_truncation(disc, degree, method=H.EXACT_RANK1)
    ts = (0.9, 0.99, 0.999)
    pts = [np.array([[t]]) for t in ts]
    P = np.zeros((tr.dim, tr.dim))
    P[0, 0] = 1.0
    finite = [v["value"].real for v in H.berezin_scan(P, pts, tr)]
    sym = H.SymbolPoly.constant(1) + H.SymbolPoly.coordinate(1, 0) + H.SymbolPoly.coordinate(1, 0, conj=True)
    toep = [v["value"].real for v in H.berezin_scan(H.toeplitz_matrix(sym, tr), pts, tr)]
    oracle = [disc_poisson_oracle(sym, t) for t in ts]
    ok = (finite[0] > finite[1] > finite[2] and finite[2] <= 0.05
          and abs(toep[-1] - 3.0) <= 0.1 and abs(toep[-1] - oracle[-1]) <= 0.1)
    return ok, {"t": list(ts), "finite_rank": finite, "toeplitz": toep, "poisson_oracle": oracle}


RUNNERS = [
    determinant_identities, boundary_stratification, leading_ones_equivalence, isometry_certificate,
    automorphism_invariance, spectral_radius, t_toeplitz, faraut_koranyi, hardy_moments,
    brown_halmos, dual_toeplitz, berezin_decay,
]


def run_all(only=None) -> list:
    _kernels.warmup()
    picks = RUNNERS if only is None else [RUNNERS[i - 1] for i in only]
    return [run() for run in picks]
