"""Truncated Hardy and L^2 spaces on the Shilov boundary.

Everything is driven by a *moment oracle* returning
``int z^mu conj(z^nu) dmu`` for analytic exponent vectors ``mu, nu``; a
bi-monomial ``z^alpha conj(z)^beta`` pairs against another through
``moment(alpha_b + beta_a, beta_b + alpha_a)``. Three oracles exist:
closed-form ball moments (rank one), the degree-one formula, and a Monte
Carlo table over Haar samples (optionally weighted by ``d |phi_(1)|^2``).

Bases are orthonormalized with an order-preserving Cholesky, so the
``k``-th orthonormal vector only involves generators ``0..k`` and inherits
their grading. Operator identities are checked on *safe* index sets where
truncation provably does not interfere.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb, factorial, lgamma

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .domain import SAMPLE_BLOCK, DomainSpec, Signature, haar_sample_shilov, pochhammer
from .operators import CommutingTuple, _Minors
from .tripledet import minor_pairs, minor_polynomial

EXACT_RANK1, EXACT_LOW, MC = "exact_rank1", "exact_low_degree", "mc"
HAAR, PHI1 = "haar", "phi1"


# ---------------------------------------------------------------------------
# monomials and symbols
# ---------------------------------------------------------------------------

def exponents_up_to(d: int, degree: int) -> np.ndarray:
    """All exponent vectors in ``d`` variables with total degree ``<= degree``.

    Ordered by degree, then lexicographically descending (so ``z_1`` precedes
    ``z_2``).
    """
    rows = []
    for k in range(degree + 1):
        block = []
        for combo in combinations_with_replacement(range(d), k):
            e = [0] * d
            for i in combo:
                e[i] += 1
            block.append(tuple(e))
        block.sort(reverse=True)
        rows.extend(block)
    return np.array(rows, dtype=np.int64).reshape(-1, d)


class MonomialBasis:
    """Analytic monomials ``z^alpha`` with ``|alpha| <= D``."""

    def __init__(self, d: int, degree: int):
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        self.d = d
        self.degree = degree
        self.alpha = exponents_up_to(d, degree)
        self.degrees = self.alpha.sum(axis=1)
        self.index = {tuple(a): i for i, a in enumerate(self.alpha)}

    def __len__(self):
        return len(self.alpha)


@dataclass
class SymbolPoly:
    """Finite sum of ``c * z^alpha * conj(z)^beta`` in flattened coordinates."""

    terms: list  # of (alpha tuple, beta tuple, complex)

    def __post_init__(self):
        clean = []
        for a, b, c in self.terms:
            a, b = tuple(int(x) for x in a), tuple(int(x) for x in b)
            if len(a) != len(b) or any(x < 0 for x in a + b):
                raise ValueError("bad symbol exponents")
            clean.append((a, b, complex(c)))
        if not clean:
            raise ValueError("empty symbol")
        if len({len(a) for a, _, _ in clean}) != 1:
            raise ValueError("symbol terms use different numbers of variables")
        self.terms = clean

    @property
    def nvars(self) -> int:
        return len(self.terms[0][0])

    @property
    def analytic_degree(self) -> int:
        return max(sum(a) for a, _, _ in self.terms)

    @property
    def conj_degree(self) -> int:
        return max(sum(b) for _, b, _ in self.terms)

    @property
    def is_analytic(self) -> bool:
        return self.conj_degree == 0

    @classmethod
    def constant(cls, d: int, c: complex = 1.0) -> "SymbolPoly":
        return cls([((0,) * d, (0,) * d, c)])

    @classmethod
    def coordinate(cls, d: int, k: int, conj: bool = False) -> "SymbolPoly":
        e = [0] * d
        e[k] = 1
        zero = (0,) * d
        return cls([(zero, tuple(e), 1.0)] if conj else [(tuple(e), zero, 1.0)])

    def __add__(self, other: "SymbolPoly") -> "SymbolPoly":
        return SymbolPoly(self.terms + other.terms)

    def conj(self) -> "SymbolPoly":
        return SymbolPoly([(b, a, c.conjugate()) for a, b, c in self.terms])

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128).reshape(-1, self.nvars)
        a = np.array([t[0] for t in self.terms])
        b = np.array([t[1] for t in self.terms])
        c = np.array([t[2] for t in self.terms])
        va = _kernels.eval_monomials(z, a)
        vb = _kernels.eval_monomials(z, b)
        return (va * np.conj(vb)) @ c

    def to_json(self) -> list:
        return [{"alpha": list(a), "beta": list(b), "c_re": c.real, "c_im": c.imag} for a, b, c in self.terms]

    @classmethod
    def from_json(cls, obj) -> "SymbolPoly":
        try:
            return cls([(t["alpha"], t["beta"], complex(t.get("c_re", 0.0), t.get("c_im", 0.0))) for t in obj])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed symbol: {exc}") from exc


def random_symbol(d: int, degree: int, rng: np.random.Generator, analytic: bool = False, terms: int = 4) -> SymbolPoly:
    pool = exponents_up_to(d, degree)
    zero = (0,) * d
    out = []
    for _ in range(terms):
        a = tuple(pool[rng.integers(len(pool))])
        b = zero if analytic else tuple(pool[rng.integers(len(pool))])
        c = complex(rng.standard_normal(), rng.standard_normal())
        out.append((a, b, c))
    return SymbolPoly(out)


# ---------------------------------------------------------------------------
# moment oracles
# ---------------------------------------------------------------------------

def phi1_values(z, domain: DomainSpec) -> np.ndarray:
    """``phi_(1)(z) = trace(z[:, :r]) / r`` for a stack of points."""
    z = np.asarray(z, dtype=np.complex128).reshape(-1, *domain.shape)
    return np.trace(z[:, :, : domain.r], axis1=1, axis2=2) / domain.r


def _torus_signature(e: np.ndarray, domain: DomainSpec) -> np.ndarray:
    grid = e.reshape(*e.shape[:-1], domain.r, domain.cols)
    return np.concatenate([grid.sum(axis=-1), grid.sum(axis=-2)], axis=-1)


class ExactRank1Moments:
    """Closed-form sphere moments ``delta_{mu,nu} (d-1)! mu! / (d-1+|mu|)!``."""

    method = EXACT_RANK1
    n = None
    seed = None
    measure = HAAR

    def __init__(self, domain: DomainSpec):
        if domain.r != 1:
            raise ValueError("exact_rank1 moments require rank one")
        self.domain = domain

    def __call__(self, mu, nu):
        mu, nu = np.asarray(mu, dtype=np.int64), np.asarray(nu, dtype=np.int64)
        same = np.all(mu == nu, axis=-1)
        d = self.domain.d
        logv = lgamma(d) + gammaln(mu + 1.0).sum(axis=-1) - gammaln(d + mu.sum(axis=-1))
        val = np.where(same, np.exp(logv), 0.0).astype(np.complex128)
        return val, np.zeros(val.shape)


class LowDegreeMoments:
    """Moments of total degree at most one: ``E[z_ij conj(z_kl)] = delta / (r+b)``."""

    method = EXACT_LOW
    n = None
    seed = None
    measure = HAAR

    def __init__(self, domain: DomainSpec):
        self.domain = domain

    def __call__(self, mu, nu):
        mu, nu = np.asarray(mu, dtype=np.int64), np.asarray(nu, dtype=np.int64)
        dm, dn = mu.sum(axis=-1), nu.sum(axis=-1)
        if np.any(dm > 1) or np.any(dn > 1):
            raise ValueError("exact_low_degree covers total degree <= 1 only")
        same = np.all(mu == nu, axis=-1)
        val = np.where(same, np.where(dm == 0, 1.0, 1.0 / self.domain.cols), 0.0).astype(np.complex128)
        return val, np.zeros(val.shape)


class SampledMoments:
    """Monte Carlo moment table over Haar samples of the Shilov boundary.

    The table covers analytic exponents of total degree ``<= max_degree``.
    Weights are self-normalized, so ``<1, 1> = 1`` exactly. With
    ``symmetrize`` the table is averaged over the diagonal torus acting by
    ``z -> diag(a) z diag(b)``, which zeroes every moment whose row and column
    sums differ; the averaged functional is still a probability measure on the
    boundary, so pointwise identities survive.
    """

    method = MC

    def __init__(self, domain: DomainSpec, n: int, seed: int, max_degree: int,
                 measure: str = HAAR, symmetrize: bool = True):
        if n < 2:
            raise ValueError("need at least two samples")
        if measure not in (HAAR, PHI1):
            raise ValueError(f"unknown measure {measure!r}")
        self.domain, self.n, self.seed = domain, int(n), int(seed)
        self.measure, self.symmetrize = measure, symmetrize
        self.max_degree = max_degree
        self.exps = exponents_up_to(domain.d, max_degree)
        self.samples = haar_sample_shilov(domain, self.n, self.seed).reshape(self.n, -1)
        self._build()

    def _weights(self, z):
        if self.measure == HAAR:
            return np.ones(len(z))
        return self.domain.d * np.abs(phi1_values(z, self.domain)) ** 2

    def _build(self):
        m = len(self.exps)
        s1 = np.zeros((m, m), dtype=np.complex128)
        s2 = np.zeros((m, m), dtype=np.complex128)
        q2 = np.zeros((m, m))
        wsum = w2sum = 0.0
        # index-ordered reduction, one block at a time
        for start in range(0, self.n, SAMPLE_BLOCK):
            z = self.samples[start:start + SAMPLE_BLOCK]
            w = self._weights(z)
            v = _kernels.eval_monomials(z, self.exps)
            s1 += v.T @ (w[:, None] * v.conj())
            s2 += v.T @ ((w ** 2)[:, None] * v.conj())
            a2 = np.abs(v) ** 2
            q2 += a2.T @ ((w ** 2)[:, None] * a2)
            wsum += w.sum()
            w2sum += (w ** 2).sum()
        mean = s1 / wsum
        mean = 0.5 * (mean + mean.conj().T)
        var = (q2 - 2.0 * np.real(np.conj(mean) * s2) + np.abs(mean) ** 2 * w2sum) / wsum ** 2
        se = np.sqrt(np.maximum(var, 0.0))
        if self.symmetrize:
            sig = _torus_signature(self.exps, self.domain)
            mask = np.all(sig[:, None, :] == sig[None, :, :], axis=-1)
            mean = np.where(mask, mean, 0.0)
            se = np.where(mask, se, 0.0)
        self.table, self.stderr = mean, se
        self.weight_sum = wsum
        base = self.max_degree + 1
        self._radix = base ** np.arange(self.domain.d, dtype=np.int64)
        codes = self.exps @ self._radix
        self._order = np.argsort(codes)
        self._codes = codes[self._order]

    def _lookup(self, e):
        e = np.asarray(e, dtype=np.int64)
        if np.any(e.sum(axis=-1) > self.max_degree):
            raise ValueError(f"moment degree exceeds the table (max {self.max_degree})")
        codes = e @ self._radix
        pos = np.searchsorted(self._codes, codes)
        return self._order[pos]

    def __call__(self, mu, nu):
        i, j = self._lookup(mu), self._lookup(nu)
        return self.table[i, j], self.stderr[i, j]

    def expectation(self, fn):
        """Self-normalized mean and standard error of ``fn`` over the samples."""
        vals = np.asarray(fn(self.samples.reshape(self.n, *self.domain.shape)))
        w = self._weights(self.samples)
        w = w / w.sum()
        mean = np.sum(w * vals)
        se = np.sqrt(np.sum(w ** 2 * np.abs(vals - mean) ** 2))
        return mean, float(se)

    @property
    def stderr_max(self) -> float:
        return float(self.stderr.max())


def make_oracle(domain: DomainSpec, method: str, max_degree: int, n: int | None = None,
                seed: int | None = None, measure: str = HAAR, symmetrize: bool = True):
    if measure != HAAR and method != MC:
        raise ValueError("the phi1 measure is only available with the mc method")
    if method == EXACT_RANK1:
        return ExactRank1Moments(domain)
    if method == EXACT_LOW:
        return LowDegreeMoments(domain)
    if method == MC:
        if n is None or seed is None:
            raise ValueError("mc moments need a sample count and an explicit seed")
        return SampledMoments(domain, n, seed, max_degree, measure, symmetrize)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Gram matrices and truncations
# ---------------------------------------------------------------------------

@dataclass
class GramEstimate:
    matrix: np.ndarray
    stderr: np.ndarray
    method: str
    n: int | None
    seed: int | None
    measure: str
    oracle: object = field(repr=False)

    @property
    def stderr_max(self) -> float:
        return float(self.stderr.max()) if self.stderr.size else 0.0

    def meta(self) -> dict:
        return {"method": self.method, "n": self.n, "seed": self.seed, "measure": self.measure,
                "stderr_max": self.stderr_max}


def pairing(oracle, alpha, beta, gamma=None, delta=None):
    """Matrix ``B[a, b] = <z^gamma conj(z)^delta g_b, g_a>`` for ``g_k = z^alpha_k conj(z)^beta_k``."""
    alpha, beta = np.asarray(alpha), np.asarray(beta)
    if gamma is None:
        gamma = np.zeros(alpha.shape[1], dtype=np.int64)
    if delta is None:
        delta = np.zeros(alpha.shape[1], dtype=np.int64)
    mu = alpha[None, :, :] + gamma + beta[:, None, :]
    nu = beta[None, :, :] + delta + alpha[:, None, :]
    return oracle(mu, nu)


def gram_matrix(basis: MonomialBasis, domain: DomainSpec, measure: str = HAAR, method: str = MC,
                n: int | None = None, seed: int | None = None, oracle=None, symmetrize: bool = True) -> GramEstimate:
    """Gram matrix ``G[a, b] = int z^alpha_b conj(z^alpha_a)`` of an analytic monomial basis."""
    if basis.d != domain.d:
        raise ValueError("basis and domain dimensions differ")
    if oracle is None:
        oracle = make_oracle(domain, method, basis.degree, n, seed, measure, symmetrize)
    zero = np.zeros_like(basis.alpha)
    g, se = pairing(oracle, basis.alpha, zero)
    return GramEstimate(g, se, oracle.method, oracle.n, oracle.seed, oracle.measure, oracle)


class _Truncation:
    """Orthonormalized span of bi-monomial generators."""

    def __init__(self, domain, alpha, beta, gram: GramEstimate, tol: float, neg_tol: float):
        self.domain = domain
        self.alpha = np.asarray(alpha, dtype=np.int64)
        self.beta = np.asarray(beta, dtype=np.int64)
        self.gram = gram
        self.oracle = gram.oracle
        low, keep, pivots, status = _kernels.graded_cholesky(gram.matrix, tol, neg_tol)
        if status:
            raise ValueError("Gram matrix is indefinite beyond tolerance")
        self.kept = np.flatnonzero(keep)
        self.pivots = pivots
        lr = low[np.ix_(self.kept, self.kept)]
        # coefficients of the orthonormal vectors in the kept generators
        self.coeffs = np.linalg.inv(lr).conj().T if len(self.kept) else np.zeros((0, 0))

    @property
    def dim(self) -> int:
        return len(self.kept)

    @property
    def kept_alpha(self):
        return self.alpha[self.kept]

    @property
    def kept_beta(self):
        return self.beta[self.kept]

    def compress(self, raw: np.ndarray) -> np.ndarray:
        """``C^H B C`` for a raw generator-pairing matrix on the kept generators."""
        return self.coeffs.conj().T @ raw @ self.coeffs

    def multiplication(self, symbol: SymbolPoly) -> np.ndarray:
        if symbol.nvars != self.domain.d:
            raise ValueError("symbol dimension does not match the domain")
        ka, kb = self.kept_alpha, self.kept_beta
        raw = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for g, dl, c in symbol.terms:
            val, _ = pairing(self.oracle, ka, kb, np.array(g), np.array(dl))
            raw += c * val
        return self.compress(raw)

    def orthonormality_defect(self) -> float:
        g = self.gram.matrix[np.ix_(self.kept, self.kept)]
        return float(np.linalg.norm(self.compress(g) - np.eye(self.dim), 2)) if self.dim else 0.0

    def evaluate(self, z) -> np.ndarray:
        """Orthonormal vectors evaluated at points: shape ``(npts, dim)``."""
        z = np.asarray(z, dtype=np.complex128).reshape(-1, self.domain.d)
        va = _kernels.eval_monomials(z, self.kept_alpha)
        vb = _kernels.eval_monomials(z, self.kept_beta)
        return (va * np.conj(vb)) @ self.coeffs

    def residual_tolerance(self, floor: float = 1e-8, bands: float = 4.0) -> float:
        return max(floor, bands * self.gram.stderr_max) if self.gram.method == MC else floor


class HardyTruncation(_Truncation):
    """Orthonormal basis of analytic polynomials of degree ``<= D`` in ``H^2``."""

    def __init__(self, basis: MonomialBasis, gram: GramEstimate, domain: DomainSpec,
                 tol: float = 1e-8, neg_tol: float = 1e-8):
        self.basis = basis
        self.degree = basis.degree
        super().__init__(domain, basis.alpha, np.zeros_like(basis.alpha), gram, tol, neg_tol)

    @property
    def degrees(self) -> np.ndarray:
        return self.basis.degrees[self.kept]

    def safe(self, shift: int) -> np.ndarray:
        return np.flatnonzero(self.degrees <= self.degree - shift)


def orthonormalize(gram: GramEstimate, basis: MonomialBasis, domain: DomainSpec,
                   tol: float = 1e-8, neg_tol: float = 1e-8) -> HardyTruncation:
    return HardyTruncation(basis, gram, domain, tol, neg_tol)


def hardy_truncation(domain: DomainSpec, degree: int, method: str = EXACT_RANK1, n=None, seed=None,
                     measure: str = HAAR, symbol_degree: int = 1, symmetrize: bool = True, oracle=None) -> HardyTruncation:
    """Basis, Gram and orthonormalization in one step.

    The moment table (mc) is sized for symbols of total degree up to
    ``symbol_degree`` in each of ``z`` and ``conj(z)``.
    """
    basis = MonomialBasis(domain.d, degree)
    if oracle is None:
        oracle = make_oracle(domain, method, degree + symbol_degree, n, seed, measure, symmetrize)
    return orthonormalize(gram_matrix(basis, domain, oracle=oracle), basis, domain)


def szego_shift_compressions(trunc: _Truncation) -> np.ndarray:
    """Compressions of multiplication by each coordinate, shape ``(d, dim, dim)``."""
    d = trunc.domain.d
    return np.stack([trunc.multiplication(SymbolPoly.coordinate(d, k)) for k in range(d)])


def toeplitz_matrix(symbol: SymbolPoly, trunc: HardyTruncation) -> np.ndarray:
    return trunc.multiplication(symbol)


def _shift_tuple(mats: np.ndarray, domain: DomainSpec) -> CommutingTuple:
    k = mats.shape[-1]
    return CommutingTuple(mats.reshape(domain.r, domain.cols, k, k), domain)


def brown_halmos_operator(X: np.ndarray, shifts: np.ndarray, domain: DomainSpec, ell: int) -> np.ndarray:
    """``sum_{I,J} m_{I,J}(S)^* X m_{I,J}(S) - C(r, ell) X``."""
    minors = _Minors(_shift_tuple(shifts, domain))
    out = -comb(domain.r, ell) * np.asarray(X, dtype=np.complex128)
    for pair in minor_pairs(domain.r, domain.cols, ell):
        m = minors(pair.rows, pair.cols)
        out = out + m.conj().T @ X @ m
    return out


def brown_halmos_residual(X, trunc: HardyTruncation, ell: int = 1, shifts=None) -> float:
    """Norm of the Brown-Halmos defect on ONB vectors of degree ``<= D - ell``."""
    if not 1 <= ell <= trunc.domain.r:
        raise ValueError(f"ell={ell} out of range 1..{trunc.domain.r}")
    if trunc.degree < ell:
        raise ValueError("truncation degree is below ell; the safe block is empty")
    X = np.asarray(X, dtype=np.complex128)
    if X.shape != (trunc.dim, trunc.dim):
        raise ValueError("X does not match the truncation dimension")
    if shifts is None:
        shifts = szego_shift_compressions(trunc)
    res = brown_halmos_operator(X, shifts, trunc.domain, ell)
    safe = trunc.safe(ell)
    return float(np.linalg.norm(res[np.ix_(safe, safe)], 2))


def minor_norm_sq(pair, trunc_or_oracle, domain: DomainSpec) -> complex:
    """``||m_{I,J}||^2`` from the moment oracle."""
    oracle = getattr(trunc_or_oracle, "oracle", trunc_or_oracle)
    poly = minor_polynomial(pair, domain)
    ex = np.array(list(poly.keys()), dtype=np.int64)
    co = np.array(list(poly.values()), dtype=float)
    val, _ = oracle(ex[None, :, :], ex[:, None, :])
    return complex(co @ val @ co)


def minor_norm_law(ell: int, domain: DomainSpec) -> float:
    """``ell! / (d/r)_(ell)``."""
    return factorial(ell) / pochhammer(domain.hardy_nu, Signature.ell(ell, domain.r), domain.a)


def trace_identity_gap(oracle, d, degree):
    """``max |sum_k <z_k p, z_k q> - r <p, q>|`` over monomials ``p, q`` of degree ``<= degree``."""
    mons = exponents_up_to(d, degree)
    base, _ = oracle(mons[None, :, :], mons[:, None, :])
    total = np.zeros_like(base)
    for k in range(d):
        e = np.zeros(d, dtype=np.int64)
        e[k] = 1
        val, _ = oracle((mons + e)[None, :, :], (mons + e)[:, None, :])
        total += val
    return float(np.abs(total - oracle.domain.r * base).max())


# ---------------------------------------------------------------------------
# Berezin transform
# ---------------------------------------------------------------------------

def berezin_scan(X, points, trunc: HardyTruncation) -> list:
    """``<X g_z, g_z>`` for the normalized truncated kernel sections at interior points."""
    X = np.asarray(X, dtype=np.complex128)
    out = []
    for z in points:
        zm = np.asarray(z, dtype=np.complex128).reshape(trunc.domain.shape)
        if np.linalg.norm(zm, 2) >= 1.0:
            raise ValueError("Berezin points must be interior")
        c = np.conj(trunc.evaluate(zm)[0])
        c /= np.linalg.norm(c)
        out.append({"value": complex(c.conj() @ X @ c), "kernel_norm": float(np.linalg.norm(c))})
    return out


# ---------------------------------------------------------------------------
# L^2 truncation and the dual problem
# ---------------------------------------------------------------------------

def l2_generators(d: int, degree: int):
    """Analytic monomials first (Hardy order), then ``z^alpha conj(z)^beta`` with
    ``beta != 0`` ordered by ``(|beta|, |alpha|, lex)``."""
    mons = exponents_up_to(d, degree)
    zero = np.zeros(d, dtype=np.int64)
    alpha = [a for a in mons]
    beta = [zero for _ in mons]
    for b in mons[1:]:
        for a in mons:
            alpha.append(a)
            beta.append(b)
    return np.array(alpha), np.array(beta)


class L2Truncation(_Truncation):
    """Orthonormalized ``{z^alpha conj(z)^beta : |alpha|, |beta| <= D}`` split into Hardy part and complement."""

    def __init__(self, domain: DomainSpec, degree: int, oracle, tol: float = 1e-8, neg_tol: float = 1e-8):
        self.degree = degree
        alpha, beta = l2_generators(domain.d, degree)
        g, se = pairing(oracle, alpha, beta)
        gram = GramEstimate(g, se, oracle.method, oracle.n, oracle.seed, oracle.measure, oracle)
        super().__init__(domain, alpha, beta, gram, tol, neg_tol)
        analytic = self.kept_beta.sum(axis=1) == 0
        self.hardy = np.flatnonzero(analytic)
        self.complement = np.flatnonzero(~analytic)
        # analytic generators come first, so the split is a prefix
        assert np.all(self.hardy < (self.complement.min() if self.complement.size else np.inf))

    def safe_complement(self, shift: int = 1) -> np.ndarray:
        """Positions within the complement whose generator has ``|beta| <= D - shift``."""
        b = self.kept_beta[self.complement].sum(axis=1)
        return np.flatnonzero(b <= self.degree - shift)

    def safe_hardy(self, shift: int) -> np.ndarray:
        a = self.kept_alpha[self.hardy].sum(axis=1)
        return np.flatnonzero(a <= self.degree - shift)


def l2_truncation(domain: DomainSpec, degree: int, method: str = EXACT_RANK1, n=None, seed=None,
                  symbol_degree: int = 1, symmetrize: bool = True, oracle=None) -> L2Truncation:
    if oracle is None:
        oracle = make_oracle(domain, method, 2 * degree + symbol_degree, n, seed, HAAR, symmetrize)
    return L2Truncation(domain, degree, oracle)


@dataclass
class BlockDecomposition:
    toeplitz: np.ndarray
    hankel_adjoint: np.ndarray
    hankel: np.ndarray
    dual: np.ndarray
    full: np.ndarray


def l2_block_decomposition(symbol: SymbolPoly, trunc: L2Truncation) -> BlockDecomposition:
    """``M_phi`` in the ``H^2 (+) complement`` splitting: ``[[T, H*], [H, S]]``."""
    m = trunc.multiplication(symbol)
    h, c = trunc.hardy, trunc.complement
    return BlockDecomposition(
        toeplitz=m[np.ix_(h, h)],
        hankel_adjoint=m[np.ix_(h, c)],
        hankel=m[np.ix_(c, h)],
        dual=m[np.ix_(c, c)],
        full=m,
    )


def hankel_safe_norm(symbol: SymbolPoly, trunc: L2Truncation) -> float:
    """Norm of the Hankel block on Hardy columns of degree ``<= D - deg(symbol)``."""
    blocks = l2_block_decomposition(symbol, trunc)
    cols = trunc.safe_hardy(symbol.analytic_degree)
    if not cols.size or not trunc.complement.size:
        return 0.0
    return float(np.linalg.norm(blocks.hankel[:, cols], 2))


def dual_shifts(trunc: L2Truncation) -> np.ndarray:
    """``S_{conj(z_k)}`` on the complement, shape ``(d, m, m)``."""
    c = trunc.complement
    d = trunc.domain.d
    return np.stack([trunc.multiplication(SymbolPoly.coordinate(d, k, conj=True))[np.ix_(c, c)] for k in range(d)])


@dataclass
class DualResidual:
    residual: float
    isometry_residuals: list
    safe_dim: int


def dual_brown_halmos_residual(X, trunc: L2Truncation, shifts=None) -> DualResidual:
    """Defect of ``sum_k S_k^* X S_k = r X`` on the safe complement vectors.

    The dual tuple itself is certified on the same footing: for each ``ell``
    the minor sum ``sum m_{I,J}(S)^* m_{I,J}(S) - C(r, ell) I`` is measured on
    complement vectors of conjugate degree ``<= D - ell``.
    """
    if not trunc.complement.size:
        raise ValueError("complement block is empty")
    X = np.asarray(X, dtype=np.complex128)
    m = trunc.complement.size
    if X.shape != (m, m):
        raise ValueError("X does not match the complement dimension")
    if shifts is None:
        shifts = dual_shifts(trunc)
    safe = trunc.safe_complement(1)
    if not safe.size:
        raise ValueError("truncation too small: no safe complement vectors")
    res = brown_halmos_operator(X, shifts, trunc.domain, 1)
    iso = []
    for ell in range(1, trunc.domain.r + 1):
        s = trunc.safe_complement(ell)
        if not s.size:
            break
        r_ell = brown_halmos_operator(np.eye(m), shifts, trunc.domain, ell)
        iso.append(float(np.linalg.norm(r_ell[np.ix_(s, s)], 2)))
    return DualResidual(float(np.linalg.norm(res[np.ix_(safe, safe)], 2)), iso, int(safe.size))


def phi1_norm_sq(domain: DomainSpec, oracle) -> tuple:
    """``||phi_(1)||^2`` in ``H^2`` with its standard error (mc) or exact value."""
    if getattr(oracle, "method", None) == MC:
        if oracle.measure != HAAR:
            raise ValueError("phi_(1) norm is taken against the Haar measure")
        mean, se = oracle.expectation(lambda z: np.abs(phi1_values(z, domain)) ** 2)
        return float(np.real(mean)), se
    coeffs = {}
    for i in range(domain.r):
        e = [0] * domain.d
        e[i * domain.cols + i] = 1
        coeffs[tuple(e)] = 1.0 / domain.r
    ex = np.array(list(coeffs), dtype=np.int64)
    co = np.array(list(coeffs.values()))
    val, _ = oracle(ex[None, :, :], ex[:, None, :])
    return float(np.real(co @ val @ co)), 0.0
