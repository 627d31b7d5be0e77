"""Commuting matrix tuples over a type-I grid and their Cartan-isometry tests."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.linalg import schur
from scipy.optimize import linear_sum_assignment

from .domain import DomainSpec, as_matrix
from .tripledet import MinorIndexPair, minor_pairs


@dataclass(frozen=True)
class CommutingTuple:
    """``d`` square matrices stored on the coordinate grid, shape ``(r, r+b, n, n)``."""

    matrices: np.ndarray
    domain: DomainSpec

    def __post_init__(self):
        m = np.array(self.matrices, dtype=np.complex128)
        r, c = self.domain.shape
        if m.ndim == 3 and m.shape[0] == r * c:
            m = m.reshape(r, c, *m.shape[1:])
        if m.ndim != 4 or m.shape[:2] != (r, c) or m.shape[2] != m.shape[3]:
            raise ValueError(f"expected matrices of shape ({r}, {c}, n, n), got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("tuple has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)

    @property
    def n(self) -> int:
        return self.matrices.shape[-1]

    def flat(self) -> np.ndarray:
        """Matrices in coordinate order, shape ``(d, n, n)``."""
        return self.matrices.reshape(-1, self.n, self.n)

    def __getitem__(self, ij):
        return self.matrices[ij]

    def scale(self) -> float:
        return max(1.0, max(np.linalg.norm(t, 2) for t in self.flat()))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "domain": self.domain.to_dict(),
            "matrices": [{"re": t.real.reshape(-1).tolist(), "im": t.imag.reshape(-1).tolist()} for t in self.flat()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CommutingTuple":
        try:
            n = int(obj["n"])
            dom = DomainSpec(int(obj["domain"]["r"]), int(obj["domain"]["b"]))
            blocks = [np.asarray(m["re"], dtype=float) + 1j * np.asarray(m["im"], dtype=float) for m in obj["matrices"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed tuple: {exc}") from exc
        if len(blocks) != dom.d or any(b.size != n * n for b in blocks):
            raise ValueError("tuple needs d blocks of n*n entries")
        return cls(np.stack([b.reshape(n, n) for b in blocks]), dom)


def check_commuting(T: CommutingTuple) -> float:
    """Largest commutator norm over all pairs."""
    flat = T.flat()
    worst = 0.0
    for i in range(len(flat)):
        for j in range(i + 1, len(flat)):
            worst = max(worst, float(np.linalg.norm(flat[i] @ flat[j] - flat[j] @ flat[i], 2)))
    return worst


def _require_commuting(T: CommutingTuple, tol: float):
    defect = check_commuting(T)
    if defect > tol * T.scale() ** 2:
        raise ValueError(f"tuple does not commute (defect {defect:.3e})")


# ---------------------------------------------------------------------------
# polynomial calculus
# ---------------------------------------------------------------------------

class _Minors:
    """Operator minors ``m_{I,J}(T)`` by Laplace expansion along the first row, memoized."""

    def __init__(self, T: CommutingTuple):
        self.T = T
        self._cache = {}

    def __call__(self, rows, cols) -> np.ndarray:
        key = (tuple(rows), tuple(cols))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if len(rows) == 1:
            out = np.array(self.T[rows[0], cols[0]])
        else:
            out = np.zeros((self.T.n, self.T.n), dtype=np.complex128)
            for k, j in enumerate(cols):
                rest = cols[:k] + cols[k + 1:]
                term = self.T[rows[0], j] @ self(rows[1:], rest)
                out = out - term if k % 2 else out + term
        self._cache[key] = out
        return out


def operator_minor(T: CommutingTuple, pair: MinorIndexPair) -> np.ndarray:
    return _Minors(T)(pair.rows, pair.cols)


def poly_apply(poly: dict, T: CommutingTuple) -> np.ndarray:
    """Evaluate ``{flat exponent tuple: coef}`` at a commuting tuple."""
    flat = T.flat()
    out = np.zeros((T.n, T.n), dtype=np.complex128)
    eye = np.eye(T.n, dtype=np.complex128)
    for expo, coef in poly.items():
        if len(expo) != len(flat):
            raise ValueError("exponent length does not match the tuple")
        term = eye
        for k, e in enumerate(expo):
            if e:
                term = term @ np.linalg.matrix_power(flat[k], int(e))
        out += coef * term
    return out


def hereditary_apply(p: dict, q: dict, T: CommutingTuple, tol: float = 1e-10) -> np.ndarray:
    """``q(T)^* p(T)``: the hereditary calculus applied to ``p(z) conj(q(w))``."""
    _require_commuting(T, tol)
    return poly_apply(q, T).conj().T @ poly_apply(p, T)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass
class IsometryCertificate:
    residuals: list
    tol: float
    commutator: float

    @property
    def passed(self) -> bool:
        return all(r <= self.tol for r in self.residuals)

    def to_json(self) -> dict:
        return {"residuals": [float(x) for x in self.residuals], "pass": self.passed, "tol": self.tol,
                "commutator_norm": self.commutator}


def hereditary_delta_l(T: CommutingTuple, ell: int) -> np.ndarray:
    """``Delta^(ell)(z, w)(T, T^*) = sum_{I,J} m_{I,J}(T)^* m_{I,J}(T)``."""
    minors = _Minors(T)
    r, c = T.domain.shape
    out = np.zeros((T.n, T.n), dtype=np.complex128)
    for pair in minor_pairs(r, c, ell):
        m = minors(pair.rows, pair.cols)
        out += m.conj().T @ m
    return out


def cartan_isometry_certificate(T: CommutingTuple, tol: float = 1e-10, commute_tol: float = 1e-10) -> IsometryCertificate:
    _require_commuting(T, commute_tol)
    r = T.domain.r
    eye = np.eye(T.n)
    res = [float(np.linalg.norm(hereditary_delta_l(T, ell) - comb(r, ell) * eye, 2)) for ell in range(1, r + 1)]
    return IsometryCertificate(res, tol, check_commuting(T))


def normal_fixture(points, domain: DomainSpec, multiplicities=None, unitary=None) -> CommutingTuple:
    """Diagonal tuple whose joint eigenvalues are ``points`` (repeated by multiplicity).

    An optional unitary ``U`` conjugates every matrix (``U D U^*``), which keeps
    the tuple normal but hides the diagonal structure.
    """
    pts = [as_matrix(p) for p in points]
    if not pts:
        raise ValueError("need at least one point")
    if multiplicities is None:
        multiplicities = [1] * len(pts)
    if len(multiplicities) != len(pts) or any(int(m) < 1 for m in multiplicities):
        raise ValueError("multiplicities must be positive, one per point")
    for p in pts:
        if p.shape != domain.shape:
            raise ValueError(f"point shape {p.shape} does not match domain {domain.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("non-finite point")
    diag = np.concatenate([np.repeat(p[None], int(m), axis=0) for p, m in zip(pts, multiplicities)])
    n = diag.shape[0]
    mats = np.zeros(domain.shape + (n, n), dtype=np.complex128)
    idx = np.arange(n)
    mats[..., idx, idx] = np.moveaxis(diag, 0, -1)
    if unitary is not None:
        u = np.asarray(unitary, dtype=np.complex128)
        if u.shape != (n, n):
            raise ValueError("unitary has the wrong size")
        mats = u @ mats @ u.conj().T
    return CommutingTuple(mats, domain)


# ---------------------------------------------------------------------------
# joint spectrum
# ---------------------------------------------------------------------------

def _triangularize(T: CommutingTuple, rng: np.random.Generator, tol: float):
    flat = T.flat()
    coef = rng.standard_normal(len(flat))
    combo = np.tensordot(coef, flat, axes=1)
    _, z = schur(combo, output="complex")
    tri = z.conj().T @ flat @ z
    lower = np.tril(tri, -1)
    defect = max(float(np.linalg.norm(m, 2)) for m in lower) if T.n > 1 else 0.0
    if defect > tol * T.scale():
        raise ValueError(f"simultaneous triangularization failed (defect {defect:.3e})")
    eig = np.diagonal(tri, axis1=-2, axis2=-1).T
    return eig, z, tri


def joint_eigenvalues(T: CommutingTuple, seed: int = 0, tol: float = 1e-8) -> np.ndarray:
    """Joint eigenvalues as points, shape ``(n, r, r+b)``.

    Two independently drawn generic combinations are triangularized; their
    diagonal lists must agree up to a matching, otherwise the tuple is
    treated as defective and an error is raised.
    """
    rng = np.random.default_rng(seed)
    first, _, _ = _triangularize(T, rng, tol)
    second, _, _ = _triangularize(T, rng, tol)
    cost = np.linalg.norm(first[:, None, :] - second[None, :, :], axis=-1)
    rows, cols = linear_sum_assignment(cost)
    gap = float(cost[rows, cols].max())
    if gap > np.sqrt(tol) * T.scale():
        raise ValueError(f"joint eigenvalue draws disagree (gap {gap:.3e})")
    return first.reshape(T.n, *T.domain.shape)


def omega_spectral_radius(T: CommutingTuple, seed: int = 0) -> float:
    pts = joint_eigenvalues(T, seed)
    return float(np.max(np.linalg.norm(pts, 2, axis=(-2, -1))))


def spectral_group_dimension(points, r: int, tol: float = 1e-8) -> int:
    """``sum m^2`` over classes of points identified by ``<p, q> = r`` (Shilov points)."""
    flat = np.asarray(points, dtype=np.complex128).reshape(len(points), -1)
    gram = flat.conj() @ flat.T
    same = np.abs(gram - r) <= tol * max(1, r)
    seen = np.zeros(len(flat), dtype=bool)
    total = 0
    for p in range(len(flat)):
        if seen[p]:
            continue
        cls = same[p]
        seen |= cls
        total += int(cls.sum()) ** 2
    return total


# ---------------------------------------------------------------------------
# automorphisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearAuto:
    """``z -> u z v^*`` with ``u`` in ``U(r)`` and ``v`` in ``U(r+b)``."""

    u: np.ndarray
    v: np.ndarray

    def __call__(self, z):
        return self.u @ as_matrix(z) @ self.v.conj().T

    def check(self, domain: DomainSpec, tol: float = 1e-10):
        u, v = np.asarray(self.u), np.asarray(self.v)
        if u.shape != (domain.r, domain.r) or v.shape != (domain.cols, domain.cols):
            raise ValueError("unitary sizes do not match the domain")
        for w in (u, v):
            if np.linalg.norm(w.conj().T @ w - np.eye(len(w)), 2) > tol:
                raise ValueError("automorphism factors must be unitary")


@dataclass(frozen=True)
class BallMobius:
    """Involutive automorphism of the unit ball exchanging ``0`` and ``a`` (rank one)."""

    a: np.ndarray

    def __call__(self, z):
        z = as_matrix(z)
        shape = z.shape
        zv = z.reshape(-1)
        a = np.asarray(self.a, dtype=np.complex128).reshape(-1)
        aa = float(np.vdot(a, a).real)
        za = np.vdot(a, zv)
        s = np.sqrt(1.0 - aa)
        if aa == 0.0:
            return (-zv).reshape(shape)
        proj = za / aa * a
        return ((a - proj - s * (zv - proj)) / (1.0 - za)).reshape(shape)

    def check(self, domain: DomainSpec, tol: float = 1e-10):
        a = np.asarray(self.a).reshape(-1)
        if domain.r != 1:
            raise ValueError("Mobius maps are only available at rank one")
        if a.size != domain.d:
            raise ValueError("Mobius centre has the wrong dimension")
        if np.linalg.norm(a) >= 1.0:
            raise ValueError("Mobius centre must lie in the open ball")


def _is_normal(T: CommutingTuple, tol: float) -> bool:
    flat = T.flat()
    s = T.scale() ** 2
    for a in flat:
        for b in flat:
            if np.linalg.norm(a @ b.conj().T - b.conj().T @ a, 2) > tol * s:
                return False
    return True


def automorphism_apply_normal(T: CommutingTuple, auto, seed: int = 0, tol: float = 1e-9) -> CommutingTuple:
    """Apply an automorphism to a normal tuple through its joint eigenbasis.

    For a linear map the image is taken coordinate-wise (linear combinations of
    the ``T_ij``), which agrees with the eigenbasis route without rounding from
    the Schur step.
    """
    auto.check(T.domain)
    if not _is_normal(T, tol):
        raise ValueError("automorphism action is only implemented for normal tuples")
    if isinstance(auto, LinearAuto):
        u, v = np.asarray(auto.u), np.asarray(auto.v)
        mats = np.einsum("ik,klab,jl->ijab", u, T.matrices, v.conj())
        return CommutingTuple(mats, T.domain)
    eig, z, _ = _triangularize(T, np.random.default_rng(seed), tol)
    images = np.stack([auto(p.reshape(T.domain.shape)) for p in eig])
    n = T.n
    mats = np.zeros(T.domain.shape + (n, n), dtype=np.complex128)
    idx = np.arange(n)
    mats[..., idx, idx] = np.moveaxis(images, 0, -1)
    return CommutingTuple(z @ mats @ z.conj().T, T.domain)


# ---------------------------------------------------------------------------
# T-Toeplitz solver
# ---------------------------------------------------------------------------

def t_toeplitz_operator(T: CommutingTuple) -> np.ndarray:
    """Matrix of ``X -> sum_i T_i^* X T_i - r X`` on column-major ``vec(X)``."""
    n = T.n
    out = -T.domain.r * np.eye(n * n, dtype=np.complex128)
    for t in T.flat():
        out += np.kron(t.T, t.conj().T)
    return out


def t_toeplitz_solve(T: CommutingTuple, tol: float = 1e-10, rcond: float = 1e-9) -> np.ndarray:
    """Basis of ``{X : sum_i T_i^* X T_i = r X}``, shape ``(k, n, n)``."""
    cert = cartan_isometry_certificate(T, tol)
    if not cert.passed:
        raise ValueError(f"tuple is not a Cartan isometry (residuals {cert.residuals})")
    _, s, vh = np.linalg.svd(t_toeplitz_operator(T))
    # absolute floor: a single joint eigenvalue makes the operator exactly zero
    rank = int(np.sum(s > rcond * max(1.0, s[0])))
    n = T.n
    return vh[rank:].conj().reshape(-1, n, n).transpose(0, 2, 1).copy()
