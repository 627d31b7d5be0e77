"""Type-I Cartan domain parameters, matrix points and Shilov-boundary sampling."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

from . import _kernels

#: samples per independently seeded block of the Haar sampler
SAMPLE_BLOCK = 8192


@dataclass(frozen=True)
class DomainSpec:
    """Numerical invariants of the type-I domain of ``r x (r+b)`` matrices."""

    r: int
    b: int
    a: int = field(default=2, init=False)

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ValueError(f"rank must be a positive integer, got {self.r!r}")
        if int(self.b) != self.b or self.b < 0:
            raise ValueError(f"b must be a nonnegative integer, got {self.b!r}")

    @property
    def cols(self) -> int:
        return self.r + self.b

    @property
    def shape(self) -> tuple[int, int]:
        return (self.r, self.r + self.b)

    @property
    def d(self) -> int:
        return self.r + (self.a // 2) * self.r * (self.r - 1) + self.r * self.b

    @property
    def genus(self) -> int:
        return 2 + self.a * (self.r - 1) + self.b

    @property
    def hardy_nu(self) -> float:
        return self.d / self.r

    def to_dict(self) -> dict:
        return {"r": self.r, "b": self.b}


def make_domain(r: int, b: int) -> DomainSpec:
    return DomainSpec(r, b)


class Signature(tuple):
    """Weakly decreasing tuple of nonnegative integers."""

    def __new__(cls, entries):
        entries = tuple(int(s) for s in entries)
        if any(s < 0 for s in entries):
            raise ValueError("signature entries must be nonnegative")
        if any(entries[i] < entries[i + 1] for i in range(len(entries) - 1)):
            raise ValueError("signature must be weakly decreasing")
        return super().__new__(cls, entries)

    @classmethod
    def ell(cls, ell: int, r: int) -> "Signature":
        """The signature ``(1, ..., 1, 0, ..., 0)`` with ``ell`` ones."""
        if not 0 <= ell <= r:
            raise ValueError(f"need 0 <= ell <= r, got ell={ell}, r={r}")
        return cls([1] * ell + [0] * (r - ell))


def pochhammer(x: float, s, a: float = 2) -> float:
    """Generalized Pochhammer symbol ``(x)_s`` for multiplicity ``a``."""
    out = 1.0
    for j, sj in enumerate(s, start=1):
        for l in range(1, int(sj) + 1):
            out *= x - 0.5 * a * (j - 1) + l - 1
    return out


def as_matrix(z) -> np.ndarray:
    if isinstance(z, MatrixPoint):
        return z.matrix
    return np.asarray(z, dtype=np.complex128)


@dataclass(frozen=True)
class MatrixPoint:
    """A complex ``r x (r+b)`` matrix with cached singular values."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2:
            raise ValueError("a matrix point must be two-dimensional")
        if m.shape[0] > m.shape[1]:
            raise ValueError(f"expected r x (r+b) with b >= 0, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix point has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self):
        return self.matrix.shape

    @cached_property
    def singular_values(self) -> np.ndarray:
        return singular_values(self.matrix)

    @property
    def spectral_norm(self) -> float:
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    def domain(self) -> DomainSpec:
        r, c = self.matrix.shape
        return DomainSpec(r, c - r)

    def to_json(self) -> dict:
        r, c = self.matrix.shape
        flat = self.matrix.reshape(-1)
        return {"rows": r, "cols": c, "re": flat.real.tolist(), "im": flat.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "MatrixPoint":
        try:
            r, c = int(obj["rows"]), int(obj["cols"])
            re = np.asarray(obj["re"], dtype=float)
            im = np.asarray(obj["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed matrix point: {exc}") from exc
        if re.size != r * c or im.size != r * c:
            raise ValueError("matrix point entry count does not match rows*cols")
        return cls((re + 1j * im).reshape(r, c))


def singular_values(z) -> np.ndarray:
    """Singular values, descending. Accepts a single matrix or a stack."""
    m = as_matrix(z)
    if not np.all(np.isfinite(m)):
        raise ValueError("non-finite entries")
    return np.linalg.svd(m, compute_uv=False)


def elementary_symmetric(ell: int, t) -> float:
    """``sigma_ell(t)`` with ``sigma_0 = 1``, via the generating-function recurrence."""
    t = np.atleast_1d(np.asarray(t))
    if not 0 <= ell <= t.size:
        raise ValueError(f"ell={ell} out of range for {t.size} variables")
    return esym_all(t)[ell]


def esym_all(t) -> np.ndarray:
    """All elementary symmetric polynomials ``sigma_0 .. sigma_n`` of ``t``."""
    t = np.atleast_1d(np.asarray(t))
    if t.size == 0:
        return np.ones(1, dtype=t.dtype if t.dtype.kind in "fc" else float)
    return _kernels.esym_batch(t.reshape(1, -1))[0]


def leading_ones_rhs(t, q: int) -> np.ndarray:
    """Right-hand side ``sum_i C(q,i) sigma_{ell-i}(t_{q+1..r})`` for ``ell = 1..r``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    r = t.size
    if not 1 <= q <= r:
        raise ValueError(f"q={q} out of range 1..{r}")
    tail = esym_all(t[q:])
    out = np.zeros(r)
    for ell in range(1, r + 1):
        for i in range(max(ell - (r - q), 0), min(q, ell) + 1):
            out[ell - 1] += comb(q, i) * tail[ell - i]
    return out


def leading_ones_residual(t, q: int) -> np.ndarray:
    """``sigma_ell(t) - sum_i C(q,i) sigma_{ell-i}(t_{q+1},...,t_r)`` for ``ell = 1..r``.

    Vanishes exactly when ``t_1 = ... = t_q = 1``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return esym_all(t)[1:] - leading_ones_rhs(t, q)


# name used by the public interface
lemma_a1_residual = leading_ones_residual


# ---------------------------------------------------------------------------
# Haar sampling
# ---------------------------------------------------------------------------

def _phase_fixed_qr(g: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phase = diag / np.abs(diag)
    return q * phase[..., None, :]


def haar_unitary(n: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Haar-distributed ``n x n`` unitary (or a stack of them)."""
    shape = (n, n) if size is None else (size, n, n)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return _phase_fixed_qr(g)


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CARTAN_THREADS", "1")))
    except ValueError:
        return 1


def _shilov_block(domain: DomainSpec, count: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    u = haar_unitary(domain.cols, rng, size=count)
    return np.ascontiguousarray(u[:, : domain.r, :])


def haar_sample_shilov(domain: DomainSpec, n: int, seed: int) -> np.ndarray:
    """``n`` Haar-distributed points of the Shilov boundary, shape ``(n, r, r+b)``.

    Each point is the top ``r`` rows of a phase-normalized QR unitary of a
    complex Ginibre matrix. Sample ``i`` belongs to block ``i // SAMPLE_BLOCK``,
    which is seeded by its own spawned ``SeedSequence`` child, so the stream
    is identical for any ``CARTAN_THREADS`` setting.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    nblocks = -(-n // SAMPLE_BLOCK)
    children = np.random.SeedSequence(seed).spawn(nblocks)
    sizes = [min(SAMPLE_BLOCK, n - k * SAMPLE_BLOCK) for k in range(nblocks)]
    workers = min(_thread_count(), nblocks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            blocks = list(pool.map(lambda k: _shilov_block(domain, sizes[k], children[k]), range(nblocks)))
    else:
        blocks = [_shilov_block(domain, sizes[k], children[k]) for k in range(nblocks)]
    return np.concatenate(blocks, axis=0)


def random_point(domain: DomainSpec, t, rng: np.random.Generator) -> np.ndarray:
    """``u [diag(t) | 0] v`` for Haar ``u``, ``v``: a point with singular values ``t``."""
    t = np.asarray(t, dtype=float)
    if t.size != domain.r:
        raise ValueError("need one singular value per row")
    core = np.zeros(domain.shape, dtype=np.complex128)
    core[np.arange(domain.r), np.arange(domain.r)] = t
    return haar_unitary(domain.r, rng) @ core @ haar_unitary(domain.cols, rng)
