"""Jordan triple determinant calculus on type-I domains.

Points are ``r x (r+b)`` complex matrices (or stacks of them, leading axes
broadcast). Coordinates are flattened row-major: ``z_{ij}`` is coordinate
``i * (r + b) + j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from math import comb, factorial

import numpy as np

from . import _kernels
from .domain import DomainSpec, Signature, as_matrix, pochhammer


def _pair(z, w):
    z = as_matrix(z)
    w = z if w is None else as_matrix(w)
    if z.shape[-2:] != w.shape[-2:]:
        raise ValueError(f"shape mismatch: {z.shape[-2:]} vs {w.shape[-2:]}")
    return z, w


def _herm(m):
    return np.conj(np.swapaxes(m, -1, -2))


def delta(z, w=None):
    """``det(I_r - z w^*)``."""
    z, w = _pair(z, w)
    r = z.shape[-2]
    return np.linalg.det(np.eye(r) - z @ _herm(w))


def delta_components(z, w=None) -> np.ndarray:
    """``[Delta^(0), ..., Delta^(r)]`` along the last axis.

    ``Delta^(l)(z, w)`` is the ``l``-th coefficient of the characteristic
    polynomial of ``z w^*``, computed as elementary symmetric polynomials of
    its eigenvalues (Hermitian eigenvalues when ``w`` is omitted).
    """
    same = w is None
    z, w = _pair(z, w)
    prod = z @ _herm(w)
    lead = prod.shape[:-2]
    r = prod.shape[-1]
    if same:
        eig = np.linalg.eigvalsh(prod)
    else:
        eig = np.linalg.eigvals(prod)
    comps = _kernels.esym_batch(eig.reshape(-1, r)).reshape(*lead, r + 1)
    if same:
        return comps.real
    return comps


def delta_l(z, w=None, ell: int = 1):
    r = as_matrix(z).shape[-2]
    if not 0 <= ell <= r:
        raise ValueError(f"ell={ell} out of range 0..{r}")
    return delta_components(z, w)[..., ell]


def delta_l_principal_minors(z, w=None, ell: int = 1):
    """Sum of the principal ``ell x ell`` minors of ``z w^*``."""
    z, w = _pair(z, w)
    prod = z @ _herm(w)
    r = prod.shape[-1]
    if not 0 <= ell <= r:
        raise ValueError(f"ell={ell} out of range 0..{r}")
    if ell == 0:
        return np.ones(prod.shape[:-2], dtype=prod.dtype)
    total = 0
    for idx in combinations(range(r), ell):
        sub = prod[..., idx, :][..., :, idx]
        total = total + np.linalg.det(sub)
    return total


@dataclass(frozen=True)
class MinorIndexPair:
    """Row set ``I`` and column set ``J`` (0-based, strictly increasing)."""

    rows: tuple
    cols: tuple

    def __post_init__(self):
        rows, cols = tuple(int(i) for i in self.rows), tuple(int(j) for j in self.cols)
        if len(rows) != len(cols) or not rows:
            raise ValueError("row and column sets must be nonempty and of equal size")
        if any(a >= b for a, b in zip(rows, rows[1:])) or any(a >= b for a, b in zip(cols, cols[1:])):
            raise ValueError("indices must be strictly increasing")
        if rows[0] < 0 or cols[0] < 0:
            raise ValueError("indices must be nonnegative")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @property
    def ell(self) -> int:
        return len(self.rows)


def minor_pairs(r: int, cols: int, ell: int):
    """All ``C(r, ell) * C(cols, ell)`` index pairs of size ``ell``."""
    return [MinorIndexPair(i, j) for i in combinations(range(r), ell) for j in combinations(range(cols), ell)]


def minor_value(z, pair: MinorIndexPair):
    """Determinant of the submatrix ``z[I, J]``."""
    z = as_matrix(z)
    if pair.rows[-1] >= z.shape[-2] or pair.cols[-1] >= z.shape[-1]:
        raise ValueError("minor indices exceed the matrix shape")
    sub = z[..., pair.rows, :][..., :, pair.cols]
    return np.linalg.det(sub)


def cauchy_binet_sum(z, w=None, ell: int = 1):
    """``sum_{I,J} m_{I,J}(z) conj(m_{I,J}(w))``; equals ``Delta^(ell)(z, w)``."""
    z, w = _pair(z, w)
    r, c = z.shape[-2:]
    if ell == 0:
        return np.ones(z.shape[:-2], dtype=complex)
    total = 0
    for pair in minor_pairs(r, c, ell):
        total = total + minor_value(z, pair) * np.conj(minor_value(w, pair))
    return total


def signature_divisor(ell: int, a: float = 2) -> float:
    """``prod_{j=1}^{ell} (1 + (a/2)(j-1))``; equals ``ell!`` for ``a = 2``."""
    out = 1.0
    for j in range(1, ell + 1):
        out *= 1 + 0.5 * a * (j - 1)
    return out


def k_signature_component(z, w, ell: int, domain: DomainSpec):
    """Fischer-Fock reproducing kernel ``K_(ell)`` of the signature-``(ell)`` block."""
    if not 1 <= ell <= domain.r:
        raise ValueError(f"ell={ell} out of range 1..{domain.r}")
    return delta_l(z, w, ell) / signature_divisor(ell, domain.a)


def signature_consistency(z, w, ell: int, domain: DomainSpec):
    """``(-1)^ell (-1)_(ell) K_(ell)``, which should reproduce ``Delta^(ell)``."""
    sig = Signature.ell(ell, domain.r)
    return (-1) ** ell * pochhammer(-1.0, sig, domain.a) * k_signature_component(z, w, ell, domain)


def kernel_power(z, w, nu: float):
    """``Delta(z, w)^(-nu)`` continued analytically from ``z w^* = 0``.

    When the spectral radius of ``z w^*`` is below one the value is
    ``exp(-nu * sum log(1 - lambda))`` over its eigenvalues, which is the
    continuation along ``s -> s z``. Otherwise the principal branch is used and
    values on the closed negative real axis are rejected.
    """
    z, w = _pair(z, w)
    if z.ndim != 2:
        raise ValueError("kernel_power takes single points")
    eig = np.linalg.eigvals(z @ _herm(w))
    if eig.size == 0 or np.max(np.abs(eig)) < 1.0:
        return complex(np.exp(-nu * np.sum(np.log1p(-eig))))
    det = complex(np.prod(1.0 - eig))
    if det.real <= 0.0 and abs(det.imag) <= 1e-14 * max(1.0, abs(det)):
        raise ValueError(f"Delta(z, w) = {det} lies on the branch cut of the power function")
    return complex(det ** (-nu))


def szego_kernel(z, w, domain: DomainSpec):
    """Hardy-space reproducing kernel ``Delta(z, w)^(-d/r)``."""
    _check_shape(z, domain)
    _check_shape(w, domain)
    return kernel_power(z, w, domain.hardy_nu)


def poisson_kernel(xi, z, domain: DomainSpec, shilov_tol: float = 1e-8) -> float:
    """``|K(xi, z)|^2 / K(z, z)`` for ``xi`` on the Shilov boundary, ``z`` interior."""
    xi, z = as_matrix(xi), as_matrix(z)
    _check_shape(xi, domain)
    _check_shape(z, domain)
    res = delta_components(xi)[1:] - _binomials(domain.r)
    if np.max(np.abs(res)) > shilov_tol * max(1.0, np.max(_binomials(domain.r))):
        raise ValueError("xi is not on the Shilov boundary")
    if np.linalg.norm(z, 2) >= 1.0:
        raise ValueError("z is not an interior point")
    kxz = szego_kernel(xi, z, domain)
    kzz = szego_kernel(z, z, domain).real
    return float(abs(kxz) ** 2 / kzz)


def fk_residual_rank1(z, w, nu: float, n_terms: int, domain: DomainSpec) -> float:
    """Error of the Faraut-Koranyi series truncated after degree ``n_terms`` (rank one).

    At rank one ``K_(n)(z, w) = <z, w>^n / n!`` and ``(nu)_(n)`` is the rising
    factorial.
    """
    if domain.r != 1:
        raise ValueError("the Faraut-Koranyi check is only implemented at rank one")
    z, w = as_matrix(z), as_matrix(w)
    _check_shape(z, domain)
    _check_shape(w, domain)
    x = complex(np.vdot(w.reshape(-1), z.reshape(-1)))
    if abs(x) >= 1.0:
        raise ValueError("need |<z, w>| < 1")
    lhs = kernel_power(z, w, nu)
    term, total = 1.0 + 0j, 1.0 + 0j
    for n in range(n_terms):
        term *= (nu + n) / (n + 1) * x
        total += term
    return float(abs(lhs - total))


def _binomials(r: int) -> np.ndarray:
    return np.array([comb(r, l) for l in range(1, r + 1)], dtype=float)


def _check_shape(z, domain: DomainSpec):
    if as_matrix(z).shape[-2:] != domain.shape:
        raise ValueError(f"point shape {as_matrix(z).shape[-2:]} does not match domain {domain.shape}")


# ---------------------------------------------------------------------------
# minors as polynomials
# ---------------------------------------------------------------------------

def _perm_sign(perm) -> int:
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def minor_polynomial(pair: MinorIndexPair, domain: DomainSpec) -> dict:
    """Leibniz expansion of ``m_{I,J}`` as ``{exponent tuple: integer coefficient}``."""
    c = domain.cols
    poly = {}
    for perm in permutations(range(pair.ell)):
        expo = [0] * domain.d
        for k, p in enumerate(perm):
            expo[pair.rows[k] * c + pair.cols[p]] += 1
        key = tuple(expo)
        poly[key] = poly.get(key, 0) + _perm_sign(perm)
    return {k: v for k, v in poly.items() if v != 0}


def fischer_norm_sq(poly: dict) -> int:
    """Fischer-Fock norm ``sum |c_alpha|^2 alpha!`` for integer coefficients."""
    total = 0
    for expo, coef in poly.items():
        weight = 1
        for e in expo:
            weight *= factorial(e)
        total += abs(coef) ** 2 * weight
    return total
