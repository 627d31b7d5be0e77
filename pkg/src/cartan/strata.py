"""Boundary stratification of type-I domains.

Two independent verdicts are produced for each point: one read off the
singular values, one from Jordan-triple-determinant residuals (the Shilov
identities ``Delta^(l)(z,z) = C(r,l)`` and their rank-``q`` analogues through
the reduction map ``Psi``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .domain import DomainSpec, as_matrix, esym_all, random_point, singular_values
from .tripledet import delta_components

INTERIOR, STRATUM, SHILOV, EXTERIOR = "interior", "stratum", "shilov", "exterior"

#: residual threshold as a multiple of the classification tolerance
RESIDUAL_FACTOR = 10.0


@dataclass
class PointClass:
    kind: str
    q: int | None
    singular_values: np.ndarray
    tol: float
    shilov_residual: np.ndarray = field(repr=False)
    stratum_residuals: dict = field(repr=False)
    residual_kind: str = ""
    residual_q: int | None = None

    @property
    def consistent(self) -> bool:
        return self.kind == self.residual_kind and self.q == self.residual_q

    def to_json(self) -> dict:
        return {
            "class": self.kind,
            "q": self.q,
            "singular_values": [float(t) for t in self.singular_values],
            "residuals": {
                "shilov": [float(x) for x in self.shilov_residual],
                "stratum": {str(q): [float(x) for x in v] for q, v in self.stratum_residuals.items()},
            },
            "residual_class": self.residual_kind,
            "residual_q": self.residual_q,
            "tol": self.tol,
        }


def _check(z, domain: DomainSpec) -> np.ndarray:
    m = as_matrix(z)
    if m.shape[-2:] != domain.shape:
        raise ValueError(f"point shape {m.shape[-2:]} does not match domain {domain.shape}")
    return m


def shilov_membership_residual(z, domain: DomainSpec) -> np.ndarray:
    """``Delta^(l)(z, z) - C(r, l)`` for ``l = 1..r``."""
    m = _check(z, domain)
    binoms = np.array([comb(domain.r, l) for l in range(1, domain.r + 1)], dtype=float)
    return delta_components(m)[..., 1:] - binoms


def psi_map(z, q: int, domain: DomainSpec | None = None) -> np.ndarray:
    """Canonical image ``[diag(t_{q+1}, ..., t_r) | 0]`` of the reduction map.

    The determinant identities only see the singular values of ``Psi(z)``, and
    any two admissible images differ by a unitary pair, so the canonical
    representative is used.
    """
    m = as_matrix(z)
    if m.ndim != 2:
        raise ValueError("psi_map takes a single point")
    r, c = m.shape
    if domain is not None:
        _check(m, domain)
    if not 1 <= q < r:
        raise ValueError(f"q={q} out of range 1..{r - 1}")
    t = singular_values(m)
    out = np.zeros((r - q, c - q), dtype=np.complex128)
    out[np.arange(r - q), np.arange(r - q)] = t[q:]
    return out


def stratum_rhs(psi_components: np.ndarray, r: int, q: int) -> np.ndarray:
    """``sum_i C(q,i) Delta'^(l-i)(Psi, Psi)`` for ``l = 1..r``."""
    out = np.zeros(r)
    for ell in range(1, r + 1):
        for i in range(max(ell - (r - q), 0), min(q, ell) + 1):
            out[ell - 1] += comb(q, i) * psi_components[ell - i]
    return out


def stratum_membership_residual(z, q: int, domain: DomainSpec) -> np.ndarray:
    """Residual of the rank-``q`` boundary identity; zero on the closure of the ``q``-th stratum."""
    m = _check(z, domain)
    if m.ndim != 2:
        raise ValueError("stratum_membership_residual takes a single point")
    if not 1 <= q < domain.r:
        raise ValueError(f"q={q} out of range 1..{domain.r - 1}")
    lhs = delta_components(m)[1:]
    psi = psi_map(m, q)
    return lhs - stratum_rhs(delta_components(psi), domain.r, q)


def residual_scale(z) -> float:
    return max(1.0, float(np.max(np.abs(delta_components(as_matrix(z))))))


def _delta_route_exterior(components: np.ndarray) -> bool:
    # largest root of x^r - D1 x^(r-1) + D2 x^(r-2) - ... ; its roots are t_j^2
    r = components.size - 1
    coeffs = np.array([(-1) ** l * components[l] for l in range(r + 1)])
    roots = np.roots(coeffs)
    return bool(np.max(roots.real) > 1.0)


def classify_by_residuals(z, domain: DomainSpec, tol: float = 1e-8):
    """Verdict computed from determinant residuals only.

    The deepest ``q`` whose rank-``q`` identity holds (``q = r`` being the
    Shilov identity) gives the boundary class. Points satisfying none of the
    identities are split into interior/exterior by the largest root of the
    characteristic polynomial whose coefficients are ``Delta^(l)(z, z)``.
    """
    m = _check(z, domain)
    thresh = RESIDUAL_FACTOR * tol * residual_scale(m)
    if np.max(np.abs(shilov_membership_residual(m, domain))) <= thresh:
        return SHILOV, domain.r
    for q in range(domain.r - 1, 0, -1):
        if np.max(np.abs(stratum_membership_residual(m, q, domain))) <= thresh:
            return STRATUM, q
    comps = delta_components(m)
    if _delta_route_exterior(comps):
        return EXTERIOR, None
    return INTERIOR, 0


def classify_point(z, domain: DomainSpec, tol: float = 1e-8) -> PointClass:
    """Classify ``z`` by its singular values, with determinant residuals attached."""
    m = _check(z, domain)
    if m.ndim != 2:
        raise ValueError("classify_point takes a single point")
    if tol <= 0:
        raise ValueError("tol must be positive")
    t = singular_values(m)
    if t[0] > 1.0 + tol:
        kind, q = EXTERIOR, None
    else:
        q = int(np.count_nonzero(t >= 1.0 - tol))
        if q == 0:
            kind = INTERIOR
        elif q == domain.r:
            kind = SHILOV
        else:
            kind = STRATUM
    strata = {k: stratum_membership_residual(m, k, domain) for k in range(1, domain.r)}
    rkind, rq = classify_by_residuals(m, domain, tol)
    return PointClass(
        kind=kind,
        q=q,
        singular_values=t,
        tol=tol,
        shilov_residual=shilov_membership_residual(m, domain),
        stratum_residuals=strata,
        residual_kind=rkind,
        residual_q=rq,
    )


def classify_product(points, domains, tol: float = 1e-8) -> dict:
    """Per-factor classification of a point of a product of type-I domains.

    The product point lies on the Shilov boundary of the product exactly when
    every factor does.
    """
    if len(points) != len(domains):
        raise ValueError("need one domain per factor")
    factors = [classify_point(z, dom, tol) for z, dom in zip(points, domains)]
    return {
        "factors": [f.to_json() for f in factors],
        "product_shilov": all(f.kind == SHILOV for f in factors),
        "product_interior": all(f.kind == INTERIOR for f in factors),
        "consistent": all(f.consistent for f in factors),
    }


def sv_residual_oracle(t, q: int) -> np.ndarray:
    """The rank-``q`` residual evaluated directly from squared singular values."""
    t2 = np.asarray(t, dtype=float) ** 2
    r = t2.size
    tail = esym_all(t2[q:])
    return esym_all(t2)[1:] - stratum_rhs(tail, r, q)


# ---------------------------------------------------------------------------
# planted points
# ---------------------------------------------------------------------------

def class_labels(r: int) -> list:
    return [INTERIOR] + [f"{STRATUM}{q}" for q in range(1, r)] + [SHILOV, EXTERIOR]


def label_of(kind: str, q) -> str:
    return f"{STRATUM}{q}" if kind == STRATUM else kind


def planted_singular_values(label: str, r: int, rng: np.random.Generator) -> np.ndarray:
    """Singular values for a point planted in class ``label``."""
    if label == INTERIOR:
        t = rng.uniform(0.0, 0.99, r)
    elif label == SHILOV:
        t = np.ones(r)
    elif label == EXTERIOR:
        top = rng.uniform(1.01, 2.0)
        t = np.concatenate([[top], rng.uniform(0.0, top, r - 1)])
    elif label.startswith(STRATUM):
        q = int(label[len(STRATUM):])
        t = np.concatenate([np.ones(q), rng.uniform(0.0, 0.99, r - q)])
    else:
        raise ValueError(f"unknown class label {label!r}")
    return np.sort(t)[::-1]


def plant_point(label: str, domain: DomainSpec, rng: np.random.Generator) -> np.ndarray:
    return random_point(domain, planted_singular_values(label, domain.r, rng), rng)


def boundary_scan(domain: DomainSpec, n: int, seed: int, tol: float = 1e-8) -> dict:
    """Plant ``n`` points per class and cross-tabulate the two classification routes."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    labels = class_labels(domain.r)
    pos = {lab: i for i, lab in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    planted_hits = 0
    for lab in labels:
        for _ in range(n):
            pc = classify_point(plant_point(lab, domain, rng), domain, tol)
            sv, res = label_of(pc.kind, pc.q), label_of(pc.residual_kind, pc.residual_q)
            confusion[pos[sv], pos[res]] += 1
            planted_hits += sv == lab
    total = int(confusion.sum())
    agree = int(np.trace(confusion))
    return {
        "labels": labels,
        "confusion": confusion.tolist(),
        "points": total,
        "agreement": agree / total,
        "planted_agreement": planted_hits / total,
    }
