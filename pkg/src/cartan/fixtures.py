"""Random normal fixtures used by the checks and the acceptance runner."""
from __future__ import annotations

import numpy as np

from .domain import DomainSpec, haar_sample_shilov, haar_unitary, random_point
from .operators import CommutingTuple, normal_fixture


def shilov_points(domain: DomainSpec, k: int, rng: np.random.Generator) -> np.ndarray:
    return haar_sample_shilov(domain, k, int(rng.integers(2**31)))


def shilov_fixture(domain: DomainSpec, rng, max_points: int = 6, max_mult: int = 3,
                   conjugate: bool = True):
    """Returns ``(tuple, points, multiplicities)`` with joint spectrum on the Shilov boundary."""
    k = int(rng.integers(1, max_points + 1))
    pts = shilov_points(domain, k, rng)
    mult = rng.integers(1, max_mult + 1, size=k).tolist()
    u = haar_unitary(int(sum(mult)), rng) if conjugate else None
    return normal_fixture(pts, domain, mult, u), pts, mult


def off_boundary_fixture(domain: DomainSpec, rng, max_points: int = 6, conjugate: bool = True):
    """Fixture whose points all sit at distance from the Shilov boundary.

    Interior points have singular values in ``[0, 0.9]``, exterior ones in
    ``[1.25, 2]``; the first Cartan residual is then at least ``0.19``.
    """
    k = int(rng.integers(1, max_points + 1))
    pts = []
    for _ in range(k):
        if rng.random() < 0.5:
            t = rng.uniform(0.0, 0.9, domain.r)
        else:
            t = rng.uniform(1.25, 2.0, domain.r)
        pts.append(random_point(domain, np.sort(t)[::-1], rng))
    mult = [1] * k
    u = haar_unitary(k, rng) if conjugate else None
    return normal_fixture(pts, domain, mult, u), np.array(pts), mult


def sample_fixture_domain(rng, choices=((1, 0), (1, 2), (2, 0), (2, 1), (3, 0))) -> DomainSpec:
    r, b = choices[int(rng.integers(len(choices)))]
    return DomainSpec(r, b)


def fixture_points(T: CommutingTuple):
    """Diagonal of an unconjugated fixture, as points."""
    diag = np.diagonal(T.matrices, axis1=-2, axis2=-1)
    return np.moveaxis(diag, -1, 0)
