"""Numerical toolkit for type-I Cartan domains."""
from .domain import DomainSpec, MatrixPoint, Signature, haar_sample_shilov, make_domain, pochhammer, singular_values
from .strata import classify_point
from .tripledet import delta, delta_l

__all__ = [
    "DomainSpec", "MatrixPoint", "Signature", "classify_point", "delta", "delta_l",
    "haar_sample_shilov", "make_domain", "pochhammer", "singular_values",
]
__version__ = "0.1.0"
