"""Musielak-Orlicz Hardy spaces of differential forms: norms, atoms, BMO and weak factorization."""

from .atoms import Atom, AtomicDecomposition, closed_atomic_decompose, make_atom, nq_functional, synthesize, \
    validate_atom
from .bmo import bmo_plus_norm, bmo_seminorm, bmo_wp_norm, john_nirenberg_certificate, pairing
from .errors import DomainError, GridMismatchError, NotClosedError, SolverError, SupportError
from .factorize import divcurl_check, factor_atom, l1_factorize, scalar_weak_factorize, weak_factorize
from .grid_forms import Ball, DiscreteForm, Grid, codifferential, exterior_derivative, read_dff, wedge, write_dff
from .growth import AdmissibleTriple, GrowthFunction, luxembourg_norm, power, theta
from .maximal import Mollifier, hardy_norm, hlog_norm, h1_norm, plus_maximal

__version__ = "0.1.0"

__all__ = [
    "AdmissibleTriple", "Atom", "AtomicDecomposition", "Ball", "DiscreteForm", "DomainError", "Grid",
    "GridMismatchError", "GrowthFunction", "Mollifier", "NotClosedError", "SolverError", "SupportError",
    "bmo_plus_norm", "bmo_seminorm", "bmo_wp_norm", "closed_atomic_decompose", "codifferential",
    "divcurl_check", "exterior_derivative", "factor_atom", "h1_norm", "hardy_norm", "hlog_norm",
    "john_nirenberg_certificate", "l1_factorize", "luxembourg_norm", "make_atom", "nq_functional", "pairing",
    "plus_maximal", "power", "read_dff", "scalar_weak_factorize", "synthesize", "theta", "validate_atom",
    "wedge", "weak_factorize", "write_dff",
]
