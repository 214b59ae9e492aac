"""Smoothness of generalized solutions of model nonlocal elliptic problems in plane angles.

Typical use::

    from nlsmooth import analyze, explain, fixture
    v = analyze(fixture("FIX-BS", -0.25, -0.75).problem)
    print(v.kind)         # "Violated"
    print(explain(v))
"""

from .certificate import blowup_profile, build_power_solution, verify_residual
from .classify import classify_eigenvalue, strip_report
from .conditions import check_conditions_33_34, solve_monomial, witness_log_solution
from .consistency import (
    BoundaryTrace,
    admissible_solve,
    beta_decompose,
    build_hat_system,
    check_condition_43_polynomial,
    check_condition_44,
    consistency_check,
)
from .document import Document, DocumentError, load, loads
from .model import BoundaryRow, HomogeneousOperator, InvalidProblem, ModelProblem, NonlocalTerm, laplacian_op, validate
from .oracle import brute_polynomial_solve, fixture
from .pencil import Collocation, Pencil, char_det
from .polar import polar_residual, to_polar
from .spectrum import EigenvalueRecord, StripQuery, count_zeros, find_in_strip
from .verdict import Options, Verdict, analyze, explain

__all__ = [
    "BoundaryRow",
    "BoundaryTrace",
    "Collocation",
    "Document",
    "DocumentError",
    "EigenvalueRecord",
    "HomogeneousOperator",
    "InvalidProblem",
    "ModelProblem",
    "NonlocalTerm",
    "Options",
    "Pencil",
    "StripQuery",
    "Verdict",
    "admissible_solve",
    "analyze",
    "beta_decompose",
    "blowup_profile",
    "brute_polynomial_solve",
    "build_hat_system",
    "build_power_solution",
    "char_det",
    "check_condition_43_polynomial",
    "check_condition_44",
    "check_conditions_33_34",
    "classify_eigenvalue",
    "consistency_check",
    "count_zeros",
    "explain",
    "find_in_strip",
    "fixture",
    "laplacian_op",
    "load",
    "loads",
    "polar_residual",
    "solve_monomial",
    "strip_report",
    "to_polar",
    "validate",
    "verify_residual",
    "witness_log_solution",
]
