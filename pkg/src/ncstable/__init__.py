"""Stability of linear matrix pencils and noncommutative polynomials on the matricial upper orthant."""

from .core import LinearPencil, MatrixTuple, NcPolynomial, direct_sum, eval_pencil, eval_poly
from .engine import StabilityCertificate, Verdict, check_stable, find_witness, verify_certificate
from .errors import EvalError, InputError
from .numerics import DEFAULT_TOL, ToleranceConfig
from .realization import check_stable_poly, detrep, gen_stable_poly, verify_detrep
from .transforms import RoesserSpec, check_hurwitz, check_roesser, check_schur, verify_reduced

__all__ = [
    "LinearPencil", "MatrixTuple", "NcPolynomial", "direct_sum", "eval_pencil", "eval_poly",
    "StabilityCertificate", "Verdict", "check_stable", "find_witness", "verify_certificate",
    "EvalError", "InputError", "DEFAULT_TOL", "ToleranceConfig",
    "check_stable_poly", "detrep", "gen_stable_poly", "verify_detrep",
    "RoesserSpec", "check_hurwitz", "check_roesser", "check_schur", "verify_reduced",
]
