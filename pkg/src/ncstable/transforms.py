"""
Hurwitz, Schur and Roesser stability questions as stable-pencil questions.

Each ``check_*`` returns a :class:`StabilityCertificate` whose stage data
refer to the reduced pencil (``meta["reduction"]`` names it) and whose
witness, when present, is a point of the original domain of the question.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .core import LinearPencil, MatrixTuple, eval_pencil, transpose_pencil
from .engine import (
    DEFAULT_WITNESS_BUDGET,
    StabilityCertificate,
    Verdict,
    Verification,
    check_stable,
    find_witness,
    verify_certificate,
)
from .errors import InputError
from .numerics import DEFAULT_TOL, ToleranceConfig, min_singular_value

# ---------------------------------------------------------------------------
# Cayley transform
# ---------------------------------------------------------------------------


def cayley(X: MatrixTuple) -> MatrixTuple:
    """``(X_j - iI)(X_j + iI)^{-1}``: the upper orthant onto the polydisk."""
    out = []
    for Xj in X:
        eye = np.eye(Xj.shape[0])
        try:
            out.append(np.linalg.solve((Xj + 1j * eye).T, (Xj - 1j * eye).T).T)
        except np.linalg.LinAlgError as exc:
            raise InputError("X_j + iI is singular") from exc
    return MatrixTuple(out)


def inverse_cayley(Z: MatrixTuple) -> MatrixTuple:
    """``i (I + Z_j)(I - Z_j)^{-1}``, inverse of :func:`cayley`."""
    out = []
    for Zj in Z:
        eye = np.eye(Zj.shape[0])
        try:
            out.append(1j * np.linalg.solve((eye - Zj).T, (eye + Zj).T).T)
        except np.linalg.LinAlgError as exc:
            raise InputError("I - Z_j is singular") from exc
    return MatrixTuple(out)


# ---------------------------------------------------------------------------
# Hurwitz
# ---------------------------------------------------------------------------


def hurwitz_to_stable(L: LinearPencil) -> LinearPencil:
    """``L(-i x)``: stable exactly when ``L`` has full rank wherever every ``real X_j > 0``."""
    C = L.coeffs.copy()
    C[1:] *= -1j
    return LinearPencil(C)


def _finish(cert: StabilityCertificate, reduction: str) -> StabilityCertificate:
    cert.meta["reduction"] = reduction
    return cert


def check_hurwitz(L: LinearPencil, cfg: ToleranceConfig = DEFAULT_TOL, seed=0,
                  witness_budget: int = 0) -> StabilityCertificate:
    """
    Hurwitz stability of ``L`` through :func:`hurwitz_to_stable`.

    A witness ``X`` of the reduced pencil is returned as ``-iX``, whose real
    parts are positive definite.
    """
    cert = check_stable(hurwitz_to_stable(L), cfg, seed, witness_budget)
    if cert.witness is not None:
        cert.witness = MatrixTuple([-1j * Xj for Xj in cert.witness])
        cert.witness_domain = "right"
    return _finish(cert, "hurwitz")


# ---------------------------------------------------------------------------
# Schur
# ---------------------------------------------------------------------------


def _constant_to_unit(A0: np.ndarray, cfg: ToleranceConfig) -> tuple[np.ndarray, np.ndarray] | None:
    """
    Invertible ``P``, ``Q`` with ``P A0 Q = [0; I]``, or None if ``A0`` lacks full column rank.
    """
    rows, cols = A0.shape
    if cols == 0:
        return np.eye(rows, dtype=complex), np.eye(0, dtype=complex)
    Qr, R, perm = scipy.linalg.qr(A0, pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size < cols or diag[0] == 0 or diag[-1] <= cfg.rank_tol * diag[0]:
        return None
    # A0[:, perm] = Qr R, so Qr^* A0 Pi R1^{-1} = [I; 0]
    Pi = np.eye(cols)[:, perm]
    Q = Pi @ np.linalg.inv(R[:cols])
    order = np.r_[np.arange(cols, rows), np.arange(cols)]
    P = Qr.conj().T[order]
    return P, Q


def schur_target_pencil(L: LinearPencil) -> LinearPencil:
    """
    The ``(d eps + delta) x (d eps + eps)`` pencil before elimination.

    Block row ``j`` is ``I (x_j + i)`` in column block ``j`` and ``-I`` in
    the last column block; the bottom block row is ``A_j (x_j - i)`` in
    column block ``j`` and ``A_0`` in the last.  Its kernel at ``X`` is
    ``L(cayley(X))`` applied to the last block.
    """
    d, rows, eps = L.d, L.rows, L.cols
    n_r, n_c = d * eps + rows, d * eps + eps
    C = np.zeros((d + 1, n_r, n_c), dtype=complex)
    last = slice(d * eps, n_c)
    for j in range(1, d + 1):
        blk = slice((j - 1) * eps, j * eps)
        C[j, blk, blk] = np.eye(eps)
        C[0, blk, blk] = 1j * np.eye(eps)
        C[0, blk, last] = -np.eye(eps)
        C[j, d * eps:, blk] = L.coeffs[j]
        C[0, d * eps:, blk] = -1j * L.coeffs[j]
    C[0, d * eps:, last] = L.coeffs[0]
    return LinearPencil(C)


def schur_to_stable(L: LinearPencil, cfg: ToleranceConfig = DEFAULT_TOL) -> LinearPencil | None:
    """
    Pencil ``L1`` that is stable exactly when ``L`` is Schur stable.

    ``L`` is oriented so that ``rows >= cols`` and changed by constant
    invertible factors so that ``A_0 = [0; I]``; writing ``A_j = [T_j; B_j]``
    accordingly, eliminating the last column block of
    :func:`schur_target_pencil` gives

        block (j, k):  delta_jk I (x_j + i) + B_k (x_k - i)
        bottom, k:     T_k (x_k - i)

    Returns None when ``A_0`` lacks full column rank; then ``L(0)`` is
    already singular and ``L`` is not Schur stable.
    """
    if L.rows < L.cols:
        L = transpose_pencil(L)
    factors = _constant_to_unit(L.coeffs[0], cfg)
    if factors is None:
        return None
    P, Q = factors
    M = L.left(P).right(Q)
    d, rows, eps = M.d, M.rows, M.cols
    top = rows - eps
    C = np.zeros((d + 1, d * eps + top, d * eps), dtype=complex)
    for k in range(1, d + 1):
        col = slice((k - 1) * eps, k * eps)
        T, B = M.coeffs[k][:top], M.coeffs[k][top:]
        C[k, col, col] += np.eye(eps)
        C[0, col, col] += 1j * np.eye(eps)
        for j in range(1, d + 1):
            row = slice((j - 1) * eps, j * eps)
            C[k, row, col] += B
            C[0, row, col] += -1j * B
        C[k, d * eps:, col] = T
        C[0, d * eps:, col] = -1j * T
    return LinearPencil(C)


def _zero_witness(L: LinearPencil) -> MatrixTuple:
    return MatrixTuple.scalars([0.0] * L.d)


def check_schur(L: LinearPencil, cfg: ToleranceConfig = DEFAULT_TOL, seed=0,
                witness_budget: int = DEFAULT_WITNESS_BUDGET) -> StabilityCertificate:
    """
    Schur stability: full rank on every tuple of strict contractions.

    Unstable verdicts carry a polydisk witness when one is available: the
    Cayley image of a witness of the reduced pencil, otherwise the result
    of a polydisk search on ``L`` itself (``witness_budget`` evaluations).
    """
    if L.d == 0:
        cert = check_stable(L, cfg, seed)
        cert.witness_domain = "polydisk"
        return _finish(cert, "schur")
    L1 = schur_to_stable(L, cfg)
    if L1 is None:
        cert = StabilityCertificate(Verdict.UNSTABLE, witness=_zero_witness(L), witness_domain="polydisk",
                                    reason="constant term lacks full column rank, so L(0) is singular")
        cert.meta.update({"tolerances": cfg.as_dict(), "seed": seed})
        return _finish(cert, "schur")
    cert = check_stable(L1, cfg, seed, witness_budget)
    if cert.verdict is Verdict.UNSTABLE:
        W = None
        if cert.witness is not None:
            try:
                Z = cayley(cert.witness)
                if min_singular_value(eval_pencil(L, Z)) <= cfg.residual_tol:
                    W = Z
            except InputError:
                W = None
        if W is None and witness_budget > 0:
            W = find_witness(L, "polydisk", witness_budget, seed, cfg)
        cert.witness = W
        cert.witness_domain = "polydisk"
    return _finish(cert, "schur")


# ---------------------------------------------------------------------------
# Roesser models
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RoesserSpec:
    """State matrix ``A`` (``n x n``) with the state split into blocks of sizes ``dims``."""

    A: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError("Roesser state matrix must be square")
        dims = tuple(int(k) for k in self.dims)
        if not dims or any(k < 1 for k in dims) or sum(dims) != A.shape[0]:
            raise InputError(f"block sizes {dims} do not partition {A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "dims", dims)


def roesser_pencil(spec: RoesserSpec) -> LinearPencil:
    """``I - A (I_{dims_1} x_1 (+) ... (+) I_{dims_d} x_d)``."""
    n = spec.A.shape[0]
    offs = np.cumsum([0, *spec.dims])
    coeffs = [np.eye(n, dtype=complex)]
    for j in range(len(spec.dims)):
        Pi = np.zeros((n, n))
        Pi[offs[j]:offs[j + 1], offs[j]:offs[j + 1]] = np.eye(spec.dims[j])
        coeffs.append(-spec.A @ Pi)
    return LinearPencil(coeffs)


def check_roesser(spec: RoesserSpec, cfg: ToleranceConfig = DEFAULT_TOL, seed=0,
                  witness_budget: int = DEFAULT_WITNESS_BUDGET) -> StabilityCertificate:
    """
    Matricial Schur stability of the Roesser pencil.

    Stable implies that the scalar polynomial ``det(I - A diag(z))`` has no
    zeros in the open polydisk.  Unstable refutes only the matricial
    relaxation, recorded as ``meta["relaxation"] = "matricial"``.
    """
    cert = check_schur(roesser_pencil(spec), cfg, seed, witness_budget)
    cert.meta["reduction"] = "roesser"
    cert.meta["relaxation"] = "matricial"
    return cert


# ---------------------------------------------------------------------------
# Re-verification
# ---------------------------------------------------------------------------


def reduced_pencil(L: LinearPencil, reduction: str | None, cfg: ToleranceConfig = DEFAULT_TOL) -> LinearPencil | None:
    """The pencil a certificate's stage data refer to, for ``reduction`` as stored in its meta."""
    if reduction in (None, "", "none"):
        return L
    if reduction == "hurwitz":
        return hurwitz_to_stable(L)
    if reduction in ("schur", "roesser"):
        return L if L.d == 0 else schur_to_stable(L, cfg)
    raise InputError(f"unknown reduction {reduction!r}")


def verify_reduced(L: LinearPencil, cert: StabilityCertificate, cfg: ToleranceConfig = DEFAULT_TOL,
                   seed=0) -> Verification:
    """
    :func:`verify_certificate` for certificates of the reductions above.

    Witnesses are checked on ``L`` in their own domain; stage data on the
    reduced pencil.
    """
    reduction = cert.meta.get("reduction")
    if cert.verdict is Verdict.UNSTABLE and cert.witness is not None:
        return verify_certificate(L, replace(cert, stages=[]), cfg, seed)
    M = reduced_pencil(L, reduction, cfg)
    if M is None:
        out = Verification(cert.verdict is Verdict.UNSTABLE)
        out.checks["constant_term_rank_deficient"] = True
        if not out.ok:
            out.failures.append("constant term lacks full column rank, so L is not Schur stable")
        return out
    return verify_certificate(M, cert, cfg, seed)
