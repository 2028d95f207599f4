"""
Rank-revealing kernels, definiteness tests and random matricial points.

Every random routine takes either an integer seed or a
``numpy.random.Generator``; there is no module-level random state.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

import numpy as np
import scipy.linalg

from .core import MatrixTuple
from .errors import InputError

ENV_PREFIX = "NCSTABLE_TOL_"


@dataclass(frozen=True)
class ToleranceConfig:
    """
    Numerical thresholds shared by all modules.

    rank_tol : relative singular-value threshold for kernels and ranks.
    psd_tol : eigenvalue floor (relative to ``1 + ||M||``) for PSD tests.
    residual_tol : bound on verification residuals.
    sdp_tol : stopping tolerance handed to the conic solver.
    """

    rank_tol: float = 1e-9
    psd_tol: float = 1e-8
    residual_tol: float = 1e-6
    sdp_tol: float = 1e-8

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise InputError(f"{f.name} must be finite and nonnegative, got {v}")

    @classmethod
    def from_env(cls, environ=None, **overrides) -> "ToleranceConfig":
        """Defaults, overridden by ``NCSTABLE_TOL_*`` variables, then by ``overrides``."""
        environ = os.environ if environ is None else environ
        values = {}
        for f in fields(cls):
            key = ENV_PREFIX + f.name.removesuffix("_tol").upper()
            if key in environ:
                try:
                    values[f.name] = float(environ[key])
                except ValueError as exc:
                    raise InputError(f"{key} is not a number: {environ[key]!r}") from exc
        values.update({k: v for k, v in overrides.items() if v is not None})
        return replace(cls(), **values)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOL = ToleranceConfig()


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def real_part(M: np.ndarray) -> np.ndarray:
    """Hermitian part ``(M + M^*)/2``."""
    return (M + M.conj().T) / 2


def imag_part(M: np.ndarray) -> np.ndarray:
    """``(M - M^*)/(2i)``, so that ``M = real_part(M) + i imag_part(M)``."""
    return (M - M.conj().T) / 2j


def kernel_basis(M, cfg: ToleranceConfig = DEFAULT_TOL, tol: float | None = None) -> np.ndarray:
    """
    Orthonormal basis (columns) of the numerical right kernel of ``M``.

    A direction counts as kernel when its singular value is at most
    ``tol * sigma_max(M)``; ``tol`` defaults to ``cfg.rank_tol``.  The zero
    matrix has the whole space as kernel.
    """
    M = np.asarray(M, dtype=complex)
    rows, cols = M.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=complex)
    if rows == 0:
        return np.eye(cols, dtype=complex)
    tol = cfg.rank_tol if tol is None else tol
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(cols, dtype=complex)
    rank = int(np.sum(s > tol * smax))
    return vh[rank:].conj().T


def range_basis(M, cfg: ToleranceConfig = DEFAULT_TOL, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of the numerical column space of ``M``."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    tol = cfg.rank_tol if tol is None else tol
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    return u[:, : int(np.sum(s > tol * s[0]))]


def orth_complement(B: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``span(B)`` in C^dim."""
    if B.size == 0:
        return np.eye(dim, dtype=complex)
    return kernel_basis(B.conj().T, tol=1e-10)


def joint_kernel(Ms, cfg: ToleranceConfig = DEFAULT_TOL, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of the intersection of the kernels of ``Ms``."""
    Ms = [np.asarray(M, dtype=complex) for M in Ms]
    if not Ms:
        raise InputError("joint_kernel needs at least one matrix")
    cols = Ms[0].shape[1]
    if any(M.shape[1] != cols for M in Ms):
        raise InputError("joint_kernel matrices must share their column count")
    return kernel_basis(np.vstack(Ms), cfg, tol)


def _square(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"expected a square matrix, got shape {M.shape}")
    return M


def is_hermitian_mat(M, cfg: ToleranceConfig = DEFAULT_TOL) -> bool:
    M = _square(M)
    if M.size == 0:
        return True
    scale = 1.0 + np.linalg.norm(M, 2)
    return bool(np.linalg.norm(M - M.conj().T, 2) <= cfg.psd_tol * scale)


def is_psd(M, cfg: ToleranceConfig = DEFAULT_TOL) -> bool:
    M = _square(M)
    if M.size == 0:
        return True
    scale = 1.0 + np.linalg.norm(M, 2)
    if np.linalg.norm(M - M.conj().T, 2) > cfg.psd_tol * scale:
        return False
    return bool(np.linalg.eigvalsh(real_part(M))[0] >= -cfg.psd_tol * scale)


def min_singular_value(M) -> float:
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[-1])


def principal_angle(A: np.ndarray, B: np.ndarray) -> float:
    """Largest principal angle between ``span(A)`` and ``span(B)`` (pi/2 on dimension mismatch)."""
    if A.shape[1] != B.shape[1]:
        return float(np.pi / 2)
    if A.shape[1] == 0:
        return 0.0
    return float(np.max(scipy.linalg.subspace_angles(A, B)))


# ---------------------------------------------------------------------------
# Random points
# ---------------------------------------------------------------------------

UPPER_FLOOR = 0.1


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (G + G.conj().T) / 2


def random_complex(shape, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def sample_upper_point(d: int, n: int, seed=None, mu: float = UPPER_FLOOR) -> MatrixTuple:
    """
    Random tuple in the matricial positive orthant.

    ``X_j = R_j + i (G_j G_j^* + mu I)`` with ``R_j`` random hermitian and
    ``G_j`` a square gaussian, so ``imag X_j`` has smallest eigenvalue at
    least ``mu``.
    """
    if n < 1:
        raise InputError("size must be positive")
    rng = rng_from(seed)
    mats = []
    for _ in range(d):
        R = random_hermitian(n, rng, 0.5)
        G = random_complex((n, n), rng)
        mats.append(R + 1j * (G @ G.conj().T + mu * np.eye(n)))
    return MatrixTuple(mats)


def sample_polydisk_point(d: int, n: int, seed=None) -> MatrixTuple:
    """Random tuple of strict contractions: gaussian matrices rescaled to norm ``rho ~ U(0, 1)``."""
    if n < 1:
        raise InputError("size must be positive")
    rng = rng_from(seed)
    mats = []
    for _ in range(d):
        G = random_complex((n, n), rng)
        rho = rng.uniform(0.0, 1.0)
        while rho == 0.0:
            rho = rng.uniform(0.0, 1.0)
        mats.append(G * (rho / np.linalg.norm(G, 2)))
    return MatrixTuple(mats)


def sample_gaussian_point(d: int, n: int, seed=None) -> MatrixTuple:
    rng = rng_from(seed)
    return MatrixTuple([random_complex((n, n), rng) for _ in range(d)])


def in_upper_orthant(X: MatrixTuple, tol: float = 0.0) -> bool:
    return all(np.linalg.eigvalsh(imag_part(Xj))[0] > tol for Xj in X)


def in_polydisk(X: MatrixTuple) -> bool:
    return all(np.linalg.norm(Xj, 2) < 1 for Xj in X)
