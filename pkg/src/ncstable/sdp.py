"""
The complex feasibility SDP over ``D in C^{cols x rows}``::

    imag(D A_0)            >= 0
    real(D A_j)            >= 0     j = 1..d
    tr(imag(D A_0) + sum_j real(D A_j)) = 1
    imag(D A_j)            =  0     j = 1..d

``D`` is written in real coordinates (real parts then imaginary parts,
row-major).  The equalities are eliminated exactly by restricting to
their null space, directions that leave every PSD block untouched are
split off, and the remaining real SDP is handed to CVXOPT's primal-dual
interior-point method with a zero objective, which lands in the relative
interior of the feasible set.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix as cvx_matrix
from cvxopt import solvers as cvx_solvers

from .core import LinearPencil
from .numerics import DEFAULT_TOL, ToleranceConfig, imag_part, real_part, rng_from


def embed_psd(M) -> np.ndarray:
    """Real symmetric ``[[S, -K], [K, S]]`` for hermitian ``M = S + iK``; preserves PSD order."""
    M = np.asarray(M, dtype=complex)
    S, K = M.real, M.imag
    return np.block([[S, -K], [K, S]])


def _embed_stack(M: np.ndarray) -> np.ndarray:
    S, K = M.real, M.imag
    top = np.concatenate([S, -K], axis=-1)
    bottom = np.concatenate([K, S], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def d_from_real(y: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    half = shape[0] * shape[1]
    return (y[:half] + 1j * y[half:]).reshape(shape)


def d_to_real(D: np.ndarray) -> np.ndarray:
    return np.concatenate([D.real.ravel(), D.imag.ravel()])


NULL_CUT = 1e-11


def _null_space(M: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """
    Columns of ``basis @ N`` spanning ``{basis z : M basis z = 0}``.

    The cut is absolute: callers work with a pencil of unit norm, so rows
    made of rounding noise must not count as constraints.
    """
    if M.shape[0] == 0 or basis.shape[1] == 0:
        return basis
    MB = M @ basis
    _, s, vh = np.linalg.svd(MB, full_matrices=True)
    rank = int(np.sum(s > NULL_CUT))
    return basis @ vh[rank:].T


class SdpStatus(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """
    Real form of the feasibility system for one pencil.

    ``basis`` (``2*cols*rows x m``) parametrizes the real coordinates of
    ``D`` satisfying all equality constraints; ``free`` spans the part of
    that space on which every PSD block vanishes.  ``blocks[k]`` has shape
    ``(m, s_k, s_k)``: block ``k`` equals ``sum_i z_i blocks[k][i]``.
    ``trace`` is the row of the normalization ``trace . z = 1``.
    """

    pencil: LinearPencil
    scale: float
    basis: np.ndarray
    free: np.ndarray
    blocks: list[np.ndarray]
    block_names: list[str]
    trace: np.ndarray
    zero_on: np.ndarray | None = None
    inconsistent: str | None = None
    relax: float = 0.0

    @property
    def d_shape(self) -> tuple[int, int]:
        return self.pencil.cols, self.pencil.rows

    @property
    def n_vars(self) -> int:
        return self.basis.shape[1]


@dataclass
class SdpOutcome:
    status: SdpStatus
    D: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.status is SdpStatus.FEASIBLE


def _products(L: LinearPencil, E: np.ndarray) -> np.ndarray:
    """``E[k] @ A_j`` for a stack of candidate ``D`` matrices: shape ``(K, d+1, cols, cols)``."""
    return np.einsum("kab,jbc->kjac", E, L.coeffs)


def build_feasibility_sdp(L: LinearPencil, zero_on: np.ndarray | None = None,
                          relax: float = 0.0) -> SdpProblem:
    """
    Assemble the feasibility SDP for ``L`` (callers orient ``rows >= cols``).

    ``zero_on`` optionally adds the linear constraints ``D A_j V = 0`` and
    ``V^* D A_j = 0`` for every ``j >= 0``, with ``V = zero_on``
    (``cols x k``).  ``relax > 0`` loosens every cone constraint to
    ``block >= -relax * I`` (in the normalized scale ``||L|| = 1``); an
    infeasible relaxed problem is still a proof of infeasibility.
    """
    scale = L.norm() or 1.0
    Ls = LinearPencil(L.coeffs / scale)
    eps, delta, d = L.cols, L.rows, L.d
    nreal = 2 * eps * delta
    eye = np.eye(nreal)
    E = np.stack([d_from_real(eye[k], (eps, delta)) for k in range(nreal)])
    DA = _products(Ls, E)  # (nreal, d+1, eps, eps)

    def flat(M: np.ndarray) -> np.ndarray:
        # real-linear map from the real coordinates of D, one column per coordinate
        M = M.reshape(nreal, -1)
        return np.concatenate([M.real, M.imag], axis=1).T

    DA_lin = DA[:, 1:]
    eq_rows = []
    if d > 0:
        eq_rows.append(flat((DA_lin - np.conj(np.swapaxes(DA_lin, -1, -2))) / 2j))
    if zero_on is not None and zero_on.shape[1] > 0:
        # on the face D A_j V = 0 the PSD blocks vanish on V, hence V^* D A_j = 0 too
        eq_rows.append(flat(DA @ zero_on))
        eq_rows.append(flat(np.einsum("ak,njal->njkl", zero_on.conj(), DA)))
    basis = eye
    for rows in eq_rows:
        basis = _null_space(rows, basis)

    names = ["imag(DA_0)"] + [f"real(DA_{j})" for j in range(1, d + 1)]
    adj = np.conj(np.swapaxes(DA, -1, -2))
    herm = np.concatenate([(DA[:, :1] - adj[:, :1]) / 2j, (DA_lin + adj[:, 1:]) / 2], axis=1)
    full_blocks = [_embed_stack(herm[:, j]) for j in range(d + 1)]

    # split off directions invisible to every PSD block
    block_map = np.concatenate([b.reshape(nreal, -1).T for b in full_blocks], axis=0)
    free = _null_space(block_map, basis)
    if free.shape[1]:
        active = basis @ _null_space(free.T @ basis, np.eye(basis.shape[1]))
    else:
        active = basis
    blocks = [np.einsum("km,kab->mab", active, b) for b in full_blocks]
    # each embedded block doubles the trace of its hermitian block
    trace = sum(np.trace(b, axis1=1, axis2=2) for b in blocks) / 2
    blocks, names = _restrict_blocks(blocks, names)

    inconsistent = None
    if active.shape[1] == 0 or np.linalg.norm(trace) <= 1e-12:
        inconsistent = "the trace normalization is incompatible with the equality constraints"
    return SdpProblem(L, scale, active, free, blocks, names, trace, zero_on, inconsistent, relax)


def _restrict_blocks(blocks: list[np.ndarray], names: list[str]) -> tuple[list[np.ndarray], list[str]]:
    """
    Restrict every block to the joint range of its coefficient matrices.

    Directions outside that range are identically zero for every choice of
    variables, so the cone constraint there reads ``0 >= 0`` and has no
    strictly feasible point, which stalls interior-point methods.  Blocks
    that vanish entirely are dropped.
    """
    kept, kept_names = [], []
    scale = max((np.linalg.norm(b) for b in blocks), default=0.0)
    for b, name in zip(blocks, names):
        m, s, _ = b.shape
        if m == 0 or scale == 0:
            continue
        flat = np.transpose(b, (1, 0, 2)).reshape(s, m * s)
        u, sv, _ = np.linalg.svd(flat, full_matrices=False)
        Q = u[:, sv > 1e-12 * scale]
        if Q.shape[1] == 0:
            continue
        kept.append(np.einsum("ai,mab,bj->mij", Q, b, Q))
        kept_names.append(name)
    return kept, kept_names


def sdp_residuals(L: LinearPencil, D: np.ndarray, zero_on: np.ndarray | None = None) -> dict:
    """Constraint violations of ``D`` for the feasibility system of ``L``, recomputed from scratch."""
    DA = [D @ A for A in L.coeffs]
    psd_blocks = [imag_part(DA[0])] + [real_part(M) for M in DA[1:]]
    psd = max(max(0.0, -np.linalg.eigvalsh(real_part(B))[0]) for B in psd_blocks)
    herm = max(np.linalg.norm(B - B.conj().T) for B in psd_blocks)
    eq = max((np.max(np.abs(imag_part(M))) for M in DA[1:]), default=0.0)
    tr = abs(sum(np.trace(B).real for B in psd_blocks) - 1.0)
    res = {"psd": float(psd), "equality": float(eq), "trace": float(tr), "hermitian": float(herm)}
    if zero_on is not None and zero_on.shape[1] > 0:
        res["kernel"] = float(max(max(np.max(np.abs(M @ zero_on)), np.max(np.abs(zero_on.conj().T @ M)))
                                  for M in DA))
    return res


def _cvxopt_solve(problem: SdpProblem, cfg: ToleranceConfig) -> tuple[str, np.ndarray | None]:
    m = problem.n_vars
    Gs = [cvx_matrix(-b.reshape(m, -1).T.copy()) for b in problem.blocks]
    hs = [cvx_matrix(problem.relax * np.eye(b.shape[1])) for b in problem.blocks]
    A = cvx_matrix(problem.trace.reshape(1, m))
    b = cvx_matrix(np.array([1.0]))
    tol = max(min(cfg.sdp_tol, 1e-9), 1e-13)
    opts = {"show_progress": False, "abstol": tol, "reltol": tol, "feastol": tol, "maxiters": 200}
    try:
        sol = cvx_solvers.sdp(cvx_matrix(np.zeros(m)), Gs=Gs, hs=hs, A=A, b=b, options=opts)
    except (ValueError, ArithmeticError) as exc:
        return f"solver error: {exc}", None
    z = None if sol["x"] is None else np.array(sol["x"]).ravel()
    return sol["status"], z


def solve(problem: SdpProblem, cfg: ToleranceConfig = DEFAULT_TOL, seed=0) -> SdpOutcome:
    """
    Solve a feasibility problem.

    ``FEASIBLE`` is returned only when independently recomputed residuals
    are within ``sdp_tol * (1 + ||L||)``; ``INFEASIBLE`` only on a solver
    infeasibility certificate or an inconsistent reduced system; anything
    else is ``INDETERMINATE``.  A seeded random element of the free
    directions is added to the returned ``D``.
    """
    if problem.inconsistent:
        return SdpOutcome(SdpStatus.INFEASIBLE, reason=problem.inconsistent)
    status, z = _cvxopt_solve(problem, cfg)
    if status == "primal infeasible":
        return SdpOutcome(SdpStatus.INFEASIBLE, reason="solver returned an infeasibility certificate")
    if z is None:
        return SdpOutcome(SdpStatus.INDETERMINATE, reason=f"solver status: {status}")

    y = problem.basis @ z
    if problem.free.shape[1]:
        rng = rng_from(seed)
        w = rng.standard_normal(problem.free.shape[1])
        w *= np.linalg.norm(y) / np.linalg.norm(w)
        y = y + problem.free @ w
    D = d_from_real(y, problem.d_shape) / problem.scale
    res = sdp_residuals(problem.pencil, D, problem.zero_on)
    bound = cfg.sdp_tol * (1.0 + problem.pencil.norm())
    worst = max(res.values())
    if worst <= bound:
        return SdpOutcome(SdpStatus.FEASIBLE, D, res, reason=f"solver status: {status}")
    return SdpOutcome(SdpStatus.INDETERMINATE, D, res,
                      reason=f"solver status {status}; residual {worst:.2e} exceeds {bound:.2e}")
