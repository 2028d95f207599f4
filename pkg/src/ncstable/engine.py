"""
Stability decision for linear pencils on the matricial positive orthant.

``check_stable`` runs the staged SDP recursion: solve the feasibility
system for the current pencil, peel off the part on which ``D L`` is
purely stable, and recurse on ``L V`` where ``V`` spans the joint kernel
of the ``D A_j``.  A stable verdict comes with stage data and an assembled
block lower triangular form; ``verify_certificate`` rechecks both from
scratch.  ``find_witness`` looks for a point of rank loss, which refutes
stability.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from .core import LinearPencil, MatrixTuple, eval_pencil, is_hermitian_pencil, transpose_pencil
from .errors import InputError
from .numerics import (
    DEFAULT_TOL,
    ToleranceConfig,
    imag_part,
    in_polydisk,
    in_upper_orthant,
    joint_kernel,
    min_singular_value,
    orth_complement,
    range_basis,
    real_part,
    rng_from,
    sample_polydisk_point,
    sample_upper_point,
)
from .sdp import SdpStatus, build_feasibility_sdp, sdp_residuals, solve

logger = logging.getLogger(__name__)

#: A singular value of the stacked ``D A_j`` below ``KERNEL_CUT * sigma_max``
#: that sits after a drop of at least ``KERNEL_GAP`` counts as kernel.
KERNEL_CUT = 1e-4
KERNEL_GAP = 1e3
# later-stage infeasibility that a relaxation this large removes is blamed on
# the accumulated error of earlier kernels rather than reported as a proof
MARGINAL_RELAX = 1e-3

DEFAULT_WITNESS_BUDGET = 20000


class Verdict(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True, eq=False)
class PurelyStableData:
    """``H + i P_0 + sum_j P_j x_j`` with ``H`` hermitian and every ``P_j`` PSD."""

    H: np.ndarray
    P: tuple[np.ndarray, ...]

    @property
    def size(self) -> int:
        return self.H.shape[0]

    def pencil(self) -> LinearPencil:
        return LinearPencil([self.H + 1j * self.P[0], *self.P[1:]])


@dataclass
class StageRecord:
    """
    One round of the recursion.

    ``D`` acts on the full row space of the oriented input (``cols_i x rows``),
    ``V`` is an orthonormal basis of the joint kernel of ``D A_j`` for the
    stage pencil ``L C_i`` (columns restricted by earlier kernels).
    """

    D: np.ndarray
    V: np.ndarray
    shape: tuple[int, int]
    residuals: dict = field(default_factory=dict)


@dataclass
class TriangularForm:
    """``D L E`` is block lower triangular with the purely stable ``blocks`` on the diagonal."""

    D: np.ndarray
    E: np.ndarray
    blocks: list[PurelyStableData]


@dataclass
class StabilityCertificate:
    verdict: Verdict
    stages: list[StageRecord] = field(default_factory=list)
    final_block: PurelyStableData | None = None
    triangular: TriangularForm | None = None
    witness: MatrixTuple | None = None
    witness_domain: str = "upper"
    transposed: bool = False
    reason: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def stable(self) -> bool:
        return self.verdict is Verdict.STABLE


# ---------------------------------------------------------------------------
# Purely stable pencils
# ---------------------------------------------------------------------------


def is_purely_stable(L: LinearPencil, cfg: ToleranceConfig = DEFAULT_TOL) -> PurelyStableData | None:
    """
    Return ``(H, P_0..P_d)`` when ``L`` is purely stable, else ``None``.

    Hermitian and PSD defects are measured against ``psd_tol (1 + ||L||)``,
    so the test is invariant under positive scaling of well-sized pencils.
    """
    if not L.is_square:
        raise InputError("purely stable pencils are square")
    floor = cfg.psd_tol * (1 + L.norm())
    A0 = L.coeffs[0]
    H, P0 = real_part(A0), imag_part(A0)
    for A in L.coeffs[1:]:
        if np.linalg.norm(A - A.conj().T, 2) > floor:
            return None
    P = (P0, *(real_part(A) for A in L.coeffs[1:]))
    if any(np.linalg.eigvalsh(Pj)[0] < -floor for Pj in P):
        return None
    if joint_kernel([H, *P], cfg).shape[1]:
        return None
    return PurelyStableData(H, P)


def _purely_stable_part(B: LinearPencil) -> PurelyStableData:
    return PurelyStableData(real_part(B.coeffs[0]), (imag_part(B.coeffs[0]),
                            *(real_part(A) for A in B.coeffs[1:])))


# ---------------------------------------------------------------------------
# The staged recursion
# ---------------------------------------------------------------------------


def _stacked(L: LinearPencil, D: np.ndarray) -> np.ndarray:
    return np.vstack([D @ A for A in L.coeffs])


def numerical_kernel(S: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """
    Kernel of ``S`` decided by the largest singular-value gap.

    Interior-point solutions approach the faces of the feasibility set only
    to roughly the square root of the solver tolerance, so directions that
    vanish in exact arithmetic show up as singular values far above
    ``rank_tol``.  They are recognized by a drop of ``KERNEL_GAP`` below
    ``KERNEL_CUT`` relative; values below ``rank_tol`` are always kernel.
    """
    _, s, vh = np.linalg.svd(S, full_matrices=True)
    n = S.shape[1]
    if s.size == 0 or s[0] == 0:
        return np.eye(n, dtype=complex)
    rel = np.concatenate([s / s[0], np.zeros(n - s.size)])
    rank = int(np.sum(rel > cfg.rank_tol))
    best = KERNEL_GAP
    for k in range(1, rank):
        if rel[k] < KERNEL_CUT and rel[k - 1] / rel[k] >= best:
            best = rel[k - 1] / rel[k]
            rank = k
    return vh[rank:].conj().T


def _stage_kernel(L: LinearPencil, D: np.ndarray, cfg: ToleranceConfig) -> np.ndarray:
    return numerical_kernel(_stacked(L, D), cfg)


def _face_residual(coeffs: np.ndarray, D: np.ndarray, V: np.ndarray, V0: np.ndarray) -> np.ndarray:
    parts = []
    tr = 0.0
    for j, A in enumerate(coeffs):
        DA = D @ A
        parts += [(DA @ V).ravel(), (V.conj().T @ DA).ravel()]
        diag = np.diagonal(DA)
        if j == 0:
            tr = tr + diag.imag.sum()
        else:
            parts.append((DA - DA.conj().T).ravel())
            tr = tr + diag.real.sum()
    parts.append((V0.conj().T @ (V - V0)).ravel())
    z = np.concatenate(parts)
    return np.concatenate([z.real, z.imag, [tr - 1.0]])


def polish_face(L: LinearPencil, D: np.ndarray, V: np.ndarray,
                iters: int = 150) -> tuple[np.ndarray, np.ndarray, float]:
    """
    Levenberg-Marquardt refinement of an approximate face point ``(D, V)``.

    Drives ``D A_j V``, ``V^* D A_j``, the antihermitian parts of
    ``D A_j`` (``j > 0``) and the trace defect to zero, with the gauge
    ``V_0^*(V - V_0) = 0``.  The system is bilinear, so unit coordinate
    differences give the exact Jacobian.

    Faces often meet the kernel condition to second order (a defective
    eigenvalue of the pencil).  Newton then converges only linearly and any
    perturbation of the equations of size ``eps`` moves the solution by
    ``sqrt(eps)``, so residuals are accumulated in extended precision from
    the unrounded data, with corrections solved in double precision.

    Returns the refined ``D``, an orthonormal ``V`` and the final residual.
    """
    ld, cld = np.longdouble, np.clongdouble
    shape = D.shape
    eps, k = V.shape
    half = shape[0] * shape[1]
    m = 2 * half
    coeffs_ld = L.coeffs.astype(cld)
    V0 = V.astype(cld)
    x = np.concatenate([D.real.ravel(), D.imag.ravel(), V.real.ravel(), V.imag.ravel()]).astype(ld)

    def unpack(x):
        Dx = (x[:half] + 1j * x[half:m]).reshape(shape)
        v = x[m:]
        Vx = (v[:eps * k] + 1j * v[eps * k:]).reshape(eps, k)
        return Dx, Vx

    def F_ld(x):
        return _face_residual(coeffs_ld, *unpack(x), V0)

    f = F_ld(x)
    best = (float(np.linalg.norm(f)), x)
    stall = 0
    eye = np.eye(x.size, dtype=ld)
    for _ in range(iters):
        J = np.column_stack([F_ld(x + eye[i]) - f for i in range(x.size)])
        # Levenberg-Marquardt with mu = ||f|| keeps steps local when J is
        # ill conditioned, yet converges fast near degenerate solutions
        root_mu = np.sqrt(np.linalg.norm(f))
        Ja = np.vstack([J, root_mu * eye])
        fa = np.concatenate([f, np.zeros(x.size, dtype=ld)])
        Jd = Ja.astype(float)
        step = np.linalg.lstsq(Jd, fa.astype(float), rcond=None)[0].astype(ld)
        for _refine in range(3):
            r = fa - Ja @ step
            step = step + np.linalg.lstsq(Jd, r.astype(float), rcond=None)[0].astype(ld)
        x = x - step
        f = F_ld(x)
        nf = float(np.linalg.norm(f))
        if nf < 0.9 * best[0]:
            best, stall = (nf, x), 0
        else:
            stall += 1
        if nf < 1e-30 or stall >= 5:
            break
    Dx, Vx = unpack(best[1].astype(float))
    Q = np.linalg.qr(Vx)[0]
    return Dx, Q, best[0]


def _solve_stage(L: LinearPencil, cfg: ToleranceConfig, seed,
                 relax: float = 0.0) -> tuple[SdpStatus, np.ndarray | None, np.ndarray | None, str]:
    """
    Solve the SDP for one compressed stage pencil and fix its kernel.

    Returns ``(status, D, V, reason)``.  A detected kernel is first polished
    onto an exact face point, then the SDP is re-solved with ``D A_j V = 0``
    imposed exactly.  If the re-solve keeps the kernel dimension its
    solution is used; otherwise the polished or raw solution is kept
    (``D A_j V`` small but nonzero, bounded by the verifier).
    """
    out = solve(build_feasibility_sdp(L, relax=relax), cfg, seed)
    if out.status is not SdpStatus.FEASIBLE:
        return out.status, out.D, None, out.reason
    D = out.D
    V = _stage_kernel(L, D, cfg)
    if not 0 < V.shape[1] < L.cols:
        return SdpStatus.FEASIBLE, D, V, out.reason

    D_pol, V_pol, res = polish_face(L, D, V)
    logger.debug("face polish residual %.2e", res)
    candidates = [V_pol, V] if res < 1e-10 else [V]
    for Vc in candidates:
        pure = solve(build_feasibility_sdp(L, zero_on=Vc, relax=relax), cfg, seed)
        if pure.status is SdpStatus.FEASIBLE:
            # pure.D annihilates Vc by construction; keep Vc, which is more
            # accurate than a kernel recomputed from pure.D
            if _stage_kernel(L, pure.D, cfg).shape[1] == V.shape[1]:
                return SdpStatus.FEASIBLE, pure.D, Vc, pure.reason
    if res < 1e-10:
        worst = max(sdp_residuals(L, D_pol).values())
        same_face = _stage_kernel(L, D_pol, cfg).shape[1] == V_pol.shape[1]
        if same_face and worst <= cfg.sdp_tol * (1 + L.norm()):
            return SdpStatus.FEASIBLE, D_pol, V_pol, out.reason
    return SdpStatus.FEASIBLE, D, V, out.reason


def _orient(L: LinearPencil) -> tuple[LinearPencil, bool]:
    if L.rows < L.cols:
        return transpose_pencil(L), True
    return L, False


def _compress_rows(T: LinearPencil, cfg: ToleranceConfig) -> tuple[np.ndarray, LinearPencil]:
    U = range_basis(np.hstack(list(T.coeffs)), cfg)
    return U, T.left(U.conj().T) if U.shape[1] else T


def check_stable(L: LinearPencil, cfg: ToleranceConfig = DEFAULT_TOL, seed=0,
                 witness_budget: int = 0) -> StabilityCertificate:
    """
    Decide whether ``L(X)`` has full rank on the whole matricial positive orthant.

    Parameters
    ----------
    L : LinearPencil
    cfg : ToleranceConfig
    seed : int
        Seeds the random free-direction component of each SDP solution.
    witness_budget : int
        When positive, an unstable verdict is cross-checked by
        :func:`find_witness` and the witness (if any) is attached.

    Returns
    -------
    StabilityCertificate
        Stable verdicts carry the stages, the final purely stable block and
        the assembled triangular form.  Solver trouble yields
        ``Verdict.INDETERMINATE`` rather than a guess.

    Notes
    -----
    A square pencil left undecided is retried on its transpose, which has
    the same verdict but presents the solver with different faces.
    """
    M, transposed = _orient(L)
    cert = _run_stages(L, M, transposed, cfg, seed)
    if cert.verdict is Verdict.INDETERMINATE and L.is_square:
        retry = _run_stages(L, transpose_pencil(L), True, cfg, seed)
        if retry.verdict is not Verdict.INDETERMINATE:
            retry.meta["first_attempt"] = cert.reason
            cert = retry
    if cert.verdict is Verdict.UNSTABLE and cert.witness is None and witness_budget > 0:
        cert.witness = find_witness(L, "upper", witness_budget, seed, cfg)
    cert.meta.update({"tolerances": cfg.as_dict(), "seed": seed})
    logger.debug("check_stable: %s (%s)", cert.verdict.value, cert.reason)
    return cert


def _run_stages(L: LinearPencil, M: LinearPencil, transposed: bool, cfg: ToleranceConfig,
                seed) -> StabilityCertificate:
    """The stage recursion on ``M``, which is ``L`` or its transpose with ``rows >= cols``."""
    eps = M.cols
    C = np.eye(eps, dtype=complex)
    stages: list[StageRecord] = []
    cert = StabilityCertificate(Verdict.INDETERMINATE, stages=stages, transposed=transposed)
    relaxed: list[int] = []
    for i in range(eps + 1):
        T = M.right(C)
        U, Lc = _compress_rows(T, cfg)
        if U.shape[1] < T.cols:
            cert.verdict = Verdict.UNSTABLE
            cert.reason = (f"stage {i}: coefficient rows span dimension {U.shape[1]} "
                           f"< {T.cols} columns, rank deficient everywhere")
            cert.witness = MatrixTuple.scalars([1j] * L.d) if L.d else None
            break
        stage_seed = int(rng_from(seed).integers(2**31)) + i
        status, D, V, why = _solve_stage(Lc, cfg, stage_seed)
        if status is SdpStatus.INFEASIBLE and i > 0:
            # later stage pencils carry the rounding of earlier kernels
            status, D, V, why = _solve_stage(Lc, cfg, stage_seed, relax=cfg.sdp_tol)
            relaxed.append(i)
        if status is SdpStatus.INFEASIBLE and i > 0:
            coarse = solve(build_feasibility_sdp(Lc, relax=MARGINAL_RELAX), cfg, stage_seed)
            if coarse.status is not SdpStatus.INFEASIBLE:
                cert.reason = (f"stage {i}: infeasible only within a relaxation of {MARGINAL_RELAX:g}; "
                               "earlier kernels are too ill-conditioned to decide")
                break
        if status is SdpStatus.INFEASIBLE:
            cert.verdict = Verdict.UNSTABLE
            cert.reason = f"stage {i}: feasibility SDP infeasible ({why})"
            break
        if status is SdpStatus.INDETERMINATE:
            cert.reason = f"stage {i}: {why}"
            break
        Dhat = D @ U.conj().T
        stages.append(StageRecord(Dhat, V, Lc.shape, sdp_residuals(Lc, D)))
        if V.shape[1] == 0:
            cert.verdict = Verdict.STABLE
            cert.final_block = _purely_stable_part(T.left(Dhat))
            cert.reason = f"purely stable block reached after {len(stages)} stage(s)"
            cert.triangular = assemble_triangular(L, cert)
            break
        C = C @ V
    else:  # pragma: no cover - columns strictly decrease, so the loop always breaks
        cert.reason = "stage limit exceeded"
    if cert.verdict is Verdict.STABLE:
        check = verify_certificate(L, cert, cfg)
        if not check:
            cert.verdict = Verdict.INDETERMINATE
            cert.reason = "stable certificate failed self-check: " + "; ".join(check.failures)
    cert.meta["relaxed_stages"] = relaxed
    return cert


def assemble_triangular(L: LinearPencil, cert: StabilityCertificate) -> TriangularForm:
    """
    Block lower triangular form from the stage records.

    With ``W_i`` an orthonormal complement of ``V_i`` and ``C_i`` the
    product of the earlier ``V``'s, the rows of ``D`` are the ``W_i^* D_i``
    and the columns of ``E`` the ``C_i W_i`` (so ``E`` is unitary).  Blocks
    above the diagonal vanish because ``D_i A_j V_i = 0``.
    """
    if cert.verdict is not Verdict.STABLE or not cert.stages:
        raise InputError("only stable certificates with stage data can be assembled")
    M = transpose_pencil(L) if cert.transposed else L
    C = np.eye(M.cols, dtype=complex)
    rows, cols, blocks = [], [], []
    for st in cert.stages:
        W = orth_complement(st.V, C.shape[1])
        Di = W.conj().T @ st.D
        # positive rescaling keeps the block purely stable and balances D
        Di = Di / (np.linalg.norm(Di) or 1.0)
        rows.append(Di)
        cols.append(C @ W)
        blocks.append(_purely_stable_part(M.right(C @ W).left(Di)))
        C = C @ st.V
    return TriangularForm(np.vstack(rows), np.hstack(cols), blocks)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass
class Verification:
    ok: bool
    failures: list[str] = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def _full_rank(M: np.ndarray, cfg: ToleranceConfig) -> bool:
    s = np.linalg.svd(M, compute_uv=False)
    return s.size == min(M.shape) and s[0] > 0 and s[-1] > cfg.rank_tol * s[0]


def _verify_witness(L: LinearPencil, cert: StabilityCertificate, cfg: ToleranceConfig,
                    out: Verification) -> bool:
    X = cert.witness
    if X.d != L.d:
        out.failures.append("witness has the wrong number of matrices")
        return False
    if cert.witness_domain == "polydisk":
        inside = in_polydisk(X)
    elif cert.witness_domain == "right":
        inside = in_upper_orthant(MatrixTuple([1j * Xj for Xj in X]))
    else:
        inside = in_upper_orthant(X)
    sv = min_singular_value(eval_pencil(L, X))
    out.checks["witness_min_singular_value"] = sv
    out.checks["witness_in_domain"] = inside
    if not inside:
        out.failures.append(f"witness lies outside the {cert.witness_domain} domain")
    if sv > cfg.residual_tol:
        out.failures.append(f"pencil at witness has smallest singular value {sv:.3e}")
    return inside and sv <= cfg.residual_tol


def verify_certificate(L: LinearPencil, cert: StabilityCertificate,
                       cfg: ToleranceConfig = DEFAULT_TOL, seed=0) -> Verification:
    """
    Recheck a certificate against ``L`` with fresh numerics.

    Stable: every stage ``D`` satisfies the SDP constraints, every ``V``
    spans the stage joint kernel, the last stage block is purely stable, and
    the triangular form (if present) reproduces its purely stable diagonal
    blocks with vanishing upper blocks and full-rank ``D``, ``E``.
    Unstable: the witness loses rank inside its domain, or the recorded
    stages lead to a pencil that is rank deficient or whose SDP is
    infeasible on re-solving.
    """
    out = Verification(False)
    M = transpose_pencil(L) if cert.transposed else L
    scale = 1.0 + L.norm()
    sdp_bound = 10 * cfg.sdp_tol * scale

    C = np.eye(M.cols, dtype=complex)
    stage_ok = True
    for i, st in enumerate(cert.stages):
        T = M.right(C)
        if st.D.shape != (T.cols, M.rows) or st.V.shape[0] != T.cols:
            out.failures.append(f"stage {i}: shapes do not match the stage pencil")
            stage_ok = False
            break
        res = sdp_residuals(T, st.D)
        worst = max(res.values())
        out.checks[f"stage{i}_sdp_residual"] = worst
        if worst > sdp_bound:
            out.failures.append(f"stage {i}: SDP residual {worst:.3e} > {sdp_bound:.3e}")
            stage_ok = False
        S = _stacked(T, st.D)
        k = st.V.shape[1]
        s_max = np.linalg.norm(S, 2)
        kres = float(np.linalg.norm(S @ st.V, 2)) if k else 0.0
        K = joint_kernel([S], cfg)
        missing = float(np.linalg.norm(K - st.V @ (st.V.conj().T @ K), 2)) if K.size else 0.0
        orth = float(np.linalg.norm(st.V.conj().T @ st.V - np.eye(k))) if k else 0.0
        out.checks[f"stage{i}_kernel_residual"] = kres
        out.checks[f"stage{i}_kernel_missing"] = missing
        if kres > cfg.residual_tol * (1 + s_max) or missing > 1e-6 or orth > 1e-8 or k >= max(T.cols, 1):
            out.failures.append(f"stage {i}: V is not the joint kernel of D A_j "
                                f"(residual {kres:.2e}, uncovered {missing:.2e})")
            stage_ok = False
        C = C @ st.V if st.V.size else C[:, :0]

    if cert.verdict is Verdict.STABLE:
        have_any = False
        if cert.stages:
            have_any = True
            last = cert.stages[-1]
            if last.V.shape[1] != 0:
                out.failures.append("last stage has a nontrivial kernel")
                stage_ok = False
            elif stage_ok:
                T = M.right(_prefix_columns(M.cols, cert.stages[:-1]))
                block = T.left(last.D)
                if is_purely_stable(block, cfg) is None:
                    out.failures.append("final block is not purely stable")
                    stage_ok = False
        tri_ok = True
        if cert.triangular is not None:
            have_any = True
            tri_ok = _verify_triangular(M, cert.triangular, cfg, out)
        if not have_any:
            out.failures.append("stable certificate carries neither stages nor a triangular form")
        out.ok = have_any and stage_ok and tri_ok
        return out

    if cert.verdict is Verdict.UNSTABLE:
        if cert.witness is not None:
            out.ok = _verify_witness(L, cert, cfg, out)
            return out
        if not stage_ok:
            return out
        T = M.right(C)
        U, Lc = _compress_rows(T, cfg)
        if U.shape[1] < T.cols:
            out.checks["rank_deficient_stage"] = True
            out.ok = True
            return out
        relax = cfg.sdp_tol if cert.stages else 0.0
        resolve = solve(build_feasibility_sdp(Lc, relax=relax), cfg, seed)
        out.checks["resolved_sdp_status"] = resolve.status.value
        if resolve.status is SdpStatus.INFEASIBLE:
            out.ok = True
        else:
            out.failures.append(f"re-solved SDP is {resolve.status.value}, not infeasible")
        return out

    out.failures.append("indeterminate certificates carry no proof")
    return out


def _prefix_columns(n: int, stages: list[StageRecord]) -> np.ndarray:
    C = np.eye(n, dtype=complex)
    for st in stages:
        C = C @ st.V
    return C


def _verify_triangular(M: LinearPencil, tri: TriangularForm, cfg: ToleranceConfig,
                       out: Verification) -> bool:
    ok = True
    sizes = [b.size for b in tri.blocks]
    if tri.D.shape != (M.cols, M.rows) or tri.E.shape != (M.cols, M.cols) or sum(sizes) != M.cols:
        out.failures.append("triangular form has inconsistent shapes")
        return False
    if not _full_rank(tri.D, cfg) or not _full_rank(tri.E, cfg):
        out.failures.append("D or E is rank deficient")
        ok = False
    prod = M.left(tri.D).right(tri.E).coeffs
    # blocks inherit the solver residual, so they are held to residual_tol
    block_cfg = replace(cfg, psd_tol=max(cfg.psd_tol, cfg.residual_tol))
    scale = 1.0 + M.norm()
    offs = np.cumsum([0, *sizes])
    upper = 0.0
    diag = 0.0
    for a in range(len(sizes)):
        ra = slice(offs[a], offs[a + 1])
        blk = tri.blocks[a]
        if len(blk.P) != M.d + 1:
            out.failures.append(f"block {a} has {len(blk.P)} P matrices, expected {M.d + 1}")
            return False
        target = blk.pencil().coeffs
        diag = max(diag, float(np.max(np.abs(prod[:, ra, ra] - target))))
        if offs[a + 1] < offs[-1]:
            upper = max(upper, float(np.max(np.abs(prod[:, ra, offs[a + 1]:]))))
        if not _hermitian(blk.H, cfg):
            out.failures.append(f"block {a}: H is not hermitian")
            ok = False
        elif is_purely_stable(blk.pencil(), block_cfg) is None:
            out.failures.append(f"block {a} is not purely stable")
            ok = False
    out.checks["triangular_upper_residual"] = upper
    out.checks["triangular_diagonal_residual"] = diag
    bound = cfg.residual_tol * scale
    if upper > bound:
        out.failures.append(f"upper blocks of D L E have size {upper:.3e} > {bound:.3e}")
        ok = False
    if diag > bound:
        out.failures.append(f"diagonal blocks differ from the listed blocks by {diag:.3e}")
        ok = False
    return ok


def _hermitian(H: np.ndarray, cfg: ToleranceConfig) -> bool:
    return np.linalg.norm(H - H.conj().T) <= cfg.psd_tol * (1 + np.linalg.norm(H))


# ---------------------------------------------------------------------------
# Hermitian pencils
# ---------------------------------------------------------------------------


def is_irreducible(L: LinearPencil, cfg: ToleranceConfig = DEFAULT_TOL) -> bool:
    """
    True iff the matrices ``A_j A_0^{-1}`` generate the full matrix algebra.

    The span of all words in the generators (plus the identity) is grown
    until it stops changing; words of length up to ``size**2`` suffice.
    """
    if not L.is_square:
        raise InputError("irreducibility is defined for square pencils")
    A0 = L.coeffs[0]
    s = np.linalg.svd(A0, compute_uv=False)
    if s[0] == 0 or s[-1] <= cfg.rank_tol * s[0]:
        raise InputError("irreducibility test needs an invertible constant term")
    n = L.rows
    A0inv = np.linalg.inv(A0)
    gens = [A @ A0inv for A in L.coeffs[1:]]
    gens = [G / np.linalg.norm(G) for G in gens if np.linalg.norm(G) > 0]
    basis: list[np.ndarray] = []

    def add(M: np.ndarray) -> bool:
        v = M.ravel()
        nv = np.linalg.norm(v)
        if nv == 0:
            return False
        v = v / nv
        for _ in range(2):
            for b in basis:
                v = v - (b.conj() @ v) * b
        r = np.linalg.norm(v)
        if r <= 1e-8:
            return False
        basis.append(v / r)
        return True

    add(np.eye(n, dtype=complex))
    frontier = [np.eye(n, dtype=complex)]
    for _ in range(n * n):
        new = []
        for W in frontier:
            for G in gens:
                P = G @ W
                if add(P):
                    new.append(P / np.linalg.norm(P))
        if not new or len(basis) == n * n:
            break
        frontier = new
    return len(basis) == n * n


def check_hermitian_stable(L: LinearPencil, cfg: ToleranceConfig = DEFAULT_TOL,
                           witness_budget: int = 0, seed=0) -> StabilityCertificate:
    """
    Fast path for hermitian irreducible pencils: stable iff ``L`` or ``-L`` is purely stable.

    No SDP is solved.  The certificate records the sign and carries a
    one-block triangular form with ``D = sign * I``.
    """
    if not is_hermitian_pencil(L, cfg.psd_tol * (1 + L.norm())):
        raise InputError("pencil is not hermitian")
    if not is_irreducible(L, cfg):
        raise InputError("pencil is not irreducible")
    n = L.rows
    for sign in (1, -1):
        data = is_purely_stable(sign * L, cfg)
        if data is not None:
            tri = TriangularForm(sign * np.eye(n, dtype=complex), np.eye(n, dtype=complex), [data])
            return StabilityCertificate(Verdict.STABLE, final_block=data, triangular=tri,
                                        reason=f"{'+' if sign > 0 else '-'}L is purely stable",
                                        meta={"sign": sign, "tolerances": cfg.as_dict()})
    cert = StabilityCertificate(Verdict.UNSTABLE,
                                reason="hermitian irreducible pencil with neither L nor -L purely stable",
                                meta={"tolerances": cfg.as_dict()})
    if witness_budget > 0:
        cert.witness = find_witness(L, "upper", witness_budget, seed, cfg)
    return cert


# ---------------------------------------------------------------------------
# Witness search
# ---------------------------------------------------------------------------

_IMAG_FLOOR = 1e-6


class _Found(Exception):
    pass


def _upper_params(X: MatrixTuple) -> np.ndarray:
    parts = []
    n = X.n
    for Xj in X:
        R = real_part(Xj)
        G = np.linalg.cholesky(imag_part(Xj) - _IMAG_FLOOR * np.eye(n))
        parts += [R.real.ravel(), R.imag[np.triu_indices(n, 1)], G.real.ravel(), G.imag.ravel()]
    return np.concatenate(parts)


def _upper_point(theta: np.ndarray, d: int, n: int) -> MatrixTuple:
    per = n * n + n * (n - 1) // 2 + 2 * n * n
    iu = np.triu_indices(n, 1)
    mats = []
    for j in range(d):
        t = theta[j * per:(j + 1) * per]
        R = t[:n * n].reshape(n, n).astype(complex)
        R = (R + R.T) / 2
        K = np.zeros((n, n))
        K[iu] = t[n * n:n * n + len(iu[0])]
        R = R + 1j * (K - K.T)
        off = n * n + len(iu[0])
        G = t[off:off + n * n].reshape(n, n) + 1j * t[off + n * n:off + 2 * n * n].reshape(n, n)
        mats.append(R + 1j * (G @ G.conj().T + _IMAG_FLOOR * np.eye(n)))
    return MatrixTuple(mats)


def _disk_params(X: MatrixTuple) -> np.ndarray:
    parts = []
    for Xj in X:
        r = np.linalg.norm(Xj, 2)
        Y = Xj / (1 - r)
        parts += [Y.real.ravel(), Y.imag.ravel()]
    return np.concatenate(parts)


def _disk_point(theta: np.ndarray, d: int, n: int) -> MatrixTuple:
    per = 2 * n * n
    mats = []
    for j in range(d):
        t = theta[j * per:(j + 1) * per]
        Y = t[:n * n].reshape(n, n) + 1j * t[n * n:].reshape(n, n)
        mats.append(Y / (1 + np.linalg.norm(Y, 2)))
    return MatrixTuple(mats)


def search_singular_point(evaluate, d: int, sizes, mode: str = "upper", budget: int = DEFAULT_WITNESS_BUDGET,
                          seed=0, target: float = 1e-6, starts: int = 8) -> MatrixTuple | None:
    """
    Minimize the smallest singular value of ``evaluate(X)`` over a domain.

    ``mode`` is ``"upper"`` (imaginary parts positive definite, kept so by
    the parametrization ``imag X_j = G_j G_j^* + 1e-6 I``) or
    ``"polydisk"`` (``X_j = Y_j / (1 + ||Y_j||)``).  For each size, seeded
    random starts are screened and the best ones are refined with Powell's
    derivative-free method.  ``budget`` caps the total number of
    evaluations.  Returns the first point with smallest singular value at
    most ``target``.
    """
    if mode not in ("upper", "polydisk"):
        raise InputError(f"unknown witness mode {mode!r}")
    rng = rng_from(seed)
    sizes = list(sizes)
    to_point = _upper_point if mode == "upper" else _disk_point
    to_params = _upper_params if mode == "upper" else _disk_params
    sample = sample_upper_point if mode == "upper" else sample_polydisk_point
    used = 0

    for idx, n in enumerate(sizes):
        share = (budget - used) // (len(sizes) - idx)
        if share <= 0:
            continue
        spent = 0
        best: list[tuple[float, np.ndarray]] = []

        def objective(theta):
            nonlocal spent
            spent += 1
            X = to_point(theta, d, n)
            sv = min_singular_value(evaluate(X))
            if sv <= target:
                raise _Found(X)
            return np.log(sv)

        try:
            for _ in range(min(starts * 4, max(share // 4, 1))):
                X0 = sample(d, n, rng)
                theta = to_params(X0)
                best.append((objective(theta), theta))
            best.sort(key=lambda t: t[0])
            for _, theta in best[:starts]:
                left = share - spent
                if left <= 0:
                    break
                for _restart in range(3):
                    left = share - spent
                    if left <= 0:
                        break
                    res = scipy.optimize.minimize(objective, theta, method="Powell",
                                                  options={"maxfev": left, "xtol": 1e-12, "ftol": 1e-14})
                    if np.allclose(res.x, theta):
                        break
                    theta = res.x
        except _Found as hit:
            return hit.args[0]
        finally:
            used += spent
    return None


def find_witness(L: LinearPencil, mode: str = "upper", budget: int = DEFAULT_WITNESS_BUDGET, seed=0,
                 cfg: ToleranceConfig = DEFAULT_TOL, size_cap: int | None = None) -> MatrixTuple | None:
    """
    Search for a point of rank loss of ``L``.

    Sizes ``1..min(rows, cols)`` are searched in ``"upper"`` mode and
    ``1..d*min(rows, cols)`` in ``"polydisk"`` mode, which are the sizes at
    which rank loss must already appear if it appears at all.  A returned
    tuple proves instability; ``None`` proves nothing.
    """
    if L.d == 0 or budget <= 0:
        return None
    m = min(L.rows, L.cols)
    cap = m if mode == "upper" else L.d * m
    if size_cap is not None:
        cap = min(cap, size_cap)
    return search_singular_point(lambda X: eval_pencil(L, X), L.d, range(1, cap + 1), mode,
                                 budget, seed, cfg.residual_tol)
