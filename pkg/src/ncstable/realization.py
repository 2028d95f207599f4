"""
Descriptor realizations of noncommutative polynomials and their inverses.

A realization ``R`` of size ``delta`` stands for the series
``c^* (I - sum_j A_j x_j)^{-1} b``, whose coefficient at the word
``x_{j1} ... x_{jk}`` is ``c^* A_{j1} ... A_{jk} b``.  On top of this sit the
polynomial stability pipeline and purely stable determinantal
representations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import LinearPencil, MatrixTuple, NcPolynomial, direct_sum, eval_pencil, eval_poly, is_hermitian_poly, shift_pencil
from .engine import (
    DEFAULT_WITNESS_BUDGET,
    PurelyStableData,
    StabilityCertificate,
    Verdict,
    check_stable,
    is_irreducible,
    is_purely_stable,
    search_singular_point,
)
from .errors import EvalError, InputError
from .numerics import DEFAULT_TOL, ToleranceConfig, rng_from, sample_gaussian_point, sample_upper_point


@dataclass(frozen=True, eq=False)
class DescriptorRealization:
    """``c^* (I - sum_j A_j x_j)^{-1} b`` with ``A`` of shape ``(d, size, size)``."""

    c: np.ndarray
    b: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex).reshape(-1)
        b = np.asarray(self.b, dtype=complex).reshape(-1)
        A = np.asarray(self.A, dtype=complex)
        if A.ndim != 3 or A.shape[1:] != (c.size, c.size) or b.size != c.size:
            raise InputError(f"inconsistent realization shapes: c {c.shape}, b {b.shape}, A {A.shape}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)

    @property
    def size(self) -> int:
        return self.c.size

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def coefficient(self, w) -> complex:
        v = self.b
        for k in reversed(tuple(w)):
            v = self.A[k - 1] @ v
        return complex(self.c.conj() @ v)

    def monic_pencil(self) -> LinearPencil:
        """``I - sum_j A_j x_j``."""
        return LinearPencil([np.eye(self.size, dtype=complex), *(-self.A)])


def realize_poly(f: NcPolynomial) -> DescriptorRealization:
    """
    Prefix realization of a polynomial.

    States are the prefixes of the support words.  ``A_j`` maps the state
    ``p x_j`` to ``p``, ``c = e_()`` and ``b`` holds ``coeff(w)`` at every
    state ``w``, so ``c^* A_{j1} ... A_{jk} b`` reads the word
    ``x_{j1} ... x_{jk}`` off ``b``.  The ``A_j`` are jointly nilpotent.
    """
    prefixes = {()}
    for w in f.terms:
        prefixes.update(w[:k] for k in range(1, len(w) + 1))
    states = sorted(prefixes, key=lambda w: (len(w), w))
    index = {w: i for i, w in enumerate(states)}
    n = len(states)
    A = np.zeros((f.d, n, n), dtype=complex)
    for w, i in index.items():
        if w:
            A[w[-1] - 1, index[w[:-1]], i] = 1.0
    c = np.zeros(n, dtype=complex)
    c[0] = 1.0
    b = np.array([f.coeff(w) for w in states], dtype=complex)
    return DescriptorRealization(c, b, A)


def eval_realization(R: DescriptorRealization, X: MatrixTuple) -> np.ndarray:
    """``(c^* (x) I)(I - sum_j A_j (x) X_j)^{-1}(b (x) I)``."""
    if X.d != R.d:
        raise InputError(f"realization has {R.d} variables but the tuple has {X.d}")
    n = X.n
    sys = np.eye(R.size * n, dtype=complex)
    for Aj, Xj in zip(R.A, X):
        sys -= np.kron(Aj, Xj)
    rhs = np.kron(R.b.reshape(-1, 1), np.eye(n))
    try:
        sol = np.linalg.solve(sys, rhs)
    except np.linalg.LinAlgError as exc:
        raise EvalError("realization pencil is singular at this point") from exc
    if not np.all(np.isfinite(sol)):
        raise EvalError("realization pencil is singular at this point")
    return np.kron(R.c.conj().reshape(1, -1), np.eye(n)) @ sol


def invert_realization(R: DescriptorRealization, tol: float = 1e-12) -> DescriptorRealization:
    """
    Realization of the inverse series of size ``size + 1``.

    Requires ``c^* b = 1``.  With ``s = (z, t)``, ``c' = (-c, 1)``,
    ``b' = (0, 1)`` and ``A'_j = [[A_j (I - b c^*), A_j b], [0, 0]]``.
    """
    cb = complex(R.c.conj() @ R.b)
    if abs(cb - 1) > tol * (1 + np.linalg.norm(R.c) * np.linalg.norm(R.b)):
        if abs(cb) <= tol:
            raise InputError("the series vanishes at 0 and has no inverse")
        raise InputError(f"normalize the series to value 1 at 0 first (c*b = {cb:.3g})")
    n = R.size
    proj = np.eye(n) - np.outer(R.b, R.c.conj())
    A = np.zeros((R.d, n + 1, n + 1), dtype=complex)
    for j in range(R.d):
        A[j, :n, :n] = R.A[j] @ proj
        A[j, :n, n] = R.A[j] @ R.b
    c = np.concatenate([-R.c, [1.0]])
    b = np.concatenate([np.zeros(n), [1.0]])
    return DescriptorRealization(c, b, A)


def _invariant_span(v: np.ndarray, mats, tol: float) -> np.ndarray:
    """Orthonormal basis of the smallest subspace containing ``v`` and invariant under ``mats``."""
    n = v.size
    scale = max([np.linalg.norm(v)] + [np.linalg.norm(M, 2) for M in mats])
    Q = np.zeros((n, 0), dtype=complex)

    def grow(u) -> np.ndarray | None:
        nonlocal Q
        for _ in range(2):
            u = u - Q @ (Q.conj().T @ u)
        r = np.linalg.norm(u)
        if r <= tol * max(scale, 1.0):
            return None
        u = u / r
        Q = np.column_stack([Q, u])
        return u

    frontier = [u for u in [grow(v)] if u is not None]
    while frontier and Q.shape[1] < n:
        new = []
        for u in frontier:
            for M in mats:
                w = grow(M @ u)
                if w is not None:
                    new.append(w)
        frontier = new
    return Q


def _compress(R: DescriptorRealization, Q: np.ndarray) -> DescriptorRealization:
    Qh = Q.conj().T
    return DescriptorRealization(Qh @ R.c, Qh @ R.b, np.einsum("ai,jab,bk->jik", Q.conj(), R.A, Q))


def minimize_realization(R: DescriptorRealization, cfg: ToleranceConfig = DEFAULT_TOL) -> DescriptorRealization:
    """
    Restrict to the reachable subspace of ``b``, then to the observable subspace of ``c``.

    Both are grown by orthogonalized word products with the relative cut
    ``cfg.rank_tol``; the result is controllable and observable.
    """
    tol = max(cfg.rank_tol, 1e-12)
    Q = _invariant_span(R.b, list(R.A), tol)
    R = _compress(R, Q)
    Q = _invariant_span(R.c, [A.conj().T for A in R.A], tol)
    return _compress(R, Q)


# ---------------------------------------------------------------------------
# Polynomial stability
# ---------------------------------------------------------------------------


def _integer_shifts(d: int, deg: int):
    # a nonzero commutative polynomial of degree deg cannot vanish on the grid {-m..m}^d with 2m > deg
    m = max(deg, 1)
    pts = itertools.product(range(-m, m + 1), repeat=d)
    yield from sorted(pts, key=lambda p: (sum(abs(t) for t in p), p))


def find_shift(f: NcPolynomial, seed=0, tol: float = 1e-8) -> np.ndarray | None:
    """
    Real ``alpha`` with ``f(alpha) != 0`` at the commuting scalar point, or None.

    None means the commutative image of ``f`` is identically zero (decided
    symbolically), so ``f`` vanishes at every scalar point.
    """
    if not f.commutative_collapse():
        return None
    scale = sum(abs(c) for c in f.terms.values())
    for p in _integer_shifts(f.d, f.degree):
        if abs(f.scalar(p)) > tol * scale:
            return np.array(p, dtype=float)
    rng = rng_from(seed)
    for _ in range(1000):
        p = rng.standard_normal(f.d)
        if abs(f.scalar(p)) > tol * scale:
            return p
    return None  # pragma: no cover - excluded by the grid argument


@dataclass
class PolyPipeline:
    """Intermediate objects of the polynomial pipeline at shift ``alpha``."""

    alpha: np.ndarray
    f_alpha: complex
    g: NcPolynomial
    realization: DescriptorRealization
    pencil: LinearPencil
    shifted: LinearPencil = field(init=False)

    def __post_init__(self):
        self.shifted = shift_pencil(self.pencil, -self.alpha)


def poly_pipeline(f: NcPolynomial, cfg: ToleranceConfig = DEFAULT_TOL, seed=0,
                  alpha=None) -> PolyPipeline | None:
    """
    ``g = f(x + alpha)/f(alpha)``, the minimal realization of ``1/g`` and its monic pencil.

    The pencil ``L`` satisfies ``det g(X) = det L(X)``, so ``f`` is stable
    exactly when ``L(x - alpha)`` is.  Returns None when no shift exists.
    """
    if f.is_zero():
        raise InputError("the zero polynomial")
    if alpha is None:
        alpha = find_shift(f, seed)
        if alpha is None:
            return None
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    fa = f.scalar(alpha)
    if fa == 0:
        raise InputError("f vanishes at the requested shift")
    g = f.shift(alpha) * (1 / fa)
    R = minimize_realization(invert_realization(realize_poly(g)), cfg)
    return PolyPipeline(alpha, fa, g, R, R.monic_pencil())


def find_poly_witness(f: NcPolynomial, budget: int = DEFAULT_WITNESS_BUDGET, seed=0,
                      cfg: ToleranceConfig = DEFAULT_TOL, size_cap: int = 3) -> MatrixTuple | None:
    """
    Upper-orthant tuple of size at most ``size_cap`` where ``f`` loses rank.

    The smallest singular value of ``f(X)`` itself is driven below
    ``cfg.residual_tol``; a returned tuple proves instability of ``f``.
    """
    if budget <= 0:
        return None
    return search_singular_point(lambda X: eval_poly(f, X), f.d, range(1, size_cap + 1), "upper",
                                 budget, seed, cfg.residual_tol)


def check_stable_poly(f: NcPolynomial, cfg: ToleranceConfig = DEFAULT_TOL, seed=0,
                      witness_budget: int = 0) -> StabilityCertificate:
    """
    Decide whether ``f(X)`` is invertible on the whole matricial positive orthant.

    The certificate's stage data refer to ``L(x - alpha)`` for the monic
    pencil ``L`` of :func:`poly_pipeline`; ``meta`` records ``alpha``,
    ``f(alpha)`` and the pencil size.  With ``witness_budget > 0`` an
    unstable verdict is cross-checked by :func:`find_poly_witness` on ``f``
    at sizes up to the pencil size.
    """
    pipe = poly_pipeline(f, cfg, seed)
    if pipe is None:
        cert = StabilityCertificate(Verdict.UNSTABLE, witness=MatrixTuple.scalars([1j] * f.d),
                                    reason="the commutative image of f is zero, so f(i,...,i) = 0")
        cert.meta.update({"tolerances": cfg.as_dict(), "seed": seed})
        return cert
    cert = check_stable(pipe.shifted, cfg, seed)
    if cert.verdict is Verdict.UNSTABLE and witness_budget > 0:
        cert.witness = find_poly_witness(f, witness_budget, seed, cfg, pipe.pencil.rows)
    cert.meta.update({"alpha": pipe.alpha.tolist(), "f_alpha": [pipe.f_alpha.real, pipe.f_alpha.imag],
                      "pencil_size": pipe.pencil.rows})
    return cert


# ---------------------------------------------------------------------------
# Determinantal representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DetRep:
    """A purely stable ``L`` with ``det f(X) = det L(X)`` for all tuples."""

    pencil: LinearPencil
    purely_stable: PurelyStableData
    provenance: dict


def phase_block(theta: float, d: int) -> LinearPencil:
    """
    Constant ``diag(e^{i phi_1}, e^{i phi_2})`` with ``phi_1 + phi_2 = theta`` and both in ``[0, pi]``.

    Both entries lie in the closed upper half plane, so the block is purely
    stable, and its determinant at size ``n`` is ``e^{i n theta}``.
    """
    theta = float(np.mod(theta, 2 * np.pi))
    phi1 = min(theta, np.pi)
    phi2 = theta - phi1
    A0 = np.diag([np.exp(1j * phi1), np.exp(1j * phi2)])
    # snap rounding so that H and P_0 are exact where the angles are 0 or pi
    A0 = np.where(np.abs(A0.imag) < 1e-15, A0.real, A0)
    return LinearPencil.from_constant(A0, d)


def detrep(f: NcPolynomial, cfg: ToleranceConfig = DEFAULT_TOL, seed=0) -> tuple[DetRep | None, StabilityCertificate]:
    """
    Purely stable determinantal representation of a stable polynomial.

    Runs :func:`check_stable_poly`.  For a stable single-stage certificate
    with ``D M`` purely stable (``M = L(x - alpha)``), the output is
    ``c D M`` with ``c = (|f(alpha)| / |det D|)^{1/size}``, preceded by
    :func:`phase_block` when ``c^size det D`` differs from ``f(alpha)`` by a
    phase.  Multi-stage certificates and non-stable verdicts give None.
    """
    cert = check_stable_poly(f, cfg, seed)
    if cert.verdict is not Verdict.STABLE or len(cert.stages) != 1 or cert.final_block is None:
        return None, cert
    D = cert.stages[0].D
    if D.shape[0] != D.shape[1]:
        return None, cert
    size = D.shape[0]
    sv = np.linalg.svd(D, compute_uv=False)
    if sv[-1] <= cfg.rank_tol * sv[0]:
        return None, cert
    fa = complex(*cert.meta["f_alpha"])
    sign, logdet = np.linalg.slogdet(D)
    scale = float(np.exp((np.log(abs(fa)) - logdet) / size))
    t = fa / abs(fa) / sign
    core = cert.final_block.pencil() * scale
    theta = float(np.angle(t))
    padding = None
    if abs(t - 1) > 1e-14:
        padding = phase_block(theta, f.d)
        L = direct_sum(padding, core)
    else:
        L = core
    data = is_purely_stable(L, cfg)
    if data is None:
        return None, cert
    prov = {"alpha": cert.meta["alpha"], "scaling": scale,
            "padding": None if padding is None else [float(np.mod(theta, 2 * np.pi))]}
    return DetRep(L, data, prov), cert


def verify_detrep(f: NcPolynomial, L: LinearPencil, sizes=(1, 2, 3, 4), samples: int = 50, seed=0,
                  cfg: ToleranceConfig = DEFAULT_TOL) -> tuple[bool, float]:
    """
    Check ``det f(X) = det L(X)`` on random tuples and that ``L`` is purely stable.

    Samples alternate between gaussian and upper-orthant tuples.  Returns
    ``(ok, worst)`` with ``worst`` the largest relative determinant error.
    """
    if L.d != f.d or not L.is_square:
        return False, float("inf")
    rng = rng_from(seed)
    worst = 0.0
    for n in sizes:
        for k in range(samples):
            X = sample_gaussian_point(f.d, n, rng) if k % 2 == 0 else sample_upper_point(f.d, n, rng)
            df = np.linalg.det(eval_poly(f, X))
            dl = np.linalg.det(eval_pencil(L, X))
            worst = max(worst, abs(df - dl) / (1 + abs(df)))
    ok = worst <= cfg.residual_tol and is_purely_stable(L, cfg) is not None
    return bool(ok), float(worst)


# ---------------------------------------------------------------------------
# Generators and hermitian shortcuts
# ---------------------------------------------------------------------------


def gen_stable_poly(alphas, betas) -> NcPolynomial:
    """
    ``p(x_1) + q(x_1) x_2`` with ``p/q = sum_k alpha_k / (t - beta_k)``.

    Requires every ``alpha_k < 0`` and distinct real ``beta_k``; the result
    is stable.
    """
    alphas = [float(a) for a in alphas]
    betas = [float(b) for b in betas]
    if not alphas or len(alphas) != len(betas):
        raise InputError("need equally many alphas and betas, at least one")
    if any(a >= 0 for a in alphas):
        raise InputError("every alpha must be negative")
    if len(set(betas)) != len(betas):
        raise InputError("betas must be distinct")
    x1 = NcPolynomial.variable(1, 2)
    x2 = NcPolynomial.variable(2, 2)

    def prod(skip: int | None) -> NcPolynomial:
        out = NcPolynomial.constant(1, 2)
        for l, beta in enumerate(betas):
            if l != skip:
                out = out * (x1 - beta)
        return out

    q = prod(None)
    p = NcPolynomial(2)
    for k, a in enumerate(alphas):
        p = p + a * prod(k)
    return p + q * x2


def affine_hermitian_check(f: NcPolynomial, cfg: ToleranceConfig = DEFAULT_TOL) -> Verdict | None:
    """
    Decide hermitian ``f`` with ``f(0) = 1`` where the affine criterion applies.

    ``1 + sum a_j x_j`` with all ``a_j >= 0`` or all ``a_j <= 0`` is stable.
    A nonaffine ``f`` whose minimal inverse realization has an irreducible
    monic pencil is unstable.  Anything else returns None.
    """
    if not is_hermitian_poly(f):
        raise InputError("polynomial is not hermitian")
    if abs(f.coeff(()) - 1) > 1e-12:
        raise InputError("polynomial must take the value 1 at 0")
    if f.is_affine():
        a = np.array([f.coeff((j,)).real for j in range(1, f.d + 1)])
        if np.all(a >= 0) or np.all(a <= 0):
            return Verdict.STABLE
        return None
    pipe = poly_pipeline(f, cfg, alpha=np.zeros(f.d))
    try:
        irreducible = is_irreducible(pipe.pencil, cfg)
    except InputError:
        return None
    return Verdict.UNSTABLE if irreducible else None
