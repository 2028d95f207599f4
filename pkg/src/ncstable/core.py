"""
Value types for linear matrix pencils and noncommutative polynomials.

A pencil ``A_0 + A_1 x_1 + ... + A_d x_d`` is evaluated on a tuple of
``n x n`` matrices as ``A_0 (x) I_n + sum_j A_j (x) X_j`` (coefficient on the
left of every Kronecker product).  Polynomials live in the free algebra on
``x_1..x_d``; words are tuples of 1-based variable indices and the empty
tuple is the constant term.

All objects are immutable: the underlying arrays are marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import InputError

Word = tuple[int, ...]

#: Coefficients with modulus at or below this are dropped from polynomials.
COEFF_ZERO = 1e-14


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.setflags(write=False)
    return arr


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex array (copy)."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} has non-finite entries")
    return m


# ---------------------------------------------------------------------------
# Pencils
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearPencil:
    """
    Linear matrix pencil ``A_0 + sum_j A_j x_j`` of size ``rows x cols``.

    Parameters
    ----------
    coeffs : sequence of array_like
        ``[A_0, A_1, ..., A_d]``, all of the same shape.
    """

    coeffs: np.ndarray

    def __init__(self, coeffs):
        mats = [as_matrix(a, f"A_{k}") for k, a in enumerate(coeffs)]
        if not mats:
            raise InputError("a pencil needs at least the constant coefficient")
        shape = mats[0].shape
        if any(m.shape != shape for m in mats):
            raise InputError("pencil coefficients must share one shape")
        if shape[0] == 0 or shape[1] == 0:
            raise InputError("pencil dimensions must be positive")
        object.__setattr__(self, "coeffs", _frozen(np.stack(mats)))

    @classmethod
    def from_constant(cls, a0, d: int) -> "LinearPencil":
        a0 = as_matrix(a0)
        return cls([a0] + [np.zeros_like(a0)] * d)

    @property
    def d(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def rows(self) -> int:
        return self.coeffs.shape[1]

    @property
    def cols(self) -> int:
        return self.coeffs.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[1], self.coeffs.shape[2]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, j: int) -> np.ndarray:
        return self.coeffs[j]

    def __neg__(self) -> "LinearPencil":
        return LinearPencil(-self.coeffs)

    def __mul__(self, c) -> "LinearPencil":
        return LinearPencil(complex(c) * self.coeffs)

    __rmul__ = __mul__

    def left(self, M) -> "LinearPencil":
        """The pencil ``M L`` (constant matrix times every coefficient)."""
        M = as_matrix(M)
        return LinearPencil(np.einsum("ab,jbc->jac", M, self.coeffs))

    def right(self, M) -> "LinearPencil":
        """The pencil ``L M``."""
        M = as_matrix(M)
        return LinearPencil(np.einsum("jab,bc->jac", self.coeffs, M))

    def norm(self) -> float:
        """Largest Frobenius norm among the coefficients."""
        return float(max(np.linalg.norm(a) for a in self.coeffs))

    def __call__(self, X: "MatrixTuple") -> np.ndarray:
        return eval_pencil(self, X)

    def __repr__(self) -> str:
        return f"LinearPencil(d={self.d}, shape={self.shape})"


def direct_sum(*pencils: LinearPencil) -> LinearPencil:
    """Block-diagonal pencil ``L_1 (+) L_2 (+) ...``."""
    d = pencils[0].d
    if any(p.d != d for p in pencils):
        raise InputError("direct sum needs pencils in the same variables")
    rows = sum(p.rows for p in pencils)
    cols = sum(p.cols for p in pencils)
    out = np.zeros((d + 1, rows, cols), dtype=complex)
    r = c = 0
    for p in pencils:
        out[:, r:r + p.rows, c:c + p.cols] = p.coeffs
        r += p.rows
        c += p.cols
    return LinearPencil(out)


# ---------------------------------------------------------------------------
# Matrix tuples
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixTuple:
    """A tuple ``(X_1, ..., X_d)`` of square matrices of a common size ``n``."""

    mats: np.ndarray

    def __init__(self, mats):
        arrs = [as_matrix(m, f"X_{j + 1}") for j, m in enumerate(mats)]
        if not arrs:
            raise InputError("a matrix tuple needs at least one matrix")
        n = arrs[0].shape[0]
        for m in arrs:
            if m.shape != (n, n):
                raise InputError("tuple matrices must be square of a common size")
        object.__setattr__(self, "mats", _frozen(np.stack(arrs)))

    @classmethod
    def scalars(cls, values: Iterable[complex]) -> "MatrixTuple":
        return cls([[[complex(v)]] for v in values])

    @property
    def d(self) -> int:
        return self.mats.shape[0]

    @property
    def n(self) -> int:
        return self.mats.shape[1]

    def __getitem__(self, j: int) -> np.ndarray:
        return self.mats[j]

    def __len__(self) -> int:
        return self.d

    def __iter__(self):
        return iter(self.mats)

    def adjoint(self) -> "MatrixTuple":
        return MatrixTuple(np.conj(np.transpose(self.mats, (0, 2, 1))))

    def transpose(self) -> "MatrixTuple":
        return MatrixTuple(np.transpose(self.mats, (0, 2, 1)))

    def shifted(self, alpha) -> "MatrixTuple":
        """``X + alpha I`` componentwise."""
        alpha = np.asarray(alpha, dtype=complex).reshape(-1)
        eye = np.eye(self.n)
        return MatrixTuple([X + a * eye for X, a in zip(self.mats, alpha)])

    def __repr__(self) -> str:
        return f"MatrixTuple(d={self.d}, n={self.n})"


def direct_sum_tuple(X: MatrixTuple, Y: MatrixTuple) -> MatrixTuple:
    if X.d != Y.d:
        raise InputError("tuples must have the same length")
    n, m = X.n, Y.n
    out = np.zeros((X.d, n + m, n + m), dtype=complex)
    out[:, :n, :n] = X.mats
    out[:, n:, n:] = Y.mats
    return MatrixTuple(out)


def eval_pencil(L: LinearPencil, X: MatrixTuple) -> np.ndarray:
    """Evaluate ``A_0 (x) I + sum_j A_j (x) X_j`` (shape ``rows*n x cols*n``)."""
    if L.d != X.d:
        raise InputError(f"pencil has {L.d} variables but the tuple has {X.d}")
    n = X.n
    out = np.kron(L.coeffs[0], np.eye(n))
    for j in range(1, L.d + 1):
        out = out + np.kron(L.coeffs[j], X.mats[j - 1])
    return out


def transpose_pencil(L: LinearPencil) -> LinearPencil:
    """Entrywise transpose of every coefficient (no conjugation)."""
    return LinearPencil(np.transpose(L.coeffs, (0, 2, 1)))


def shift_pencil(L: LinearPencil, alpha) -> LinearPencil:
    """The pencil ``L(x + alpha)`` for a real vector ``alpha``."""
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if alpha.shape[0] != L.d:
        raise InputError("shift vector length must equal the number of variables")
    coeffs = np.array(L.coeffs)
    coeffs[0] = coeffs[0] + np.tensordot(alpha, L.coeffs[1:], axes=1)
    return LinearPencil(coeffs)


def is_hermitian_pencil(L: LinearPencil, tol: float = 1e-10) -> bool:
    if not L.is_square:
        raise InputError("hermitian pencils are square")
    dev = max(np.max(np.abs(A - A.conj().T)) for A in L.coeffs)
    return bool(dev <= tol)


# ---------------------------------------------------------------------------
# Noncommutative polynomials
# ---------------------------------------------------------------------------


def word_key(w: Word) -> tuple[int, Word]:
    """Sort key: length first, then lexicographic."""
    return (len(w), w)


@dataclass(frozen=True, eq=False)
class NcPolynomial:
    """
    Element of the free algebra on ``x_1..x_d``.

    ``terms`` maps words (tuples of indices in ``1..d``) to complex
    coefficients; coefficients of modulus at most ``1e-14`` are dropped.
    """

    d: int
    terms: Mapping[Word, complex] = field(default_factory=dict)

    def __init__(self, d: int, terms: Mapping[Iterable[int], complex] | None = None):
        if d < 1:
            raise InputError("a polynomial needs at least one variable")
        clean: dict[Word, complex] = {}
        for w, c in (terms or {}).items():
            w = tuple(int(k) for k in w)
            if any(k < 1 or k > d for k in w):
                raise InputError(f"word {w} uses a variable outside 1..{d}")
            c = complex(c)
            if not np.isfinite(c):
                raise InputError("non-finite coefficient")
            clean[w] = clean.get(w, 0) + c
        clean = {w: c for w, c in sorted(clean.items(), key=lambda t: word_key(t[0]))
                 if abs(c) > COEFF_ZERO}
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "terms", clean)

    @classmethod
    def constant(cls, c: complex, d: int) -> "NcPolynomial":
        return cls(d, {(): c})

    @classmethod
    def variable(cls, j: int, d: int) -> "NcPolynomial":
        return cls(d, {(j,): 1})

    def coeff(self, w: Iterable[int]) -> complex:
        return self.terms.get(tuple(w), 0j)

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def is_affine(self) -> bool:
        return self.degree <= 1

    def _lift(self, other) -> "NcPolynomial":
        if isinstance(other, NcPolynomial):
            if other.d != self.d:
                raise InputError("polynomials in different variable counts")
            return other
        return NcPolynomial.constant(other, self.d)

    def __add__(self, other) -> "NcPolynomial":
        other = self._lift(other)
        terms = dict(self.terms)
        for w, c in other.terms.items():
            terms[w] = terms.get(w, 0) + c
        return NcPolynomial(self.d, terms)

    __radd__ = __add__

    def __neg__(self) -> "NcPolynomial":
        return NcPolynomial(self.d, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other) -> "NcPolynomial":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "NcPolynomial":
        return self._lift(other) - self

    def __mul__(self, other) -> "NcPolynomial":
        if not isinstance(other, NcPolynomial):
            return NcPolynomial(self.d, {w: c * complex(other) for w, c in self.terms.items()})
        other = self._lift(other)
        terms: dict[Word, complex] = {}
        for u, a in self.terms.items():
            for v, b in other.terms.items():
                terms[u + v] = terms.get(u + v, 0) + a * b
        return NcPolynomial(self.d, terms)

    def __rmul__(self, other) -> "NcPolynomial":
        return self * other

    def __pow__(self, k: int) -> "NcPolynomial":
        out = NcPolynomial.constant(1, self.d)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, NcPolynomial):
            return NotImplemented
        diff = self - other
        return diff.is_zero()

    def __hash__(self):
        return hash((self.d, tuple(self.terms.items())))

    def __call__(self, X: MatrixTuple) -> np.ndarray:
        return eval_poly(self, X)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for w, c in self.terms.items():
            mono = "*".join(f"x{k}" for k in w) or "1"
            parts.append(f"({c:g})*{mono}" if w else f"({c:g})")
        return " + ".join(parts)

    def scalar(self, z) -> complex:
        """Evaluate at a commuting scalar point ``z`` (length ``d``)."""
        z = np.asarray(z, dtype=complex)
        return complex(sum(c * np.prod(z[[k - 1 for k in w]]) for w, c in self.terms.items()))

    def commutative_collapse(self) -> dict[tuple[int, ...], complex]:
        """Coefficients of the commutative image, keyed by multidegree."""
        out: dict[tuple[int, ...], complex] = {}
        for w, c in self.terms.items():
            md = tuple(w.count(k) for k in range(1, self.d + 1))
            out[md] = out.get(md, 0) + c
        return {m: c for m, c in out.items() if abs(c) > COEFF_ZERO}

    def shift(self, alpha) -> "NcPolynomial":
        """The polynomial ``f(x + alpha)``."""
        alpha = np.asarray(alpha, dtype=complex).reshape(-1)
        if alpha.shape[0] != self.d:
            raise InputError("shift vector length must equal the number of variables")
        out = NcPolynomial(self.d)
        lin = [NcPolynomial(self.d, {(k,): 1, (): alpha[k - 1]}) for k in range(1, self.d + 1)]
        for w, c in self.terms.items():
            term = NcPolynomial.constant(c, self.d)
            for k in w:
                term = term * lin[k - 1]
            out = out + term
        return out


def eval_poly(f: NcPolynomial, X: MatrixTuple) -> np.ndarray:
    """Evaluate ``f`` at a matrix tuple; words map to ordered matrix products."""
    if f.d != X.d:
        raise InputError(f"polynomial has {f.d} variables but the tuple has {X.d}")
    n = X.n
    out = np.zeros((n, n), dtype=complex)
    cache: dict[Word, np.ndarray] = {(): np.eye(n, dtype=complex)}

    def product(w: Word) -> np.ndarray:
        if w not in cache:
            cache[w] = product(w[:-1]) @ X.mats[w[-1] - 1]
        return cache[w]

    for w, c in f.terms.items():
        out += c * product(w)
    return out


def is_hermitian_poly(f: NcPolynomial, tol: float = COEFF_ZERO) -> bool:
    """True iff ``coeff(reverse(w)) == conj(coeff(w))`` for every word."""
    for w, c in f.terms.items():
        if abs(f.coeff(w[::-1]) - np.conj(c)) > tol:
            return False
    return True
