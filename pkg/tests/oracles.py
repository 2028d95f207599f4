"""Brute-force reference computations used by the tests."""

from __future__ import annotations

import itertools

import numpy as np

from ncstable.core import LinearPencil, NcPolynomial

HANKEL_DEPTH = 6


def words(d: int, max_len: int):
    for k in range(max_len + 1):
        yield from itertools.product(range(1, d + 1), repeat=k)


def inverse_series(f: NcPolynomial, max_len: int = HANKEL_DEPTH) -> dict[tuple[int, ...], complex]:
    """
    Coefficients of ``1/f`` as a formal series up to ``max_len``.

    Uses ``g(w) = [w empty] - sum_{w = u v, u nonempty} f(u) g(v)`` for ``f(0) = 1``.
    """
    if f.coeff(()) != 1:
        raise ValueError("need f(0) = 1")
    g: dict[tuple[int, ...], complex] = {}
    for w in words(f.d, max_len):
        val = 1.0 + 0j if not w else 0j
        for k in range(1, len(w) + 1):
            val -= f.coeff(w[:k]) * g[w[k:]]
        g[w] = val
    return g


def hankel_rank(coeff, d: int, depth: int = HANKEL_DEPTH, tol: float = 1e-9) -> int:
    """Rank of the Hankel block ``[coeff(u v)]`` over words ``u, v`` with ``|u|, |v| <= depth/2``."""
    half = list(words(d, depth // 2))
    H = np.array([[coeff(u + v) for v in half] for u in half], dtype=complex)
    s = np.linalg.svd(H, compute_uv=False)
    return int(np.sum(s > tol * max(s[0], 1.0)))


def hand_detrep() -> LinearPencil:
    """``diag(-1, 1) (+) [[x_2, -1], [-1, x_1]]``, whose determinant is ``1 - x_1 x_2``."""
    return LinearPencil([
        np.diag([-1.0, 1.0, 0.0, 0.0]) + np.pad([[0, -1], [-1, 0]], ((2, 0), (2, 0))),
        np.diag([0.0, 0.0, 0.0, 1.0]),
        np.diag([0.0, 0.0, 1.0, 0.0]),
    ])


def unpadded_detrep() -> LinearPencil:
    return LinearPencil([[[0, -1], [-1, 0]], [[0, 0], [0, 1]], [[1, 0], [0, 0]]])


def random_sparse_poly(rng: np.random.Generator, max_vars: int = 3, max_deg: int = 4, terms: int = 5,
                       constant: complex | None = None) -> NcPolynomial:
    d = int(rng.integers(1, max_vars + 1))
    out = {}
    for _ in range(int(rng.integers(1, terms + 1))):
        k = int(rng.integers(0, max_deg + 1))
        w = tuple(int(j) for j in rng.integers(1, d + 1, size=k))
        out[w] = complex(*rng.standard_normal(2))
    if constant is not None:
        out[()] = constant
    return NcPolynomial(d, out)
