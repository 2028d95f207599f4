"""Random instance generators for tests, benchmarks and the ``gen`` command."""

from __future__ import annotations

import numpy as np

from .core import LinearPencil, direct_sum
from .errors import InputError
from .numerics import joint_kernel, random_complex, random_hermitian, rng_from


def _random_psd(n: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    G = random_complex((n, rank), rng)
    return G @ G.conj().T


def random_invertible(n: int, rng: np.random.Generator, cond: float = 50.0) -> np.ndarray:
    """Random complex matrix with condition number at most about ``cond``."""
    while True:
        M = random_complex((n, n), rng)
        if np.linalg.cond(M) <= cond:
            return M


def random_purely_stable(delta: int, d: int, seed=None, full_rank: bool = False) -> LinearPencil:
    """
    Random purely stable pencil ``H + i P_0 + sum_j P_j x_j``.

    ``H`` is random hermitian and each ``P_j = G_j G_j^*`` has random rank
    (full rank when ``full_rank``).  If the joint kernel of ``H, P_0..P_d``
    is nontrivial, a small multiple of the identity is added to ``P_0``.
    """
    if delta < 1 or d < 0:
        raise InputError("need delta >= 1 and d >= 0")
    rng = rng_from(seed)
    H = random_hermitian(delta, rng)
    P = []
    for _ in range(d + 1):
        rank = delta if full_rank else int(rng.integers(0, delta + 1))
        P.append(_random_psd(delta, rank, rng))
    if joint_kernel([H, *P]).shape[1]:
        P[0] = P[0] + 0.1 * np.eye(delta)
    return LinearPencil([H + 1j * P[0], *P[1:]])


def mix(L: LinearPencil, seed=None, cond: float = 50.0) -> LinearPencil:
    """``P L Q`` for random invertible ``P``, ``Q``; stability is unchanged."""
    rng = rng_from(seed)
    return L.left(random_invertible(L.rows, rng, cond)).right(random_invertible(L.cols, rng, cond))


def planted_unstable(delta: int, d: int, seed=None) -> LinearPencil:
    """
    ``P ((x_1 - i) + J) Q`` with ``J`` a random purely stable pencil of size ``delta - 1``.

    The scalar block vanishes at ``x_1 = i``, so every such pencil loses rank
    on the positive orthant already at size 1.
    """
    if delta < 1 or d < 1:
        raise InputError("need delta >= 1 and d >= 1")
    rng = rng_from(seed)
    bad = np.zeros((d + 1, 1, 1), dtype=complex)
    bad[0, 0, 0] = -1j
    bad[1, 0, 0] = 1.0
    blocks = [LinearPencil(bad)]
    if delta > 1:
        blocks.append(random_purely_stable(delta - 1, d, rng))
    return mix(direct_sum(*blocks), rng)


def random_weakly_stable(sizes, d: int, seed=None, cond: float = 50.0) -> LinearPencil:
    """
    Mixed block lower triangular pencil with purely stable diagonal blocks of the given sizes.

    Blocks below the diagonal are random, so the pencil is stable but in
    general not purely stable; checking it takes one stage per block.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or min(sizes) < 1 or d < 1:
        raise InputError("need positive block sizes and d >= 1")
    rng = rng_from(seed)
    offs = np.cumsum([0, *sizes])
    C = np.zeros((d + 1, offs[-1], offs[-1]), dtype=complex)
    for a, s in enumerate(sizes):
        rows = slice(offs[a], offs[a + 1])
        C[:, rows, rows] = random_purely_stable(s, d, rng).coeffs
        if a:
            C[:, rows, :offs[a]] = random_complex((d + 1, s, offs[a]), rng)
    return mix(LinearPencil(C), rng, cond)


def random_hermitian_pencil(delta: int, d: int, seed=None, kind: str = "indefinite") -> LinearPencil:
    """
    Random hermitian pencil ``A_0 + sum_j A_j x_j``.

    ``kind`` is ``"positive"`` (``A_0`` hermitian, ``A_j`` positive
    definite, so ``L`` is stable and ``i``-free), ``"negative"`` (the
    negation), or ``"indefinite"`` (all coefficients random hermitian).
    Every ``A_0`` is shifted to be safely invertible.
    """
    rng = rng_from(seed)
    A0 = random_hermitian(delta, rng)
    w, U = np.linalg.eigh(A0)
    w = np.where(np.abs(w) < 0.3, np.sign(w + 1e-300) * 0.3, w)
    A0 = (U * w) @ U.conj().T
    if kind == "indefinite":
        As = [random_hermitian(delta, rng) for _ in range(d)]
    elif kind in ("positive", "negative"):
        As = [_random_psd(delta, delta, rng) + 0.1 * np.eye(delta) for _ in range(d)]
    else:
        raise InputError(f"unknown kind {kind!r}")
    L = LinearPencil([A0, *As])
    return -L if kind == "negative" else L
