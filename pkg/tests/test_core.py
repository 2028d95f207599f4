import numpy as np
import pytest

from ncstable.core import (
    LinearPencil,
    MatrixTuple,
    NcPolynomial,
    direct_sum,
    direct_sum_tuple,
    eval_pencil,
    eval_poly,
    is_hermitian_pencil,
    is_hermitian_poly,
    shift_pencil,
    transpose_pencil,
)
from ncstable.errors import InputError
from ncstable.numerics import sample_gaussian_point

from conftest import scalar_pencil


def test_scalar_evaluation():
    L = scalar_pencil(1, 2)
    assert eval_pencil(L, MatrixTuple.scalars([3.0]))[0, 0] == 7


def test_kronecker_layout():
    A0, A1 = np.arange(4.0).reshape(2, 2), np.eye(2)
    X = np.array([[0, 1], [2, 3]], dtype=complex)
    got = eval_pencil(LinearPencil([A0, A1]), MatrixTuple([X]))
    assert np.allclose(got, np.kron(A0, np.eye(2)) + np.kron(A1, X))


def test_pencil_shape_checks():
    with pytest.raises(InputError):
        LinearPencil([np.eye(2), np.eye(3)])
    with pytest.raises(InputError):
        eval_pencil(scalar_pencil(1, 1), MatrixTuple.scalars([1.0, 2.0]))


def test_direct_sum_is_block_diagonal():
    rng = np.random.default_rng(0)
    L = LinearPencil(rng.standard_normal((3, 2, 2)))
    M = LinearPencil(rng.standard_normal((3, 1, 3)))
    S = direct_sum(L, M)
    assert S.shape == (3, 5)
    X = sample_gaussian_point(2, 2, 1)
    v = eval_pencil(S, X)
    # rows/cols interleave with the tuple size, so compare determinants of squares separately
    assert np.linalg.matrix_rank(v) == np.linalg.matrix_rank(eval_pencil(L, X)) + np.linalg.matrix_rank(eval_pencil(M, X))


def test_direct_sum_tuple_evaluates_blockwise():
    X, Y = sample_gaussian_point(2, 2, 0), sample_gaussian_point(2, 3, 1)
    f = NcPolynomial(2, {(1, 2): 1.0, (): 2.0})
    Z = eval_poly(f, direct_sum_tuple(X, Y))
    assert np.allclose(Z[:2, :2], eval_poly(f, X))
    assert np.allclose(Z[2:, 2:], eval_poly(f, Y))
    assert np.allclose(Z[:2, 2:], 0)


def test_transpose_and_shift():
    L = LinearPencil([[[1, 2], [3, 4]], [[0, 1], [0, 0]]])
    assert np.array_equal(transpose_pencil(L).coeffs[0], L.coeffs[0].T)
    S = shift_pencil(L, [2.0])
    X = MatrixTuple.scalars([0.5])
    assert np.allclose(eval_pencil(S, X), eval_pencil(L, MatrixTuple.scalars([2.5])))


def test_hermitian_pencil_flag():
    assert is_hermitian_pencil(LinearPencil([np.eye(2), np.array([[1, 1j], [-1j, 0]])]))
    assert not is_hermitian_pencil(scalar_pencil(1j, 1))


def test_polynomial_algebra(xs):
    x1, x2 = xs
    f = (1 - x1 * x2) * (1 + x2)
    assert f.coeff((1, 2, 2)) == -1
    assert f.coeff((2,)) == 1
    assert f.degree == 3
    assert (x1 * x2 - x2 * x1).commutative_collapse() == {}
    assert (x1 + x2) ** 2 == x1 * x1 + x1 * x2 + x2 * x1 + x2 * x2


def test_polynomial_evaluation_is_ordered(xs):
    x1, x2 = xs
    X = sample_gaussian_point(2, 3, 4)
    assert np.allclose(eval_poly(x1 * x2, X), X[0] @ X[1])
    assert np.allclose(eval_poly(x2 * x1, X), X[1] @ X[0])


def test_polynomial_shift(xs):
    x1, x2 = xs
    f = 1 - x1 * x2 + 3 * x2
    g = f.shift([0.5, -1.0])
    X = sample_gaussian_point(2, 2, 7)
    assert np.allclose(eval_poly(g, X), eval_poly(f, X.shifted([0.5, -1.0])))


def test_hermitian_poly(xs):
    x1, x2 = xs
    assert is_hermitian_poly(1 + x1 * x2 + x2 * x1)
    assert not is_hermitian_poly(1 + x1 * x2)
    assert not is_hermitian_poly(NcPolynomial(1, {(): 1j}))


def test_bad_words_rejected():
    with pytest.raises(InputError):
        NcPolynomial(2, {(3,): 1.0})
