import numpy as np

from ncstable.core import LinearPencil
from ncstable.generators import random_purely_stable
from ncstable.sdp import SdpStatus, build_feasibility_sdp, d_from_real, d_to_real, embed_psd, sdp_residuals, solve

from conftest import scalar_pencil


def test_real_coordinates_round_trip():
    rng = np.random.default_rng(0)
    D = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    assert np.array_equal(d_from_real(d_to_real(D), D.shape), D)


def test_embedding_preserves_psd():
    M = np.array([[2, 1j], [-1j, 1]])
    ev = np.linalg.eigvalsh(embed_psd(M))
    assert ev.min() > 0
    assert np.allclose(sorted(ev), sorted(np.tile(np.linalg.eigvalsh(M), 2)))


def test_scalar_feasible():
    out = solve(build_feasibility_sdp(scalar_pencil(1, 1)))
    assert out.status is SdpStatus.FEASIBLE
    assert np.allclose(out.D, [[1]], atol=1e-6)


def test_scalar_infeasible():
    out = solve(build_feasibility_sdp(scalar_pencil(-1j, 1)))
    assert out.status is SdpStatus.INFEASIBLE


def test_residuals_recomputed_independently():
    L = random_purely_stable(3, 2, seed=4)
    out = solve(build_feasibility_sdp(L))
    assert out.feasible
    res = sdp_residuals(L, out.D)
    assert max(res.values()) < 1e-6


def test_zero_on_constraint():
    # x_1 (+) (1 + x_1): the first coordinate must be annihilated when asked
    L2 = LinearPencil([np.diag([0.0, 1.0]), np.eye(2)])
    V = np.array([[1.0], [0.0]])
    out = solve(build_feasibility_sdp(L2, zero_on=V))
    assert out.feasible
    assert np.allclose(out.D @ V, 0, atol=1e-6)
    assert sdp_residuals(L2, out.D, zero_on=V)["kernel"] < 1e-6
