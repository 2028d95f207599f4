import numpy as np
import pytest

from ncstable.errors import InputError
from ncstable.numerics import (
    ToleranceConfig,
    in_polydisk,
    in_upper_orthant,
    is_psd,
    joint_kernel,
    kernel_basis,
    principal_angle,
    range_basis,
    sample_polydisk_point,
    sample_upper_point,
)


def test_tolerance_precedence():
    env = {"NCSTABLE_TOL_RANK": "1e-7", "NCSTABLE_TOL_PSD": "1e-5"}
    cfg = ToleranceConfig.from_env(env, psd_tol=1e-4, sdp_tol=None)
    assert cfg.rank_tol == 1e-7
    assert cfg.psd_tol == 1e-4
    assert cfg.sdp_tol == ToleranceConfig().sdp_tol


def test_tolerance_validation():
    with pytest.raises(InputError):
        ToleranceConfig(rank_tol=-1)
    with pytest.raises(InputError):
        ToleranceConfig.from_env({"NCSTABLE_TOL_RANK": "tiny"})


def test_kernel_and_range_are_complementary():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))
    K, R = kernel_basis(M), range_basis(M)
    assert K.shape == (4, 2) and R.shape == (5, 2)
    assert np.allclose(M @ K, 0, atol=1e-12)
    assert np.allclose(K.conj().T @ K, np.eye(2))


def test_joint_kernel():
    A = np.diag([1.0, 0.0, 0.0])
    B = np.diag([0.0, 1.0, 0.0])
    K = joint_kernel([A, B])
    assert K.shape == (3, 1)
    assert principal_angle(K, np.array([[0.0], [0.0], [1.0]])) < 1e-12


def test_principal_angle():
    e1 = np.array([[1.0], [0.0]])
    tilted = np.array([[1.0], [1.0]]) / np.sqrt(2)
    assert principal_angle(e1, tilted) == pytest.approx(np.pi / 4)
    assert principal_angle(e1, np.eye(2)) == pytest.approx(np.pi / 2)


def test_psd_tolerance_is_relative():
    assert is_psd(np.diag([1e6, -1e-3]))
    assert not is_psd(np.diag([1.0, -1e-3]))


@pytest.mark.parametrize("n", [1, 3])
def test_samplers_land_in_their_domains(n):
    for s in range(10):
        assert in_upper_orthant(sample_upper_point(2, n, s))
        assert in_polydisk(sample_polydisk_point(2, n, s))


def test_samplers_are_seeded():
    a, b = sample_upper_point(2, 2, 5), sample_upper_point(2, 2, 5)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
