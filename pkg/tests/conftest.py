import numpy as np
import pytest

from ncstable.core import LinearPencil, NcPolynomial


def scalar_pencil(*coeffs) -> LinearPencil:
    """1 x 1 pencil ``c_0 + c_1 x_1 + ...``."""
    return LinearPencil(np.array(coeffs, dtype=complex).reshape(len(coeffs), 1, 1))


@pytest.fixture
def small_example() -> LinearPencil:
    """2 x 2 stable pencil that needs two stages."""
    return LinearPencil([np.diag([1.0, -1.0]), np.array([[2.0, -1.0], [-1.0, 0.0]])])


@pytest.fixture
def xs():
    return NcPolynomial.variable(1, 2), NcPolynomial.variable(2, 2)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
