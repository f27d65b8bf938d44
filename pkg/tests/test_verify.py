import pytest

from dtnheat.trace import moment
from dtnheat.verify import (
    Check,
    check_a0,
    check_coefficients,
    check_factorization,
    check_geometry,
    check_moments,
    check_space_forms,
    radial_moment_quadrature,
    sphere_moment_quadrature,
    summarize,
)


def test_summary_and_json():
    checks = [Check("x", True, {"n": 3}, seconds=1.5), Check("y", False)]
    assert summarize(checks) == {"total": 2, "failed": 1, "passed": False}
    assert "seconds" not in checks[0].to_json()


def test_quadrature_helpers():
    # |S^2| times the sphere mean of xi_1^2 is 4 pi / 3
    assert sphere_moment_quadrature((2, 0, 0)) == pytest.approx(4.18879020478639, rel=1e-10)
    assert radial_moment_quadrature(3) == pytest.approx(6.0, rel=1e-10)


def test_small_runs_pass():
    assert all(c.passed for c in check_a0([2, 3]))
    assert all(c.passed for c in check_coefficients([3, 4], max_k=2, seeds=(0, 1)))
    assert all(c.passed for c in check_coefficients([3], max_k=2, symbolic=True))
    assert all(c.passed for c in check_factorization([3], depth=2))
    assert all(c.passed for c in check_geometry([3]))
    assert all(c.passed for c in check_moments([3], max_degree=4, max_p=4))


def test_space_form_second_coefficient():
    checks = [c for c in check_space_forms([4], max_k=2)]
    assert checks and all(c.passed for c in checks)


def test_moment_values_used_by_the_checks():
    assert moment(3, 0, (0, 0)) == 1
