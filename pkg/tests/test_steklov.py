import math

import mpmath
import numpy as np
import pytest
from sklearn.base import clone

from dtnheat.steklov import (
    AsymptoticFitter,
    CutoffTooSmall,
    IllConditioned,
    RadialProblem,
    closed_form_trace,
    fit_asymptotics,
    heat_trace,
    mode_eigenvalue,
    predict_coefficients,
    steklov_spectrum,
    t_grid,
)

DISK = RadialProblem("disk")
GAUSS = RadialProblem("disk", phi=(0, 0, 0.5))


def _fit(problem, K=None):
    spec = steklov_spectrum(problem)
    t = t_grid()
    return fit_asymptotics(t, heat_trace(spec, t), problem.d, K or problem.d)


@pytest.mark.parametrize("geometry", ["disk", "ball"])
def test_harmonic_eigenvalues(geometry):
    spec = steklov_spectrum(RadialProblem(geometry), modes=61)
    assert np.max(np.abs(spec.eigenvalues - np.arange(61))) < 1e-10


def test_constant_mode_with_drift():
    assert abs(mode_eigenvalue(GAUSS, 0)) < 1e-12


def _kummer_eigenvalue(k):
    # u = r^k M(k/2, k+1, r^2/2) for the drift phi = r^2/2 on the disk
    a, b, z = mpmath.mpf(k) / 2, k + 1, mpmath.mpf(1) / 2
    M = mpmath.hyp1f1(a, b, z)
    dM = a / b * mpmath.hyp1f1(a + 1, b + 1, z)
    return float(k + dM / M)


@pytest.mark.parametrize("k", [1, 2, 5, 20, 100])
def test_series_ode_and_kummer_agree(k):
    series = mode_eigenvalue(GAUSS, k, method="series")
    ode = mode_eigenvalue(GAUSS, k, method="ode")
    exact = _kummer_eigenvalue(k)
    assert series == pytest.approx(exact, rel=1e-12)
    assert ode == pytest.approx(exact, rel=1e-9)


def test_closed_form_traces():
    assert closed_form_trace("disk", 1.0) == pytest.approx(2.1639534137386528, rel=1e-14)
    t = np.array([0.1, 0.5, 1.0])
    for geometry in ("disk", "ball"):
        spec = steklov_spectrum(RadialProblem(geometry))
        assert heat_trace(spec, t) == pytest.approx(closed_form_trace(geometry, t), rel=1e-12)


def test_cutoff_too_small():
    spec = steklov_spectrum(DISK, modes=20)
    with pytest.raises(CutoffTooSmall):
        heat_trace(spec, 0.05)


def test_synthetic_fit():
    t = t_grid()
    trace = 2 / t + 0.5 + 0.3 * t * np.log(t) + 0.1 * t**2 - 0.02 * t**3
    fit = fit_asymptotics(t, trace, n=2, K=2)
    assert np.allclose(fit.coefficients, [2, 0.5], atol=1e-8)


def test_ill_conditioned_fit():
    t = t_grid()
    with pytest.raises(IllConditioned):
        AsymptoticFitter(n=2, K=2, max_condition=10.0).fit(t, 2 / t)


def test_fitter_is_a_scikit_estimator():
    est = AsymptoticFitter(n=3, K=3, guards=("t",))
    assert est.get_params()["guards"] == ("t",)
    twin = clone(est).set_params(K=2)
    assert twin.K == 2 and est.K == 3
    t = t_grid()
    twin.fit(t, 2 / t**2 + 1 / t + 0.1 * t)
    assert twin.predict(t) == pytest.approx(2 / t**2 + 1 / t + 0.1 * t, rel=1e-10)


def test_problem_validation():
    with pytest.raises(ValueError):
        RadialProblem("cube")
    with pytest.raises(ValueError):
        RadialProblem("disk", phi=(0, 1.0))
    with pytest.raises(ValueError):
        RadialProblem("ball", V=(0, 0, 0, 1.0))
    with pytest.raises(ValueError):
        mode_eigenvalue(DISK, -1)


def test_eigenvalues_increase_with_degree():
    for problem in (DISK, GAUSS, RadialProblem("ball", phi=(0, 0, 0.5), V=(0.3,))):
        lam = steklov_spectrum(problem, modes=200).eigenvalues
        assert np.all(np.diff(lam) > 0)


def test_predictions():
    assert predict_coefficients(DISK) == [2.0, 0.0]
    assert predict_coefficients(GAUSS) == pytest.approx([2.0, -1.0])
    assert predict_coefficients(RadialProblem("ball")) == pytest.approx([2.0, 1.0, 1 / 3])
    with pytest.raises(ValueError):
        predict_coefficients(DISK, K=3)


def test_drift_fit_on_disk():
    fit = _fit(GAUSS)
    assert fit.coefficients == pytest.approx([2.0, -1.0], abs=1e-3)


def test_constant_potential_leaves_a1_unchanged():
    fit = _fit(RadialProblem("disk", V=(0.5,)))
    assert fit.coefficients[1] == pytest.approx(0.0, abs=1e-3)
    assert predict_coefficients(RadialProblem("disk", V=(0.5,)))[1] == 0.0


def test_weighted_ball_fit_matches_prediction():
    problem = RadialProblem("ball", phi=(0, 0, 0.5))
    fit = _fit(problem)
    assert fit.coefficients == pytest.approx(predict_coefficients(problem), abs=2e-3)
    assert math.isfinite(fit.condition)
