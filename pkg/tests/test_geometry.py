import numpy as np
import pytest

from dtnheat.exact_algebra import Atom, AtomPoly
from dtnheat.geometry import (
    christoffel,
    curvature_report,
    gauss_check,
    lemma21_check,
    nabla_ric_nn,
    phi_v_report,
    riemann,
    riemann_symmetry_check,
    riemann_values,
    space_form_check,
)
from dtnheat.jets import EuclideanBall, Explicit, RandomGauge, SpaceFormBall, build_gauge_jets


def _flat(n, phi=None):
    return build_gauge_jets(Explicit(phi=phi or {}), n, 3)


def test_flat_christoffels_and_curvature_vanish():
    J = _flat(4)
    for j in range(4):
        for k in range(4):
            for l in range(4):
                assert not christoffel(J, j, k, l)
    assert not riemann(J, 0, 3, 0, 3)
    assert not nabla_ric_nn(J)


def test_gauge_christoffels():
    J = build_gauge_jets(RandomGauge(), 4, 2)
    n = 3
    for a in range(3):
        for b in range(3):
            want = -AtomPoly.atom(Atom.kappa(a + 1)) if a == b else 0
            assert christoffel(J, a, n, b).value() == want
    for k in range(4):
        assert not christoffel(J, n, n, k).value()


def test_flat_ball_has_no_ambient_curvature():
    J = build_gauge_jets(EuclideanBall(1), 4, 3)
    assert not any(riemann_values(J).values())
    rep = curvature_report(J)
    assert rep.boundaryScalar == 6


def test_unit_ball_n3_boundary_scalar():
    rep = curvature_report(build_gauge_jets(EuclideanBall(1), 3, 2))
    assert rep.boundaryScalar == 2
    assert rep.H == 2


def test_gradient_square():
    J = _flat(4, {(1, 0, 0, 0): 2, (0, 0, 0, 1): 3})
    assert phi_v_report(J)["gradPhiSq"] == 13


def _fd_laplacian(f, x, h=1e-4):
    lap = 0.0
    for j in range(len(x)):
        e = np.zeros(len(x))
        e[j] = h
        lap += (f(x + e) - 2 * f(x) + f(x - e)) / h**2
    return lap


@pytest.mark.parametrize("n", [3, 4, 5])
def test_laplacian_against_finite_differences(n):
    # phi = x_n (distance to the boundary) is 1 - |x| on the unit ball
    J = build_gauge_jets(EuclideanBall(1), n, 3)
    J.phi = J.phi + type(J.phi).var(n, n - 1, 3)
    rep = phi_v_report(J, need_normal_group=False)
    x0 = np.zeros(n)
    x0[-1] = 1.0
    fd = _fd_laplacian(lambda x: 1.0 - np.linalg.norm(x), x0)
    lap = rep["laplacePhi"]
    lap = lap.constant_term() if isinstance(lap, AtomPoly) else lap
    assert float(lap) == pytest.approx(fd, abs=1e-5)
    assert lap == -(n - 1)
    assert rep["coordLaplacePhi"] == 0


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_generic_gauge_identities(n):
    J = build_gauge_jets(RandomGauge(), n, 3)
    assert lemma21_check(J)
    assert gauss_check(curvature_report(J))
    assert riemann_symmetry_check(riemann_values(J))


def test_nabla_ricci_is_linear_in_third_normal_jets():
    p = nabla_ric_nn(build_gauge_jets(RandomGauge(), 4, 3))
    kinds = {a.kind for a in p.atoms()}
    assert Atom.third_normal(1, 1).kind in kinds
    for mono, _ in p.items():
        assert sum(1 for a in mono if a.kind == Atom.third_normal(1, 1).kind) <= 1


@pytest.mark.parametrize("n", [3, 4, 6])
def test_space_form_relations(n):
    J = build_gauge_jets(SpaceFormBall(), n, 3)
    res = space_form_check(J)
    assert res and all(res.values())
    assert not nabla_ric_nn(J)
