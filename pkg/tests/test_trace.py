import math
import warnings

import pytest
from gmpy2 import mpq

from dtnheat.exact_algebra import Atom, AtomPoly
from dtnheat.geometry import curvature_report
from dtnheat.jets import Explicit, RandomGauge, build_gauge_jets, instantiate, random_assignment
from dtnheat.reference import ref_eval
from dtnheat.trace import (
    BoundaryOfValidity,
    DivergentMoment,
    InvalidPower,
    contour_weight,
    heat_coefficients,
    moment,
    phi_v_split,
)


def test_contour_weights():
    assert [contour_weight(q) for q in (1, 3, 4)] == [1, mpq(1, 2), mpq(1, 6)]
    with pytest.raises(InvalidPower):
        contour_weight(0)


def test_moments():
    assert moment(4, 0, (0, 0, 0)) == 2
    assert moment(4, -2, (2, 0, 0)) == mpq(2, 3)
    assert moment(4, -4, (4, 0, 0)) == mpq(2, 5)
    assert moment(4, -4, (2, 2, 0)) == mpq(2, 15)
    assert moment(4, 0, (1, 0, 0)) == 0
    assert moment(4, -3, (2, 1, 0)) == 0


def test_divergent_moment():
    with pytest.raises(DivergentMoment):
        moment(3, -2, (0, 0))


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_a0_is_gamma(n):
    J = build_gauge_jets(RandomGauge(), n, 1)
    (res,) = heat_coefficients(J, 0)
    assert res.ahat == math.factorial(n - 2)


def test_a1_in_three_dimensions():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryOfValidity)
        res = heat_coefficients(build_gauge_jets(RandomGauge(), 3, 1), 1)[1]
    k1, k2 = AtomPoly.atom(Atom.kappa(1)), AtomPoly.atom(Atom.kappa(2))
    assert res.ahat == (k1 + k2) / 4 + AtomPoly.atom(Atom.phi(3)) / 2
    assert res.prefactor == "omega_1 / (2 pi)^2"


@pytest.mark.parametrize("n", [3, 4, 5])
def test_phi_v_parts(n):
    J = build_gauge_jets(RandomGauge(), n, 2)
    split1 = phi_v_split(J, n, 1)
    assert split1["phiV"].ahat == AtomPoly.atom(Atom.phi(n)) * mpq(math.factorial(n - 2), 2)
    J = instantiate(J, random_assignment(J.atoms, n))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryOfValidity)
        split2 = phi_v_split(J, n, 2)
    assert split2["phiV"].ahat == ref_eval("PhiV2", curvature_report(J), n)


def test_no_phi_no_phi_v_part():
    J = build_gauge_jets(RandomGauge(phi=False, potential=False), 4, 2)
    assert not phi_v_split(J, 4, 2)["phiV"].ahat


def test_last_coefficient_is_flagged():
    J = build_gauge_jets(RandomGauge(), 3, 2)
    with pytest.warns(BoundaryOfValidity):
        res = heat_coefficients(J, 2)
    assert res[2].to_json()["n"] == 3
    with pytest.raises(DivergentMoment):
        heat_coefficients(build_gauge_jets(RandomGauge(), 3, 3), 3)


def test_coefficients_are_real_and_flat_space_is_trivial():
    J = build_gauge_jets(Explicit(), 5, 3)
    res = heat_coefficients(J, 3)
    assert [r.ahat for r in res] == [6, 0, 0, 0]
