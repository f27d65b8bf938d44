import pytest
from gmpy2 import mpq

from dtnheat.exact_algebra import Atom, AtomPoly
from dtnheat.jets import (
    EuclideanBall,
    InvalidRadius,
    Jet,
    RandomGauge,
    SpaceFormBall,
    UnsupportedOrder,
    build_gauge_jets,
    dump_gauge_jets,
    instantiate,
    jet_invert_metric,
    load_gauge_jets,
    random_assignment,
    restrict_to_boundary,
)


def test_product_truncates_at_order():
    n = 3
    a = Jet.const(n, 1, 2) + Jet.var(n, 2, 2)
    b = Jet.const(n, 1, 2) - Jet.var(n, 2, 2)
    assert a * b == Jet.from_exponents(n, 2, {(0, 0, 0): 1, (0, 0, 2): -1})


def test_square_and_derivative():
    n = 3
    s = Jet.var(n, 0, 3) + Jet.var(n, 1, 3)
    sq = s * s
    assert sq.coefficient((1, 1, 0)) == 2
    d = sq.deriv(0)
    assert d.order == 2
    assert d == Jet.from_exponents(n, 2, {(1, 0, 0): 2, (0, 1, 0): 2})


def test_restrict_to_boundary_drops_normal_terms():
    n = 3
    a = Jet.from_exponents(n, 2, {(0, 0, 0): 1, (1, 0, 0): 3, (0, 0, 1): 5, (1, 0, 1): 7})
    assert restrict_to_boundary(a) == Jet.from_exponents(n, 2, {(0, 0, 0): 1, (1, 0, 0): 3})


def test_inverse_metric_is_inverse():
    J = build_gauge_jets(RandomGauge(), 4, 2)
    g, gi = J.g, J.ginv
    for j in range(4):
        for k in range(4):
            acc = sum((g[j][l] * gi[l][k] for l in range(4)), Jet.zero(4, 2))
            assert acc == Jet.const(4, 1 if j == k else 0, 2)
    assert jet_invert_metric(g)[0][1] == gi[0][1]


def test_first_normal_derivatives_of_the_metric():
    J = build_gauge_jets(RandomGauge(), 4, 2)
    for a in range(3):
        kap = AtomPoly.atom(Atom.kappa(a + 1))
        assert J.g[a][a].coefficient((0, 0, 0, 1)) == -2 * kap
        assert J.ginv[a][a].coefficient((0, 0, 0, 1)) == 2 * kap


def test_normal_second_derivatives_sum():
    n = 5
    J = build_gauge_jets(RandomGauge(), n, 2)
    e = (0,) * (n - 1) + (2,)
    total = sum((J.g[a][a].taylor_derivative(e) + J.ginv[a][a].taylor_derivative(e) for a in range(n - 1)), AtomPoly())
    want = sum((AtomPoly.atom(Atom.kappa(a + 1)) ** 2 for a in range(n - 1)), AtomPoly()) * 8
    assert total == want


def test_gauge_normal_block():
    J = build_gauge_jets(RandomGauge(), 4, 3)
    assert J.g[3][3] == Jet.const(4, 1, 3)
    for a in range(3):
        assert not J.g[a][3]
        assert not J.ginv[a][3]


def test_unit_ball_n3():
    J = build_gauge_jets(EuclideanBall(1), 3, 2)
    for a in range(2):
        # S_ab = g_{ab,nn} = 2 delta_ab, kappa = 1
        assert J.g[a][a].taylor_derivative((0, 0, 2)) == 2
        assert J.g[a][a].coefficient((0, 0, 1)) == -2
    assert not J.g[0][1].coefficient((0, 0, 2))


def test_invalid_inputs():
    with pytest.raises(InvalidRadius):
        EuclideanBall(0)
    with pytest.raises(InvalidRadius):
        EuclideanBall(-2)
    with pytest.raises(UnsupportedOrder):
        build_gauge_jets(RandomGauge(), 4, 5)


def test_dump_load_round_trip():
    for sc in (RandomGauge(), SpaceFormBall(phi=True, potential=True)):
        J = build_gauge_jets(sc, 4, 2)
        text = dump_gauge_jets(J)
        K = load_gauge_jets(text)
        assert dump_gauge_jets(K) == text
        assert K.g[0][0] == J.g[0][0] and K.phi == J.phi


def test_random_assignment_deterministic_and_nonzero():
    J = build_gauge_jets(RandomGauge(), 4, 2)
    a = random_assignment(J.atoms, 3)
    assert a == random_assignment(J.atoms, 3)
    assert a != random_assignment(J.atoms, 4)
    assert all(v != 0 for v in a.values())
    assert set(a) == set(J.atoms)


def test_instantiate_removes_atoms():
    J = build_gauge_jets(RandomGauge(), 3, 2)
    I = instantiate(J, random_assignment(J.atoms, 0))
    for _, c in I.g[0][0].items():
        assert not isinstance(c, AtomPoly)
    assert isinstance(I.phi.value(), type(mpq(0)))
