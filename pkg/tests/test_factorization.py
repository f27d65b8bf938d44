import pytest

from dtnheat.exact_algebra import Atom, AtomPoly
from dtnheat.factorization import build_b_c, factorization_residual, factorize, residual_vanishes, w_top
from dtnheat.geometry import curvature_report
from gmpy2 import mpq

from dtnheat.jets import EuclideanBall, Explicit, RandomGauge, build_gauge_jets, instantiate, random_assignment
from dtnheat.parametrix import dtn_symbol, explicit_s, parametrix, s_init
from dtnheat.symbols import Symbol, sym_dx, sym_mul, sym_scale

n = 4
GAUGE = build_gauge_jets(RandomGauge(), n, 2)


def at_x0(sym):
    return {k: v for k, v in ((k, j.value()) for k, j in sym.items()) if v}


def even_part(terms):
    return {k: v for k, v in terms.items() if not any(e % 2 for e in k[0])}


def phi_v_difference(part_of):
    return at_x0(part_of(GAUGE) - part_of(GAUGE.zero_phi_v()))


def test_b_and_c_at_x0():
    bc = build_b_c(GAUGE)
    rep = curvature_report(GAUGE)
    assert bc["b"].value() == -(rep.H + AtomPoly.atom(Atom.phi(n)))
    c1 = at_x0(bc["c1"])
    for a in range(n - 1):
        mu = tuple(1 if b == a else 0 for b in range(n - 1))
        assert c1[(mu, 0, 0, 1)] == -AtomPoly.atom(Atom.phi(a + 1))
    assert len(c1) == n - 1
    assert bc["c0"] == Symbol.monomial(n, GAUGE.V)


def test_flat_half_space():
    J = build_gauge_jets(Explicit(), n, 3)
    bc = build_b_c(J)
    assert not bc["b"] and not bc["c1"] and not bc["c0"]
    c2 = at_x0(bc["c2"])
    assert c2 == {(tuple(2 if b == a else 0 for b in range(n - 1)), 0, 0, 0): -1 for a in range(n - 1)}
    fact = factorize(J, 3)
    assert fact.parts[1] == Symbol.w1(n)
    for d in (0, -1, -2):
        assert not fact.parts[d]
    par = parametrix(fact, 3)
    assert par.parts[-1] == s_init(n)
    for d in (-2, -3, -4):
        assert not par.parts[d]


def test_top_part():
    w = w_top(GAUGE)
    assert w == Symbol.w1(n)
    assert w.is_homogeneous(1)


def test_w0_formula_at_x0():
    # w0 = (b + w1^-1 dw1/dx_n - w1^-1 c1) / 2 at the boundary point
    bc = build_b_c(GAUGE)
    inv = Symbol.monomial(n, 1, p=-1)
    rhs = Symbol.monomial(n, bc["b"]) + sym_mul(inv, sym_dx(Symbol.w1(n), n - 1, bc["ctx"])) - sym_mul(inv, bc["c1"])
    assert at_x0(factorize(GAUGE, 1).parts[0]) == at_x0(sym_scale(rhs, mpq(1, 2)))


def test_phi_v_parts():
    w0 = phi_v_difference(lambda J: factorize(J, 1).parts[0])
    assert even_part(w0) == {((0, 0, 0), 0, 0, 0): -AtomPoly.atom(Atom.phi(n)) / 2}
    s2 = phi_v_difference(lambda J: parametrix(factorize(J, 1), 1).parts[-2])
    assert even_part(s2) == {((0, 0, 0), 0, 2, 0): AtomPoly.atom(Atom.phi(n)) / 2}


def test_s2_is_minus_s1_squared_w0():
    fact = factorize(GAUGE, 1)
    par = parametrix(fact, 1)
    want = sym_mul(Symbol.monomial(n, -1, q=2), dtn_symbol(fact)[0])
    assert at_x0(par.parts[-2]) == at_x0(want)


@pytest.mark.parametrize("scenario", [RandomGauge(), EuclideanBall(1, phi=True, potential=True)], ids=["gauge", "ball"])
@pytest.mark.parametrize("dim", [3, 4])
def test_residual_vanishes(scenario, dim):
    J = build_gauge_jets(scenario, dim, 3)
    J = instantiate(J, random_assignment(J.atoms, 1))
    fact = factorize(J, 3)
    res = factorization_residual(fact)
    assert sorted(res) == [-1, 0, 1, 2]
    assert residual_vanishes(fact)


def test_dropping_a_part_breaks_the_residual():
    J = instantiate(GAUGE, random_assignment(GAUGE.atoms, 2))
    fact = factorize(J, 2)
    fact.parts[-1] = Symbol(n)
    res = factorization_residual(fact)
    assert res[0]
    assert not res[2] and not res[1]


def test_parts_are_homogeneous():
    fact = factorize(GAUGE, 2)
    for d, part in fact.parts.items():
        assert part.is_homogeneous(d)
    par = parametrix(fact, 2)
    for d, part in par.parts.items():
        assert part.is_homogeneous(d)
        assert all(q >= 1 for (_, _, q, _), _ in part.items())


@pytest.mark.parametrize("level", [2, 3])
def test_written_out_levels_match_recursion(level):
    J = instantiate(GAUGE, random_assignment(GAUGE.atoms, 0))
    par = parametrix(factorize(J, 2), level - 1, trim=False)
    mine, written = par.parts[-level], explicit_s(par, level)
    order = min(mine.min_order(), written.min_order())
    assert not (mine - written).truncate(order)


def test_drift_readings_agree_through_first_order():
    J = instantiate(GAUGE, random_assignment(GAUGE.atoms, 5))
    flat = factorize(J, 1, drift="flat").parts[0]
    cov = factorize(J, 1, drift="covariant").parts[0]
    assert at_x0(flat) == at_x0(cov)
