import random

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from dtnheat.exact_algebra import (
    Atom,
    AtomPoly,
    MissingAtom,
    parse_rational,
    poly_equal_probabilistic,
    poly_eval,
)
from dtnheat.jets import boundary_riemann, parse_poly

x = AtomPoly.atom(Atom.aux(1))
y = AtomPoly.atom(Atom.aux(2))
k1 = AtomPoly.atom(Atom.kappa(1))


def test_difference_of_squares():
    assert (x + y) * (x - y) == x * x - y * y


def test_additive_identity():
    p = k1 * mpq(2, 3) + 1
    assert p + 0 == p
    assert p + AtomPoly() == p


def test_rational_coefficients_multiply():
    assert (k1 * mpq(1, 2)) * (k1 * mpq(1, 3)) == (k1 * k1) * mpq(1, 6)


def test_evaluation():
    assert (k1 * k1).eval({Atom.kappa(1): mpq(2, 3)}) == mpq(4, 9)
    assert AtomPoly.const(5).eval({}) == 5
    # H phi_n with kappa_1 = 1, kappa_2 = 2 (n = 3) and phi_3 = -1
    H = k1 + AtomPoly.atom(Atom.kappa(2))
    p = H * AtomPoly.atom(Atom.phi(3))
    assert poly_eval(p, {Atom.kappa(1): 1, Atom.kappa(2): 2, Atom.phi(3): -1}) == -3


def test_missing_atom():
    with pytest.raises(MissingAtom) as err:
        (k1 + x).eval({Atom.kappa(1): 1})
    assert err.value.atom == Atom.aux(1)


def test_cancellation_leaves_zero():
    p = k1 * x - x * k1
    assert not p
    assert p.is_zero()


def test_probabilistic_equality():
    assert poly_equal_probabilistic((x + y) ** 2, x * x + 2 * x * y + y * y, trials=20)
    assert not poly_equal_probabilistic((x + y) ** 2, x * x + y * y, trials=20)


def test_rational_parsing():
    assert parse_rational("-3/6") == mpq(-1, 2)
    assert parse_rational("7") == 7


def test_symmetric_slots_are_canonical():
    assert Atom.phi(3, 1, 2) == Atom.phi(1, 2, 3)
    assert Atom.metric(2, 1, 3) == Atom.metric(1, 2, 3)


def test_boundary_riemann_canonical_form():
    assert boundary_riemann(0, 1, 0, 1) == -boundary_riemann(1, 0, 0, 1)
    assert boundary_riemann(2, 3, 0, 1) == boundary_riemann(0, 1, 2, 3)
    assert not boundary_riemann(0, 0, 1, 2)
    # first Bianchi identity
    b = boundary_riemann(0, 1, 2, 3) + boundary_riemann(0, 2, 3, 1) + boundary_riemann(0, 3, 1, 2)
    assert not b


def test_latex_and_text():
    p = parse_poly("1 - phi[3] + 2/3*kappa[1]^2")
    assert p.to_latex() == r"1 - \phi_{3} + \frac{2}{3} \kappa_{1}^{2}"
    assert parse_poly(p.to_str()) == p


atoms = [AtomPoly.atom(Atom.aux(i)) for i in range(1, 4)]


@st.composite
def polys(draw):
    p = AtomPoly()
    for _ in range(draw(st.integers(0, 4))):
        c = mpq(draw(st.integers(-5, 5)), draw(st.integers(1, 4)))
        mono = AtomPoly.const(c)
        for _ in range(draw(st.integers(0, 3))):
            mono = mono * atoms[draw(st.integers(0, 2))]
        p = p + mono
    return p


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == AtomPoly()


@settings(max_examples=40, deadline=None)
@given(polys(), polys(), st.integers(0, 1000))
def test_evaluation_is_a_homomorphism(a, b, seed):
    rng = random.Random(seed)
    assign = {Atom.aux(i): mpq(rng.randint(-9, 9), rng.randint(1, 5)) for i in range(1, 4)}
    assert (a * b).eval(assign) == a.eval(assign) * b.eval(assign)
    assert (a + b).eval(assign) == a.eval(assign) + b.eval(assign)
