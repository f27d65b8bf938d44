import pytest
from gmpy2 import mpq

from dtnheat.exact_algebra import Atom, AtomPoly
from dtnheat.jets import DimensionMismatch, Jet, RandomGauge, build_gauge_jets
from dtnheat.symbols import (
    DerivativeCache,
    Symbol,
    SymbolContext,
    homogeneous_part,
    product_expansion,
    sym_add,
    sym_dx,
    sym_dxi,
    sym_mul,
    sym_scale,
)

n = 4
J = build_gauge_jets(RandomGauge(), n, 2)
ctx = SymbolContext(J)
w1 = Symbol.w1(n)
s = Symbol.s_minus1(n)


def at_x0(sym):
    """Terms of ``sym`` with their jets evaluated at the boundary point."""
    return {k: v for k, v in ((k, j.value()) for k, j in sym.items()) if v}


def test_addition_and_scaling():
    assert sym_add(w1, Symbol(n)) == w1
    assert sym_add(w1, w1) == sym_scale(w1, 2)
    assert not sym_scale(w1, 0)
    with pytest.raises(DimensionMismatch):
        sym_add(w1, Symbol.w1(n + 1))


def test_pointwise_products():
    assert sym_mul(w1, w1) == Symbol.monomial(n, 1, p=2)
    assert sym_mul(s, s) == Symbol.monomial(n, 1, q=2)
    a = Symbol.monomial(n, Jet.var(n, 0, 2), xi=[1, 0, 0], p=-1)
    b = Symbol.monomial(n, Jet.var(n, 1, 2), xi=[0, 1, 0])
    want = Symbol.monomial(n, Jet.var(n, 0, 2) * Jet.var(n, 1, 2), xi=[1, 1, 0], p=-1)
    assert sym_mul(a, b) == want


def test_normal_derivative_of_w1():
    got = at_x0(sym_dx(w1, n - 1, ctx))
    assert len(got) == 3
    for a in range(3):
        mu = tuple(2 if b == a else 0 for b in range(3))
        assert got[(mu, -1, 0, 0)] == AtomPoly.atom(Atom.kappa(a + 1))


def test_tangential_derivative_of_w1_vanishes_at_x0():
    for a in range(3):
        assert not at_x0(sym_dx(w1, a, ctx))


def test_normal_derivative_of_resolvent():
    got = at_x0(sym_dx(s, n - 1, ctx))
    for a in range(3):
        mu = tuple(2 if b == a else 0 for b in range(3))
        assert got[(mu, -1, 2, 0)] == -AtomPoly.atom(Atom.kappa(a + 1))


def test_xi_derivatives():
    for a in range(3):
        mu = tuple(1 if b == a else 0 for b in range(3))
        assert at_x0(sym_dxi(w1, a, ctx)) == {(mu, -1, 0, 0): 1}
        assert at_x0(sym_dxi(s, a, ctx)) == {(mu, -1, 2, 0): -1}
        xi_b = Symbol.monomial(n, 1, xi=[1, 0, 0])
        assert at_x0(sym_dxi(xi_b, a, ctx)) == ({((0, 0, 0), 0, 0, 0): 1} if a == 0 else {})


def test_derivatives_commute():
    f = sym_mul(Symbol.monomial(n, J.phi, xi=[1, 1, 0], p=-2), s)
    for j in range(n):
        for a in range(3):
            lhs = sym_dx(sym_dxi(f, a, ctx), j, ctx)
            rhs = sym_dxi(sym_dx(f, j, ctx), a, ctx)
            order = min(lhs.min_order(), rhs.min_order())
            assert not (lhs - rhs).truncate(order)


def test_degree_bookkeeping():
    f = sym_add(w1, Symbol.monomial(n, 1, xi=[1, 0, 0], p=-1, q=1))
    assert f.degrees() == {1, -1}
    assert homogeneous_part(f, 1) == w1
    assert not homogeneous_part(w1, 0)
    assert homogeneous_part(s, -1) == s
    assert sym_dxi(w1, 0, ctx).is_homogeneous(0)
    assert sym_dx(w1, n - 1, ctx).is_homogeneous(1)


def test_product_expansion_selection():
    cache = DerivativeCache(ctx, {1: w1})
    # |J| = j + k + m: m = -2 keeps only J = 0, the pointwise square
    assert at_x0(product_expansion(cache, cache, -2, [1], [1])) == {((0, 0, 0), 2, 0, 0): 1}
    # |J| = 1 pairs d_xi w1 with tangential derivatives of w1, zero at x0
    first = product_expansion(cache, cache, -1, [1], [1])
    assert first.is_homogeneous(1)
    assert not at_x0(first)
