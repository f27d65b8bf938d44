"""Truncated Taylor jets at the base boundary point and gauge scenarios.

Coordinates are 0-based in code: tangential ``0..n-2`` and normal ``n-1``
(the inward geodesic distance).  Atom labels are 1-based, so the normal
direction prints as ``n``.

A multi-index is packed into one int, ``sum(e_i * 8**i)``.  Exponents never
exceed the truncation order (at most 7 here), so adding packed keys adds
multi-indices without carries.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from gmpy2 import mpq

from .exact_algebra import (
    Atom,
    AtomKind,
    AtomPoly,
    Rational,
    format_rational,
    to_rational,
)

__all__ = [
    "EXACT",
    "Jet",
    "GaugeJets",
    "RandomGauge",
    "EuclideanBall",
    "SpaceFormBall",
    "Explicit",
    "build_gauge_jets",
    "jet_mul",
    "jet_mul_into",
    "jet_derivative",
    "jet_invert_metric",
    "restrict_to_boundary",
    "boundary_riemann",
    "instantiate",
    "random_assignment",
    "parse_atom",
    "parse_poly",
    "UnsupportedOrder",
    "InvalidRadius",
    "SingularLeadingCoefficient",
    "DimensionMismatch",
    "OrderTooLow",
    "dump_gauge_jets",
    "load_gauge_jets",
]

# Order of a jet known exactly (a constant); never lowers a product's order.
EXACT = 10**6

_BITS = 3
_MASK = 7


class UnsupportedOrder(ValueError):
    pass


class InvalidRadius(ValueError):
    pass


class SingularLeadingCoefficient(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class OrderTooLow(ValueError):
    pass


def pack(exps: Sequence[int]) -> int:
    key = 0
    for i, e in enumerate(exps):
        if e > _MASK:
            raise ValueError("exponent too large for packed multi-index")
        key |= e << (_BITS * i)
    return key


def unpack(key: int, n: int) -> tuple:
    return tuple((key >> (_BITS * i)) & _MASK for i in range(n))


_DEG: dict[int, int] = {0: 0}


def key_degree(key: int) -> int:
    d = _DEG.get(key)
    if d is None:
        d, k = 0, key
        while k:
            d += k & _MASK
            k >>= _BITS
        _DEG[key] = d
    return d


def _is_zero(c) -> bool:
    return not c


class Jet:
    """Truncated Taylor polynomial ``sum c_mu x^mu`` with ``|mu| <= order``.

    Coefficients are ring elements (``AtomPoly`` or ``mpq``); ``EXACT`` order
    marks constants that are known to all orders.
    """

    __slots__ = ("n", "order", "c", "_graded")

    def __init__(self, n: int, order: int, coeffs: Mapping[int, object] | None = None, *, _trusted=False):
        self.n = n
        self.order = order
        self._graded = None
        if coeffs is None:
            self.c = {}
        elif _trusted:
            self.c = coeffs
        else:
            self.c = {k: v for k, v in coeffs.items() if v and key_degree(k) <= order}

    # construction -----------------------------------------------------

    @classmethod
    def zero(cls, n: int, order: int = EXACT) -> "Jet":
        return cls(n, order)

    @classmethod
    def const(cls, n: int, value, order: int = EXACT) -> "Jet":
        if isinstance(value, int):
            value = mpq(value)
        return cls(n, order, {0: value} if value else {}, _trusted=True)

    @classmethod
    def var(cls, n: int, j: int, order: int) -> "Jet":
        return cls(n, order, {1 << (_BITS * j): mpq(1)} if order >= 1 else {}, _trusted=True)

    @classmethod
    def from_exponents(cls, n: int, order: int, coeffs: Mapping[tuple, object]) -> "Jet":
        return cls(n, order, {pack(e): (mpq(v) if isinstance(v, int) else v) for e, v in coeffs.items()})

    # inspection -------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.c)

    def value(self):
        """Coefficient of x^0, i.e. the value at the base point."""
        return self.c.get(0, mpq(0))

    def coefficient(self, exps: Sequence[int]):
        return self.c.get(pack(exps), mpq(0))

    def taylor_derivative(self, exps: Sequence[int]):
        """The partial derivative ``d^mu f(x0)`` (coefficient times mu!)."""
        f = 1
        for e in exps:
            f *= math.factorial(e)
        return self.coefficient(exps) * f

    def items(self):
        for k in sorted(self.c):
            yield unpack(k, self.n), self.c[k]

    def __repr__(self) -> str:
        body = ", ".join(f"{e}: {v}" for e, v in self.items())
        o = "exact" if self.order >= EXACT else self.order
        return f"Jet(n={self.n}, order={o}, {{{body}}})"

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return self.n == other.n and self.c == other.c

    __hash__ = None

    # arithmetic -------------------------------------------------------

    def _check(self, other: "Jet"):
        if self.n != other.n:
            raise DimensionMismatch(f"{self.n} != {other.n}")

    def __add__(self, other):
        if not isinstance(other, Jet):
            return self + Jet.const(self.n, other)
        self._check(other)
        order = min(self.order, other.order)
        if not other.c:
            return self if order == self.order else self.truncate(order)
        if not self.c:
            return other if order == other.order else other.truncate(order)
        out = {k: v for k, v in self.c.items() if key_degree(k) <= order} if order < self.order else dict(self.c)
        for k, v in other.c.items():
            if order < other.order and key_degree(k) > order:
                continue
            w = out.get(k)
            if w is None:
                out[k] = v
            else:
                w = w + v
                if w:
                    out[k] = w
                else:
                    del out[k]
        return Jet(self.n, order, out, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.n, self.order, {k: -v for k, v in self.c.items()}, _trusted=True)

    def __sub__(self, other):
        if not isinstance(other, Jet):
            other = Jet.const(self.n, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "Jet":
        if isinstance(s, int):
            s = mpq(s)
        if not s:
            return Jet(self.n, self.order)
        out = {}
        for k, v in self.c.items():
            w = v * s
            if w:
                out[k] = w
        return Jet(self.n, self.order, out, _trusted=True)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        self._check(other)
        order = min(self.order, other.order)
        a, b = self.c, other.c
        if not a or not b:
            return Jet(self.n, order)
        if len(b) == 1 and 0 in b:
            r = self.scale(b[0])
            if order < self.order:
                r = r.truncate(order)
            r.order = order
            return r
        if len(a) == 1 and 0 in a:
            r = other.scale(a[0])
            if order < other.order:
                r = r.truncate(order)
            r.order = order
            return r
        out: dict = {}
        bl = [(kb, key_degree(kb), vb) for kb, vb in b.items()]
        for ka, va in a.items():
            da = key_degree(ka)
            if da > order:
                continue
            for kb, db, vb in bl:
                if da + db > order:
                    continue
                k = ka + kb
                w = out.get(k)
                out[k] = va * vb if w is None else w + va * vb
        return Jet(self.n, order, {k: v for k, v in out.items() if v}, _trusted=True)

    __rmul__ = __mul__

    def graded_items(self) -> list:
        """(key, degree, coefficient) triples sorted by degree (cached)."""
        g = self._graded
        if g is None:
            g = self._graded = sorted(((k, key_degree(k), v) for k, v in self.c.items()), key=lambda t: t[1])
        return g

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.n, order, {k: v for k, v in self.c.items() if key_degree(k) <= order}, _trusted=True)

    def deriv(self, j: int) -> "Jet":
        """Formal partial derivative in coordinate ``j``; order drops by one."""
        if self.order <= 0:
            raise OrderTooLow(f"cannot differentiate a jet of order {self.order}")
        shift = _BITS * j
        step = 1 << shift
        out = {}
        for k, v in self.c.items():
            e = (k >> shift) & _MASK
            if e:
                out[k - step] = v * e if e > 1 else v
        new_order = self.order if self.order >= EXACT else self.order - 1
        return Jet(self.n, new_order, out, _trusted=True)

    def restrict(self, j: int) -> "Jet":
        """Set coordinate ``j`` to zero."""
        mask = _MASK << (_BITS * j)
        return Jet(self.n, self.order, {k: v for k, v in self.c.items() if not k & mask}, _trusted=True)

    def depends_on(self, j: int) -> bool:
        mask = _MASK << (_BITS * j)
        return any(k & mask for k in self.c)

    def map_coefficients(self, fn: Callable) -> "Jet":
        out = {}
        for k, v in self.c.items():
            w = fn(v)
            if w:
                out[k] = w
        return Jet(self.n, self.order, out, _trusted=True)


def jet_mul_into(out: dict, a: Jet, b: Jet, order: int, coeff=None) -> None:
    """Accumulate the coefficients of coeff * a * b up to ``order`` into
    ``out`` (key -> coefficient).  Zero sums are left in place."""
    bl = b.graded_items()
    for ka, da, va in a.graded_items():
        if da > order:
            break
        if coeff is not None:
            va = va * coeff
        room = order - da
        for kb, db, vb in bl:
            if db > room:
                break
            k = ka + kb
            w = out.get(k)
            out[k] = va * vb if w is None else w + va * vb


def jet_mul(a: Jet, b: Jet) -> Jet:
    return a * b


def jet_derivative(a: Jet, j: int) -> Jet:
    return a.deriv(j)


def restrict_to_boundary(a: Jet) -> Jet:
    return a.restrict(a.n - 1)


def jet_invert_metric(g: Sequence[Sequence[Jet]]) -> list[list[Jet]]:
    """Inverse of a metric jet matrix with ``g(x0) = I``.

    Writes ``g = I + E`` with ``E(x0) = 0`` and sums the Neumann series
    ``I - E + E^2 - ...``; ``E^k`` starts at degree k so the series is finite.
    """
    n = len(g)
    order = min(g[j][k].order for j in range(n) for k in range(n))
    E = []
    for j in range(n):
        row = []
        for k in range(n):
            v = g[j][k].value()
            if v != (1 if j == k else 0):
                raise SingularLeadingCoefficient("metric must equal the identity at the base point")
            row.append(g[j][k] - (1 if j == k else 0))
        E.append(row)
    inv = [[Jet.const(g[0][0].n, 1 if j == k else 0, order) for k in range(n)] for j in range(n)]
    power = [[Jet.const(g[0][0].n, 1 if j == k else 0, order) for k in range(n)] for j in range(n)]
    top = order if order < EXACT else 8
    for p in range(1, top + 1):
        power = _matmul(power, E)
        if not any(power[j][k] for j in range(n) for k in range(n)):
            break
        sign = -1 if p % 2 else 1
        inv = [[inv[j][k] + power[j][k].scale(sign) for k in range(n)] for j in range(n)]
    return inv


def _matmul(a, b):
    n = len(a)
    out = []
    for j in range(n):
        row = []
        for k in range(n):
            acc = Jet.zero(a[0][0].n, min(a[j][0].order, b[0][k].order))
            for l in range(n):
                if a[j][l] and b[l][k]:
                    acc = acc + a[j][l] * b[l][k]
                else:
                    acc = acc.truncate(min(a[j][l].order, b[l][k].order))
            row.append(acc)
        out.append(row)
    return out


# boundary Riemann atoms ---------------------------------------------------


def boundary_riemann(a: int, b: int, c: int, d: int) -> AtomPoly:
    """Free-atom expression of the boundary Riemann component R_abcd.

    Indices are 0-based tangential.  Uses the pair antisymmetries, pair
    exchange and the first Bianchi identity: for distinct i<j<k<l the free
    components are R_ijkl and R_ikjl, with R_iljk = R_ikjl - R_ijkl.
    """
    if a == b or c == d:
        return AtomPoly()
    sign = 1
    if a > b:
        a, b, sign = b, a, -sign
    if c > d:
        c, d, sign = d, c, -sign
    if (a, b) > (c, d):
        a, b, c, d = c, d, a, b
    labels = (a + 1, b + 1, c + 1, d + 1)
    if len({a, b, c, d}) == 4:
        i, j, k, l = sorted((a, b, c, d))
        L = lambda *t: Atom(AtomKind.BoundaryRiemann, tuple(x + 1 for x in t))
        if (a, b, c, d) == (i, j, k, l):
            return AtomPoly.atom(L(i, j, k, l), sign)
        if (a, b, c, d) == (i, k, j, l):
            return AtomPoly.atom(L(i, k, j, l), sign)
        # (i, l, j, k)
        return AtomPoly.atom(L(i, k, j, l), sign) - AtomPoly.atom(L(i, j, k, l), sign)
    return AtomPoly.atom(Atom(AtomKind.BoundaryRiemann, labels), sign)


# scenarios ---------------------------------------------------------------


@dataclass(frozen=True)
class RandomGauge:
    """Generic boundary-normal gauge with free symbolic atoms.

    ``seed`` only matters when the atoms are instantiated with random values.
    """

    seed: int = 0
    phi: bool = True
    potential: bool = True


@dataclass(frozen=True)
class SpaceFormBall:
    """Geodesic ball in the space form of curvature K0 with boundary
    principal curvatures all equal to ``kappa``.

    Either argument may be ``None`` to keep it as a symbolic atom.
    """

    K0: object = None
    kappa: object = None
    phi: bool = False
    potential: bool = False


def EuclideanBall(r0=1, phi: bool = False, potential: bool = False) -> SpaceFormBall:
    r0 = to_rational(r0)
    if r0 <= 0:
        raise InvalidRadius(f"radius must be positive, got {r0}")
    return SpaceFormBall(K0=mpq(0), kappa=1 / r0, phi=phi, potential=potential)


@dataclass(frozen=True)
class Explicit:
    """User-supplied jets.

    ``metric`` maps (alpha, beta) tangential pairs (0-based, alpha <= beta) to
    a mapping exponent-tuple -> coefficient of the Taylor polynomial of
    g_{alpha beta}; ``phi`` and ``V`` are mappings exponent-tuple ->
    coefficient.  The normal block is forced to the gauge.
    """

    metric: Mapping = field(default_factory=dict)
    phi: Mapping = field(default_factory=dict)
    V: Mapping = field(default_factory=dict)


@dataclass
class GaugeJets:
    n: int
    order: int
    g: list
    ginv: list
    phi: Jet
    V: Jet
    atoms: list = field(default_factory=list)
    scenario: object = None
    K0: object = None

    @property
    def m(self) -> int:
        return self.n - 1

    def zero_phi_v(self) -> "GaugeJets":
        return GaugeJets(
            self.n,
            self.order,
            self.g,
            self.ginv,
            Jet.zero(self.n, self.phi.order),
            Jet.zero(self.n, self.V.order),
            [a for a in self.atoms if a.kind not in (AtomKind.PhiJet, AtomKind.VJet)],
            self.scenario,
            self.K0,
        )

    def map_coefficients(self, fn: Callable) -> "GaugeJets":
        n = self.n
        g = [[self.g[j][k].map_coefficients(fn) for k in range(n)] for j in range(n)]
        gi = [[self.ginv[j][k].map_coefficients(fn) for k in range(n)] for j in range(n)]
        K0 = None if self.K0 is None else fn(self.K0)
        return GaugeJets(n, self.order, g, gi, self.phi.map_coefficients(fn), self.V.map_coefficients(fn), self.atoms, self.scenario, K0)


def _multi_indices(n: int, degree: int):
    """Exponent tuples of total degree ``degree`` in n variables."""
    for combo in itertools.combinations_with_replacement(range(n), degree):
        e = [0] * n
        for i in combo:
            e[i] += 1
        yield tuple(e)


def _factorial_of(e: Sequence[int]) -> int:
    f = 1
    for x in e:
        f *= math.factorial(x)
    return f


def _deriv_labels(e: Sequence[int]) -> tuple:
    return tuple(i + 1 for i, x in enumerate(e) for _ in range(x))


def _free_function_jet(n: int, order: int, make_atom, start: int = 0) -> tuple[Jet, list]:
    coeffs, atoms = {}, []
    for d in range(start, order + 1):
        for e in _multi_indices(n, d):
            a = make_atom(*_deriv_labels(e))
            atoms.append(a)
            coeffs[pack(e)] = AtomPoly.atom(a, mpq(1, _factorial_of(e)))
    return Jet(n, order, coeffs), atoms


def _gauge_metric_block(n: int, T: int) -> tuple[list, list]:
    """Tangential metric jets of the generic gauge, as a dict table."""
    m = n - 1
    N = n - 1  # normal coordinate index
    atoms: list = []
    table = {}
    seen = set()
    for al in range(m):
        for be in range(al, m):
            c = {}
            if al == be:
                c[0] = AtomPoly.const(1)
                if T >= 1:
                    ka = Atom.kappa(al + 1)
                    if ka not in seen:
                        seen.add(ka)
                        atoms.append(ka)
                    c[pack(_unit(n, N))] = AtomPoly.atom(ka, -2)
            if T >= 2:
                # tangential Hessian: g_{ab,cd} = (R_acbd + R_adbc)/3
                for ga in range(m):
                    for rh in range(ga, m):
                        val = (boundary_riemann(al, ga, be, rh) + boundary_riemann(al, rh, be, ga)).scale(mpq(1, 3))
                        if val:
                            e = [0] * n
                            e[ga] += 1
                            e[rh] += 1
                            c[pack(e)] = val.scale(mpq(1, _factorial_of(e)))
                s = Atom.second_normal(al + 1, be + 1)
                atoms.append(s)
                c[pack(_unit(n, N, 2))] = AtomPoly.atom(s, mpq(1, 2))
            if T >= 3:
                t = Atom.third_normal(al + 1, be + 1)
                atoms.append(t)
                c[pack(_unit(n, N, 3))] = AtomPoly.atom(t, mpq(1, 6))
                # x_n x_c x_d: -2 x_n h_ab(x') with the symmetrized second
                # covariant derivative of h set to zero at the base point
                for ga in range(m):
                    for rh in range(ga, m):
                        val = _hess_h(al, be, ga, rh)
                        if val:
                            e = [0] * n
                            e[ga] += 1
                            e[rh] += 1
                            e[N] += 1
                            c[pack(e)] = val.scale(-1 if ga == rh else -2)
            table[(al, be)] = c
    if T >= 2:
        for al in range(m):
            for be in range(m):
                for ga in range(m):
                    for rh in range(m):
                        for atom_set in (boundary_riemann(al, be, ga, rh).atoms(),):
                            for a in atom_set:
                                if a not in seen:
                                    seen.add(a)
                                    atoms.append(a)
    return table, atoms


def _tangential_hessian(a: int, b: int, c: int, d: int) -> AtomPoly:
    """d_c d_d g_ab at the base point in boundary normal coordinates."""
    return (boundary_riemann(a, c, b, d) + boundary_riemann(a, d, b, c)).scale(mpq(1, 3))


def _dgamma(lam: int, rho: int, al: int, ga: int) -> AtomPoly:
    """d_ga Gamma^lam_{rho al} of the boundary metric at the base point."""
    return (
        _tangential_hessian(lam, al, rho, ga)
        + _tangential_hessian(lam, rho, al, ga)
        - _tangential_hessian(rho, al, lam, ga)
    ).scale(mpq(1, 2))


def _hess_h(al: int, be: int, ga: int, rh: int) -> AtomPoly:
    """d_ga d_rh h_{al be} when Sym(nabla nabla h) vanishes at the base point."""
    ka, kb = AtomPoly.atom(Atom.kappa(al + 1)), AtomPoly.atom(Atom.kappa(be + 1))
    acc = AtomPoly()
    for x, y in ((ga, rh), (rh, ga)):
        acc = acc + _dgamma(be, y, al, x) * kb + _dgamma(al, y, be, x) * ka
    return acc.scale(mpq(1, 2))


def _unit(n: int, j: int, power: int = 1) -> tuple:
    e = [0] * n
    e[j] = power
    return tuple(e)


def _assemble_metric(n: int, T: int, block: Mapping) -> list:
    m = n - 1
    g = [[None] * n for _ in range(n)]
    for al in range(m):
        for be in range(al, m):
            jt = Jet(n, T, block.get((al, be), {}))
            g[al][be] = g[be][al] = jt
    for j in range(n):
        g[j][m] = g[m][j] = Jet.const(n, 1 if j == m else 0, T)
    return g


def _poly_jet(n: int, T: int, poly: Mapping[tuple, object]) -> dict:
    out = {}
    for e, v in poly.items():
        if sum(e) <= T and v:
            out[pack(e)] = v if isinstance(v, AtomPoly) else AtomPoly.const(v)
    return out


def _space_form_block(n: int, T: int, K0, kappa) -> dict:
    """Jets of g_ab = f(x_n)^2 * ghat_ab(x') for the space-form ball.

    f = 1 - kappa x - K0 x^2/2 + K0 kappa x^3/6 solves f'' = -K0 f with
    f(0) = 1, f'(0) = -kappa; ghat is the round metric of curvature
    c = kappa^2 + K0 in normal coordinates, exact through second order
    (its third-order jets vanish).
    """
    m = n - 1
    N = n - 1
    one = AtomPoly.const(1)
    f = {0: one}
    if T >= 1:
        f[1] = -kappa
    if T >= 2:
        f[2] = K0 * mpq(-1, 2)
    if T >= 3:
        f[3] = K0 * kappa * mpq(1, 6)
    f2 = {}
    for i, a in f.items():
        for j, b in f.items():
            if i + j <= T:
                f2[i + j] = f2.get(i + j, AtomPoly()) + a * b
    c = kappa * kappa + K0
    block = {}
    for al in range(m):
        for be in range(al, m):
            gh = {}
            if al == be:
                gh[tuple([0] * n)] = one
            if T >= 2:
                for ga in range(m):
                    for rh in range(ga, m):
                        e = [0] * n
                        e[ga] += 1
                        e[rh] += 1
                        # -(c/3)(rho^2 delta_ab - x_a x_b)
                        coef = AtomPoly()
                        if al == be and ga == rh:
                            coef = coef + c * mpq(-1, 3)
                        if {ga, rh} == {al, be}:
                            coef = coef + c * mpq(1, 3)
                        if coef:
                            gh[tuple(e)] = coef
            prod = {}
            for e, v in gh.items():
                for d, w in f2.items():
                    ee = list(e)
                    ee[N] += d
                    if sum(ee) <= T:
                        key = tuple(ee)
                        prod[key] = prod.get(key, AtomPoly()) + v * w
            block[(al, be)] = _poly_jet(n, T, prod)
    return block


def _as_ring(x, atom: Atom) -> tuple[AtomPoly, list]:
    if x is None:
        return AtomPoly.atom(atom), [atom]
    if isinstance(x, AtomPoly):
        return x, sorted(x.atoms())
    return AtomPoly.const(to_rational(x)), []


def build_gauge_jets(scenario, n: int, T: int) -> GaugeJets:
    """Gauge-constrained jets of g, g^{-1}, phi and V through order T."""
    if n < 2:
        raise ValueError("dimension must be at least 2")
    if T > 3:
        raise UnsupportedOrder(f"jet order {T} > 3 is not supported")
    if T < 0:
        raise ValueError("order must be nonnegative")
    v_order = max(T - 2, 0)
    atoms: list = []
    K0 = None
    if isinstance(scenario, RandomGauge):
        block, atoms = _gauge_metric_block(n, T)
        g = _assemble_metric(n, T, block)
        with_phi, with_v = scenario.phi, scenario.potential
    elif isinstance(scenario, SpaceFormBall):
        K0, a1 = _as_ring(scenario.K0, Atom.k0())
        K0 = K0.constant_term() if K0.is_constant() else K0
        kappa, a2 = _as_ring(scenario.kappa, Atom(AtomKind.Kappa, ()))
        atoms = a1 + [a for a in a2 if a not in a1]
        g = _assemble_metric(n, T, _space_form_block(n, T, K0, kappa))
        with_phi, with_v = scenario.phi, scenario.potential
    elif isinstance(scenario, Explicit):
        block = {}
        for (al, be), poly in scenario.metric.items():
            al, be = min(al, be), max(al, be)
            block[(al, be)] = _poly_jet(n, T, {tuple(e): to_ring(v) for e, v in poly.items()})
        for al in range(n - 1):
            block.setdefault((al, al), {0: AtomPoly.const(1)})
        g = _assemble_metric(n, T, block)
        phi = Jet(n, T, _poly_jet(n, T, {tuple(e): to_ring(v) for e, v in scenario.phi.items()}))
        V = Jet(n, v_order, _poly_jet(n, v_order, {tuple(e): to_ring(v) for e, v in scenario.V.items()}))
        jts = [jt for row in g for jt in row] + [phi, V]
        atoms = sorted({a for jt in jts for v in jt.c.values() if isinstance(v, AtomPoly) for a in v.atoms()})
        return GaugeJets(n, T, g, jet_invert_metric(g), phi, V, atoms, scenario)
    else:
        raise TypeError(f"unknown scenario {scenario!r}")
    if with_phi:
        phi, pa = _free_function_jet(n, T, Atom.phi, start=1)
        atoms += pa
    else:
        phi = Jet.zero(n, T)
    if with_v:
        V, va = _free_function_jet(n, v_order, Atom.v, start=0)
        atoms += va
    else:
        V = Jet.zero(n, v_order)
    return GaugeJets(n, T, g, jet_invert_metric(g), phi, V, atoms, scenario, K0)


def to_ring(v) -> AtomPoly:
    return v if isinstance(v, AtomPoly) else AtomPoly.const(to_rational(v))


# numeric instantiation ----------------------------------------------------

DRAW_NUM = 9
DRAW_DEN = 7


def random_assignment(atoms: Iterable[Atom], seed: int) -> dict:
    """Seeded small nonzero rationals for the given atoms.

    Numerators in [-9, 9], denominators in [1, 7]; a zero draw is re-drawn.
    """
    rng = random.Random(seed)
    out = {}
    for a in sorted(set(atoms)):
        while True:
            v = mpq(rng.randint(-DRAW_NUM, DRAW_NUM), rng.randint(1, DRAW_DEN))
            if v:
                break
        out[a] = v
    return out


def instantiate(jets: GaugeJets, assignment: Mapping[Atom, object]) -> GaugeJets:
    """Replace every atom by its assigned rational; coefficients become mpq."""
    return jets.map_coefficients(lambda p: p.eval(assignment) if isinstance(p, AtomPoly) else p)


# JSON --------------------------------------------------------------------

_KIND_BY_PREFIX = {
    "K0": AtomKind.K0,
    "kappa": AtomKind.Kappa,
    "R": AtomKind.BoundaryRiemann,
    "S": AtomKind.SecondNormalJet,
    "T": AtomKind.ThirdNormalJet,
    "g": AtomKind.MetricJet,
    "phi": AtomKind.PhiJet,
    "V": AtomKind.VJet,
    "aux": AtomKind.Aux,
}

_ATOM_RE = re.compile(r"^([A-Za-z0-9]+?)(?:\[([0-9,]*)\])?$")


def parse_atom(s: str) -> Atom:
    m = _ATOM_RE.match(s.strip())
    if not m or m.group(1) not in _KIND_BY_PREFIX:
        raise ValueError(f"bad atom {s!r}")
    idx = tuple(int(x) for x in m.group(2).split(",")) if m.group(2) else ()
    return Atom(_KIND_BY_PREFIX[m.group(1)], idx)


def parse_poly(s: str) -> AtomPoly:
    """Inverse of ``AtomPoly.to_str``."""
    s = s.strip()
    if s == "0":
        return AtomPoly()
    tokens = re.split(r"\s+([+-])\s+", s)
    terms = [("+", tokens[0])] + list(zip(tokens[1::2], tokens[2::2]))
    out = AtomPoly()
    for sign, body in terms:
        neg = sign == "-"
        if body.startswith("-"):
            neg, body = not neg, body[1:]
        coeff = mpq(1)
        atoms = []
        for factor in body.split("*"):
            if re.fullmatch(r"[0-9]+(/[0-9]+)?", factor):
                coeff *= to_rational(factor)
                continue
            base, _, power = factor.partition("^")
            atoms += [parse_atom(base)] * (int(power) if power else 1)
        out = out + AtomPoly.monomial(atoms, -coeff if neg else coeff)
    return out


def _jet_json(jt: Jet) -> dict:
    return {
        "order": jt.order if jt.order < EXACT else None,
        "coeffs": [[list(e), _ring_str(v)] for e, v in jt.items()],
    }


def _ring_str(v) -> str:
    return v.to_str() if isinstance(v, AtomPoly) else format_rational(v)


def _jet_from_json(n: int, d: dict) -> Jet:
    order = EXACT if d["order"] is None else d["order"]
    return Jet(n, order, {pack(e): parse_poly(v) for e, v in d["coeffs"]})


def dump_gauge_jets(jets: GaugeJets) -> str:
    n = jets.n
    doc = {
        "schema": 1,
        "n": n,
        "order": jets.order,
        "atoms": [str(a) for a in jets.atoms],
        "g": [[_jet_json(jets.g[j][k]) for k in range(n)] for j in range(n)],
        "phi": _jet_json(jets.phi),
        "V": _jet_json(jets.V),
    }
    return json.dumps(doc, sort_keys=True)


def load_gauge_jets(text: str) -> GaugeJets:
    doc = json.loads(text)
    n = doc["n"]
    g = [[_jet_from_json(n, doc["g"][j][k]) for k in range(n)] for j in range(n)]
    return GaugeJets(
        n,
        doc["order"],
        g,
        jet_invert_metric(g),
        _jet_from_json(n, doc["phi"]),
        _jet_from_json(n, doc["V"]),
        [parse_atom(a) for a in doc["atoms"]],
        None,
    )
