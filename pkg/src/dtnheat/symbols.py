"""Graded symbol algebra in xi', w1 = |xi'|_g and s = (w1 - tau)^{-1}.

A symbol is a finite sum of terms

    J(x) * xi^mu * w1^p * s^q * i^r,      r in {0, 1}

stored as ``{(mu, p, q, r): J}`` with ``J`` a :class:`~dtnheat.jets.Jet`.
The xi-exponent ``mu`` is packed into one int, 5 bits per tangential index.
``w1`` and ``s`` are kept as free generators: there is no rewrite of
``w1**2`` into the quadratic form, so structural equality is a strict test
and genuine identities are checked after integration or by evaluation
(:func:`evaluate_symbol`).

x-derivatives bring in the inverse-metric jets through

    d_j w1^p = (p/2) w1^(p-2) G_j,      G_j = sum d_j g^{ab} xi_a xi_b,
    d_j s^q  = -(q/2) w1^(-1) s^(q+1) G_j,

and xi-derivatives through ``xi^a = sum_b g^{ab} xi_b``.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

from gmpy2 import mpq

from .jets import EXACT, DimensionMismatch, GaugeJets, Jet, OrderTooLow, jet_mul_into, key_degree

__all__ = [
    "Symbol",
    "SymbolContext",
    "OrderTooLow",
    "MissingGradedPart",
    "sym_add",
    "sym_scale",
    "sym_mul",
    "sym_dx",
    "sym_dxi",
    "homogeneous_part",
    "product_expansion",
    "multi_indices",
    "evaluate_symbol",
]

XI_BITS = 5
XI_MASK = (1 << XI_BITS) - 1


class MissingGradedPart(KeyError):
    pass


def xi_pack(exps: Iterable[int]) -> int:
    key = 0
    for i, e in enumerate(exps):
        key |= e << (XI_BITS * i)
    return key


def xi_unpack(key: int, m: int) -> tuple:
    return tuple((key >> (XI_BITS * i)) & XI_MASK for i in range(m))


_XIDEG: dict = {0: 0}


def xi_degree(key: int) -> int:
    d = _XIDEG.get(key)
    if d is None:
        d, k = 0, key
        while k:
            d += k & XI_MASK
            k >>= XI_BITS
        _XIDEG[key] = d
    return d


def _acc(out: dict, key, jet: Jet):
    if not jet:
        return
    old = out.get(key)
    if old is None:
        out[key] = jet
    else:
        new = old + jet
        if new:
            out[key] = new
        else:
            del out[key]


_MINUS = mpq(-1)


def _i_power(r: int, coeff):
    """(flag, coeff) for i**r * coeff with i**2 folded into the sign."""
    r %= 4
    if r >= 2:
        coeff = _MINUS if coeff is None else -coeff
    return r % 2, coeff


class _Accumulator:
    """Mutable sum of symbol terms.

    Coefficients are collected in plain dicts and turned into jets once, at
    the order of the least-resolved contribution to each term.
    """

    __slots__ = ("n", "orders", "coeffs", "cap")

    def __init__(self, n: int, cap: int | None = None):
        self.n = n
        self.orders: dict = {}
        self.coeffs: dict = {}
        self.cap = EXACT if cap is None else cap

    def _slot(self, key, order: int) -> dict:
        if order > self.cap:
            order = self.cap
        old = self.orders.get(key)
        if old is None:
            self.orders[key] = order
            d = self.coeffs[key] = {}
            return d
        if order < old:
            self.orders[key] = order
        return self.coeffs[key]

    def add_jet(self, key, jet: Jet, coeff=None):
        d = self._slot(key, jet.order)
        for k, v in jet.c.items():
            if coeff is not None:
                v = v * coeff
            w = d.get(k)
            d[k] = v if w is None else w + v

    def add_product(self, key, a: Jet, b: Jet, coeff=None):
        order = min(a.order, b.order, self.cap)
        jet_mul_into(self._slot(key, order), a, b, order, coeff)

    def add_symbol(self, sym: "Symbol", coeff=None, ipow: int = 0):
        for (x, p, q, r), jet in sym.terms.items():
            flag, c = _i_power(r + ipow, coeff)
            self.add_jet((x, p, q, flag), jet, c)

    def add_symbol_product(self, A: "Symbol", B: "Symbol", coeff=None, ipow: int = 0):
        for (x1, p1, q1, r1), a in A.terms.items():
            for (x2, p2, q2, r2), b in B.terms.items():
                flag, c = _i_power(r1 + r2 + ipow, coeff)
                self.add_product((x1 + x2, p1 + p2, q1 + q2, flag), a, b, c)

    def result(self) -> "Symbol":
        terms = {}
        n = self.n
        for key, order in self.orders.items():
            c = {k: v for k, v in self.coeffs[key].items() if v and key_degree(k) <= order}
            if c:
                terms[key] = Jet(n, order, c, _trusted=True)
        return Symbol._raw(n, terms)


class Symbol:
    """Immutable finite sum of symbol terms over ``n``-dimensional jets."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping | None = None):
        self.n = n
        self.terms = {k: v for k, v in terms.items() if v} if terms else {}

    @classmethod
    def _raw(cls, n: int, terms: dict) -> "Symbol":
        s = cls.__new__(cls)
        s.n = n
        s.terms = terms
        return s

    # constructors -----------------------------------------------------

    @classmethod
    def monomial(cls, n: int, coeff=1, xi=None, p: int = 0, q: int = 0, ipow: int = 0) -> "Symbol":
        m = n - 1
        xi = xi_pack(xi or [0] * m)
        jet = coeff if isinstance(coeff, Jet) else Jet.const(n, coeff)
        sign = 1
        ipow %= 4
        if ipow >= 2:
            sign, ipow = -1, ipow - 2
        if sign < 0:
            jet = -jet
        return cls(n, {(xi, p, q, ipow): jet})

    @classmethod
    def w1(cls, n: int) -> "Symbol":
        return cls.monomial(n, 1, p=1)

    @classmethod
    def s_minus1(cls, n: int) -> "Symbol":
        return cls.monomial(n, 1, q=1)

    # inspection -------------------------------------------------------

    @property
    def m(self) -> int:
        return self.n - 1

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, Symbol):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    __hash__ = None

    def degrees(self) -> set:
        return {xi_degree(x) + p - q for (x, p, q, _r) in self.terms}

    def is_homogeneous(self, d: int) -> bool:
        return all(xi_degree(x) + p - q == d for (x, p, q, _r) in self.terms)

    def min_order(self) -> int:
        return min((j.order for j in self.terms.values()), default=EXACT)

    def items(self):
        """Terms in a fixed order: ((mu tuple, p, q, r), jet)."""
        m = self.m
        for k in sorted(self.terms):
            x, p, q, r = k
            yield (xi_unpack(x, m), p, q, r), self.terms[k]

    def __repr__(self) -> str:
        parts = []
        for (mu, p, q, r), j in self.items():
            parts.append(f"{'i*' if r else ''}[{_jet_short(j)}]*xi^{mu}*w1^{p}*s^{q}")
        return f"Symbol(n={self.n}: " + (" + ".join(parts) if parts else "0") + ")"

    # algebra ----------------------------------------------------------

    def _check(self, other: "Symbol"):
        if self.n != other.n:
            raise DimensionMismatch(f"{self.n} != {other.n}")

    def __add__(self, other: "Symbol") -> "Symbol":
        self._check(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, v in other.terms.items():
            _acc(out, k, v)
        return Symbol._raw(self.n, out)

    def __neg__(self) -> "Symbol":
        return Symbol._raw(self.n, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "Symbol") -> "Symbol":
        return self + (-other)

    def scale(self, c) -> "Symbol":
        """Multiply by a ring element, an int/rational or an x-jet."""
        if isinstance(c, int):
            c = mpq(c)
        if isinstance(c, Jet):
            out = {}
            for k, v in self.terms.items():
                w = v * c
                if w:
                    out[k] = w
            return Symbol._raw(self.n, out)
        if not c:
            return Symbol(self.n)
        if c == 1:
            return self
        out = {}
        for k, v in self.terms.items():
            w = v.scale(c)
            if w:
                out[k] = w
        return Symbol._raw(self.n, out)

    def times_i(self, r: int) -> "Symbol":
        """Multiply by i**r."""
        r %= 4
        if r == 0:
            return self
        out = {}
        for (x, p, q, ip), v in self.terms.items():
            e = ip + r
            if e % 4 >= 2:
                v = -v
            out[(x, p, q, e % 2)] = v
        return Symbol._raw(self.n, out)

    def shift(self, dp: int = 0, dq: int = 0) -> "Symbol":
        """Multiply by w1**dp * s**dq."""
        return Symbol._raw(self.n, {(x, p + dp, q + dq, r): v for (x, p, q, r), v in self.terms.items()})

    def __mul__(self, other: "Symbol") -> "Symbol":
        if not isinstance(other, Symbol):
            return self.scale(other)
        self._check(other)
        acc = _Accumulator(self.n)
        acc.add_symbol_product(self, other)
        return acc.result()

    def homogeneous_part(self, d: int) -> "Symbol":
        return Symbol._raw(self.n, {k: v for k, v in self.terms.items() if xi_degree(k[0]) + k[1] - k[2] == d})

    def truncate(self, order: int) -> "Symbol":
        """Drop jet coefficients above ``order`` (the order actually known)."""
        return self.map_jets(lambda j: j.truncate(order))

    def restrict_to_boundary(self) -> "Symbol":
        N = self.n - 1
        out = {}
        for k, v in self.terms.items():
            w = v.restrict(N)
            if w:
                out[k] = w
        return Symbol._raw(self.n, out)

    def map_jets(self, fn) -> "Symbol":
        out = {}
        for k, v in self.terms.items():
            w = fn(v)
            if w:
                out[k] = w
        return Symbol._raw(self.n, out)

    def at_base_point(self) -> "Symbol":
        """Keep only the x^0 coefficient of every jet (order 0)."""
        n = self.n
        return self.map_jets(lambda j: Jet(n, 0, {0: j.value()}) if j.value() else Jet(n, 0))

    def real_part(self) -> "Symbol":
        return Symbol._raw(self.n, {k: v for k, v in self.terms.items() if k[3] == 0})

    def imag_part(self) -> "Symbol":
        return Symbol._raw(self.n, {(x, p, q, 0): v for (x, p, q, r), v in self.terms.items() if r == 1})

    # derivatives ------------------------------------------------------

    def dx(self, j: int, ctx: "SymbolContext") -> "Symbol":
        return sym_dx(self, j, ctx)

    def dxi(self, a: int, ctx: "SymbolContext") -> "Symbol":
        return sym_dxi(self, a, ctx)


def _jet_short(j: Jet) -> str:
    items = list(j.items())
    if len(items) == 1 and not any(items[0][0]):
        return str(items[0][1])
    return "; ".join(f"{e}:{v}" for e, v in items)


class SymbolContext:
    """Inverse-metric data the derivative rules need.

    With ``boundary=True`` every jet is restricted to ``x_n = 0`` first; that
    is the setting of the parametrix, where only tangential derivatives occur.
    """

    def __init__(self, jets: GaugeJets, boundary: bool = False):
        self.jets = jets
        self.n = n = jets.n
        self.m = m = n - 1
        self.boundary = boundary
        N = n - 1
        self._ginv = {}
        for a in range(m):
            for b in range(a, m):
                jt = jets.ginv[a][b]
                if boundary:
                    jt = jt.restrict(N)
                self._ginv[(a, b)] = jt
        self._dginv: dict = {}
        self._G: dict = {}
        self._xiup: dict = {}
        self._Q = None

    def ginv(self, a: int, b: int) -> Jet:
        return self._ginv[(a, b) if a <= b else (b, a)]

    def dginv(self, a: int, b: int, j: int) -> Jet:
        key = ((a, b) if a <= b else (b, a)) + (j,)
        v = self._dginv.get(key)
        if v is None:
            v = self._dginv[key] = self.ginv(a, b).deriv(j)
        return v

    def G(self, j: int) -> Symbol:
        """sum_{a,b} d_j g^{ab} xi_a xi_b."""
        v = self._G.get(j)
        if v is None:
            n, m = self.n, self.m
            terms = {}
            for a in range(m):
                for b in range(a, m):
                    jt = self.dginv(a, b, j)
                    if not jt:
                        continue
                    e = [0] * m
                    e[a] += 1
                    e[b] += 1
                    _acc(terms, (xi_pack(e), 0, 0, 0), jt if a == b else jt.scale(2))
            v = self._G[j] = Symbol._raw(n, terms)
        return v

    def xi_up(self, a: int) -> Symbol:
        """xi^a = sum_b g^{ab} xi_b."""
        v = self._xiup.get(a)
        if v is None:
            n, m = self.n, self.m
            terms = {}
            for b in range(m):
                jt = self.ginv(a, b)
                if jt:
                    e = [0] * m
                    e[b] = 1
                    terms[(xi_pack(e), 0, 0, 0)] = jt
            v = self._xiup[a] = Symbol._raw(n, terms)
        return v

    def Q(self) -> Symbol:
        """sum_{a,b} g^{ab} xi_a xi_b, the value of w1**2."""
        if self._Q is None:
            n, m = self.n, self.m
            terms = {}
            for a in range(m):
                for b in range(a, m):
                    jt = self.ginv(a, b)
                    if not jt:
                        continue
                    e = [0] * m
                    e[a] += 1
                    e[b] += 1
                    _acc(terms, (xi_pack(e), 0, 0, 0), jt if a == b else jt.scale(2))
            self._Q = Symbol._raw(n, terms)
        return self._Q


def sym_add(a: Symbol, b: Symbol) -> Symbol:
    return a + b


def sym_scale(a: Symbol, r) -> Symbol:
    return a.scale(r)


def sym_mul(a: Symbol, b: Symbol) -> Symbol:
    return a * b


_HALF = mpq(1, 2)


def sym_dx(a: Symbol, j: int, ctx: SymbolContext) -> Symbol:
    """Partial derivative in x_j (Leibniz over jet, w1^p and s^q)."""
    if ctx.boundary and j == a.n - 1:
        raise ValueError("normal derivative is not available on the boundary")
    G = ctx.G(j).terms
    acc = _Accumulator(a.n)
    for key, jet in a.terms.items():
        x, p, q, r = key
        if jet.order <= 0:
            raise OrderTooLow(f"x-derivative of an order-{jet.order} coefficient")
        acc.add_jet(key, jet.deriv(j))
        if not G:
            continue
        if p:
            c = mpq(p, 2)
            for (gx, _, _, _), gj in G.items():
                acc.add_product((x + gx, p - 2, q, r), jet, gj, c)
        if q:
            c = mpq(-q, 2)
            for (gx, _, _, _), gj in G.items():
                acc.add_product((x + gx, p - 1, q + 1, r), jet, gj, c)
    return acc.result()


def sym_dxi(a: Symbol, alpha: int, ctx: SymbolContext) -> Symbol:
    """Partial derivative in xi_alpha (Leibniz over monomial, w1^p, s^q)."""
    shift = XI_BITS * alpha
    unit = 1 << shift
    up = ctx.xi_up(alpha).terms
    acc = _Accumulator(a.n)
    for key, jet in a.terms.items():
        x, p, q, r = key
        e = (x >> shift) & XI_MASK
        if e:
            acc.add_jet((x - unit, p, q, r), jet, mpq(e) if e > 1 else None)
        if p:
            c = mpq(p)
            for (ux, _, _, _), uj in up.items():
                acc.add_product((x + ux, p - 2, q, r), jet, uj, c)
        if q:
            c = mpq(-q)
            for (ux, _, _, _), uj in up.items():
                acc.add_product((x + ux, p - 1, q + 1, r), jet, uj, c)
    return acc.result()


def homogeneous_part(a: Symbol, d: int) -> Symbol:
    return a.homogeneous_part(d)


def multi_indices(m: int, order: int):
    """Exponent tuples of length m and total degree ``order``, sorted."""
    if order == 0:
        yield (0,) * m
        return
    out = []
    for combo in _combos(m, order):
        out.append(combo)
    yield from sorted(out)


def _combos(m: int, order: int):
    import itertools

    for c in itertools.combinations_with_replacement(range(m), order):
        e = [0] * m
        for i in c:
            e[i] += 1
        yield tuple(e)


def _jfact(J) -> int:
    f = 1
    for e in J:
        f *= math.factorial(e)
    return f


class DerivativeCache:
    """Memoized mixed derivatives d_xi^J f and d_x'^J g of graded parts."""

    def __init__(self, ctx: SymbolContext, parts: Mapping[int, Symbol]):
        self.ctx = ctx
        self.parts = parts
        self._xi: dict = {}
        self._x: dict = {}

    def dxi(self, j: int, J: tuple) -> Symbol:
        key = (j, J)
        v = self._xi.get(key)
        if v is None:
            if not any(J):
                if j not in self.parts:
                    raise MissingGradedPart(j)
                v = self.parts[j]
            else:
                a = next(i for i, e in enumerate(J) if e)
                lower = list(J)
                lower[a] -= 1
                v = sym_dxi(self.dxi(j, tuple(lower)), a, self.ctx)
            self._xi[key] = v
        return v

    def dx(self, k: int, J: tuple) -> Symbol:
        key = (k, J)
        v = self._x.get(key)
        if v is None:
            if not any(J):
                if k not in self.parts:
                    raise MissingGradedPart(k)
                v = self.parts[k]
            else:
                a = next(i for i, e in enumerate(J) if e)
                lower = list(J)
                lower[a] -= 1
                v = sym_dx(self.dx(k, tuple(lower)), a, self.ctx)
            self._x[key] = v
        return v


def product_expansion(
    f_cache: DerivativeCache,
    g_cache: DerivativeCache,
    m: int,
    j_range: Iterable[int],
    k_range: Iterable[int],
    max_order: int | None = None,
) -> Symbol:
    """sum over j, k and |J| = j + k + m of (-i)^|J| / J! d_xi^J f_j d_x'^J g_k.

    This is the degree ``-m`` part of the composition of two graded
    families; ``f_cache`` differentiates in xi, ``g_cache`` in x'.
    Coefficients are kept through ``max_order`` at most.
    """
    mm = f_cache.ctx.m
    n = f_cache.ctx.n
    acc = _Accumulator(n, max_order)
    for j in j_range:
        for k in k_range:
            order = j + k + m
            if order < 0:
                continue
            for J in multi_indices(mm, order):
                a = f_cache.dxi(j, J)
                if not a:
                    continue
                b = g_cache.dx(k, J)
                if not b:
                    continue
                acc.add_symbol_product(a, b, mpq(1, _jfact(J)), 3 * order)
    return acc.result()


# evaluation at numeric xi ---------------------------------------------------


def _jet_pow_series(base: Jet, exponent: mpq, const_root) -> Jet:
    """(c + u)^e as a jet, given c = base(x0) and const_root = c**e exactly."""
    n, order = base.n, base.order
    c = base.value()
    u = (base - c).scale(mpq(1) / c)
    # (1 + u)^e = sum binom(e, k) u^k, u has no constant term
    out = Jet.const(n, 1, order)
    term = Jet.const(n, 1, order)
    coef = mpq(1)
    top = order if order < EXACT else 0
    for k in range(1, top + 1):
        coef = coef * (exponent - (k - 1)) / k
        term = term * u
        if not term:
            break
        out = out + term.scale(coef)
    return out.scale(const_root)


def evaluate_symbol(sym: Symbol, ctx: SymbolContext, xi: list, tau) -> tuple[Jet, Jet]:
    """Substitute rational xi and tau; return (real, imaginary) x-jets.

    ``xi`` must have rational length at the base point (so w1(x0) is
    rational); ``w1(x)`` and ``s(x)`` are then expanded as rational jets.
    """
    n, m = ctx.n, ctx.m
    xi = [mpq(v) for v in xi]
    Q = Jet.zero(n, EXACT)
    for a in range(m):
        for b in range(m):
            Q = Q + ctx.ginv(a, b).scale(xi[a] * xi[b])
    r2 = Q.value()
    if hasattr(r2, "is_constant"):
        r2 = r2.constant_term() if r2.is_constant() else None
    r = _rational_sqrt(r2) if r2 is not None else None
    if r is None:
        raise ValueError("xi must have rational length at the base point")
    tau = mpq(tau)
    if r == tau:
        raise ValueError("tau must differ from |xi|")
    order = max(min(Q.order, sym.min_order()), 0)
    Q = Q.truncate(order)
    if Q.order >= EXACT:
        Q = Jet(n, order, Q.c)
    w1 = _jet_pow_series(Q, mpq(1, 2), r)
    w1pows: dict = {}
    spows: dict = {}
    winv = _jet_inverse(w1)
    s1 = _jet_inverse(w1 - tau)

    def wpow(p):
        if p not in w1pows:
            base = w1 if p >= 0 else winv
            out = Jet.const(n, 1, order)
            for _ in range(abs(p)):
                out = out * base
            w1pows[p] = out
        return w1pows[p]

    def spow(q):
        if q not in spows:
            out = Jet.const(n, 1, order)
            for _ in range(q):
                out = out * s1
            spows[q] = out
        return spows[q]

    re = Jet.zero(n, order)
    im = Jet.zero(n, order)
    for (x, p, q, ip), jet in sym.terms.items():
        mono = mpq(1)
        for a, e in enumerate(xi_unpack(x, m)):
            if e:
                mono *= xi[a] ** e
        t = jet.truncate(order) * wpow(p) * spow(q)
        t = t.scale(mono)
        if ip:
            im = im + t
        else:
            re = re + t
    return re, im


def _jet_inverse(a: Jet) -> Jet:
    c = a.value()
    if not c:
        raise ZeroDivisionError("jet with zero constant term")
    return _jet_pow_series(a, mpq(-1), mpq(1) / c)


def _rational_sqrt(x: mpq):
    import gmpy2

    if x < 0:
        return None
    p, q = x.numerator, x.denominator
    rp, ex1 = gmpy2.iroot(p, 2)
    rq, ex2 = gmpy2.iroot(q, 2)
    if ex1 and ex2:
        return mpq(int(rp), int(rq))
    return None
