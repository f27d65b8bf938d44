"""Factorization of the weighted Laplacian with potential in boundary normal
coordinates: symbols b, c_2, c_1, c_0 and the graded parts w_1, w_0, ...

The operator reads ``d_n^2 + B d_n + C`` with

    b  = 1/2 sum g^{ab} g_{ab,n} - phi_n
    c2 = -sum g^{ab} xi_a xi_b
    c1 = i sum_a (1/2 xi^a sum g^{cd} g_{cd,a} + sum_b d_a g^{ab} xi_b) - i (drift)
    c0 = V

where the drift term is ``sum_a phi_a xi_a`` (``drift="flat"``, the default,
which is the form the closed-form coefficients are built on) or
``sum_a phi_a xi^a`` (``drift="covariant"``, the symbol of g(grad phi, grad u)).
The two agree at the base point and first differ in a_3, through the
x_n-derivative of g^{ab}.  The graded parts solve

    sum_J (-i)^|J|/J! d_xi^J w d_x'^J w - b w - d_n w + c = 0

degree by degree, with w_1 = |xi'| (positive root).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpq

from .jets import GaugeJets, Jet, OrderTooLow
from .symbols import (
    DerivativeCache,
    MissingGradedPart,
    Symbol,
    SymbolContext,
    _acc,
    product_expansion,
    xi_pack,
)

__all__ = [
    "FactorizationResult",
    "build_b_c",
    "w_top",
    "w_next",
    "factorize",
    "factorization_residual",
    "reduce_w1_squares",
    "residual_vanishes",
    "DRIFTS",
]

DRIFTS = ("covariant", "flat")


@dataclass
class FactorizationResult:
    jets: GaugeJets
    ctx: SymbolContext
    b: Jet
    c: dict
    parts: dict = field(default_factory=dict)
    drift: str = "flat"
    trim: int | None = None

    @property
    def depth(self) -> int:
        return 1 - min(self.parts)


def build_b_c(jets: GaugeJets, drift: str = "flat", ctx: SymbolContext | None = None) -> dict:
    """The symbols b (a jet), c2, c1 and c0 (symbols)."""
    if drift not in DRIFTS:
        raise ValueError(f"drift must be one of {DRIFTS}")
    if jets.order < 1:
        raise OrderTooLow("b and c1 need jets of order >= 1")
    n = jets.n
    m = n - 1
    N = n - 1
    ctx = ctx or SymbolContext(jets)
    b = jets.phi.deriv(N).scale(-1)
    for a in range(m):
        for c in range(m):
            gi = jets.ginv[a][c]
            if gi:
                b = b + (gi * jets.g[a][c].deriv(N)).scale(mpq(1, 2))
    c2 = -ctx.Q()
    # c1 (real coefficient before the factor i)
    terms: dict = {}
    for a in range(m):
        L = None
        for c in range(m):
            for d in range(m):
                gi = jets.ginv[c][d]
                if gi:
                    t = gi * jets.g[c][d].deriv(a)
                    L = t if L is None else L + t
        if L is not None and L:
            for (x, _, _, _), jt in ctx.xi_up(a).terms.items():
                _acc(terms, (x, 0, 0, 1), (jt * L).scale(mpq(1, 2)))
        for bb in range(m):
            e = [0] * m
            e[bb] = 1
            _acc(terms, (xi_pack(e), 0, 0, 1), ctx.dginv(a, bb, a))
        phi_a = jets.phi.deriv(a)
        if drift == "flat":
            e = [0] * m
            e[a] = 1
            _acc(terms, (xi_pack(e), 0, 0, 1), -phi_a)
        else:
            for (x, _, _, _), jt in ctx.xi_up(a).terms.items():
                _acc(terms, (x, 0, 0, 1), -(jt * phi_a))
    c1 = Symbol._raw(n, terms)
    c0 = Symbol(n, {(0, 0, 0, 0): jets.V}) if jets.V else Symbol(n)
    return {"b": b, "c2": c2, "c1": c1, "c0": c0, "ctx": ctx}


def w_top(jets: GaugeJets) -> Symbol:
    """w_1 = |xi'|."""
    return Symbol.w1(jets.n)


def w_next(fact: FactorizationResult, m: int) -> Symbol:
    """w_{-1-m} from the degree ``-m`` part of the symbol equation."""
    parts = fact.parts
    for j in range(-m, 2):
        if j not in parts:
            raise MissingGradedPart(j)
    cache = fact._cache
    # w_{-1-m} is differentiated at most depth - m - 2 more times downstream
    cap = None if fact.trim is None else max(fact.trim - m - 2, 0)
    rest = product_expansion(cache, cache, m, range(-m, 2), range(-m, 2), cap)
    wm = parts[-m]
    rest = rest - wm.scale(fact.b) - wm.dx(fact.jets.n - 1, fact.ctx)
    c = fact.c.get(-m)
    if c is not None:
        rest = rest + c
    if cap is not None:
        rest = rest.truncate(cap)
    return rest.scale(mpq(-1, 2)).shift(dp=-1)


def factorize(jets: GaugeJets, depth: int, drift: str = "flat", trim: bool = False) -> FactorizationResult:
    """Graded parts w_1, w_0, ..., w_{1-depth}.

    With ``trim`` each part keeps only the jet order that the parametrix of
    the same depth consumes, which is much cheaper but leaves too little for
    a full-order residual check.
    """
    bc = build_b_c(jets, drift)
    ctx = bc["ctx"]
    fact = FactorizationResult(
        jets, ctx, bc["b"], {2: bc["c2"], 1: bc["c1"], 0: bc["c0"]}, {}, drift, depth if trim else None
    )
    fact.parts[1] = w_top(jets)
    fact._cache = DerivativeCache(ctx, fact.parts)
    for m in range(-1, depth - 1):
        fact.parts[-1 - m] = w_next(fact, m)
    return fact


def reduce_w1_squares(sym: Symbol, ctx: SymbolContext) -> Symbol:
    """Rewrite w1^p with p >= 2 through w1^2 = sum g^{ab} xi_a xi_b."""
    Q = ctx.Q()
    out = Symbol(sym.n)
    for (x, p, q, r), jet in sym.terms.items():
        t = Symbol._raw(sym.n, {(x, p, q, r): jet})
        while p >= 2:
            t = (t * Q).shift(dp=-2)
            p -= 2
        out = out + t
    return out


def factorization_residual(fact: FactorizationResult, depth: int | None = None) -> dict:
    """Homogeneous components of the symbol equation's left side.

    Returns ``{degree: Symbol}`` for degrees 2, 1, ..., 2 - depth, each with
    w1^2 already reduced.  All must be empty.
    """
    parts = fact.parts
    lo = min(parts)
    depth = 1 - lo if depth is None else depth
    n = fact.jets.n
    cache = fact._cache
    out = {}
    for d in range(2, 1 - depth, -1):
        m = -d
        js = [j for j in parts if j >= -m - 1 and j >= lo]
        comp = product_expansion(cache, cache, m, js, js)
        if d <= 1 and d in parts:
            comp = comp - parts[d].scale(fact.b) - parts[d].dx(n - 1, fact.ctx)
        c = fact.c.get(d)
        if c is not None:
            comp = comp + c
        # the component is only determined through the order of its
        # least-resolved ingredient, the newest part w_{d-1}
        known = min(parts[j].min_order() for j in parts if j >= d - 1)
        out[d] = reduce_w1_squares(comp, fact.ctx).truncate(known)
    return out


def residual_vanishes(fact: FactorizationResult, depth: int | None = None) -> bool:
    return all(not comp for comp in factorization_residual(fact, depth).values())
