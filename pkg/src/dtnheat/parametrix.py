"""Parametrix of Lambda - tau on the boundary.

The boundary symbol of Lambda is sigma_j = w_j restricted to x_n = 0.  The
parametrix parts follow from (Lambda - tau) o S = 1:

    s_{-1}   = (w_1 - tau)^{-1}
    s_{-1-m} = -s_{-1} sum_{j, k, |J| = j + k + m} (-i)^|J|/J! d_xi^J sigma_j d_x'^J s_k

with -m <= j <= 1 and -m <= k <= -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpq

from .factorization import FactorizationResult
from .symbols import DerivativeCache, MissingGradedPart, Symbol, SymbolContext, product_expansion

__all__ = [
    "ParametrixResult",
    "dtn_symbol",
    "s_init",
    "s_next",
    "parametrix",
    "explicit_s",
]


@dataclass
class ParametrixResult:
    ctx: SymbolContext
    sigma: dict
    parts: dict = field(default_factory=dict)
    depth: int | None = None


def dtn_symbol(fact: FactorizationResult) -> dict:
    """Boundary symbol parts sigma_j(Lambda) = w_j(x', 0)."""
    return {j: w.restrict_to_boundary() for j, w in fact.parts.items()}


def s_init(n: int) -> Symbol:
    return Symbol.s_minus1(n)


def s_next(par: ParametrixResult, m: int) -> Symbol:
    """s_{-1-m} from the parts already present."""
    for k in range(-m, 0):
        if k not in par.parts:
            raise MissingGradedPart(k)
    for j in range(1 - m, 2):
        if j not in par.sigma:
            raise MissingGradedPart(j)
    # s_{-1-m} is differentiated at most depth - m more times downstream
    cap = None if par.depth is None else max(par.depth - m, 0)
    total = product_expansion(par._sigma_cache, par._s_cache, m, range(1 - m, 2), range(-m, 0), cap)
    return -(par.parts[-1] * total)


def parametrix(fact: FactorizationResult, depth: int, trim: bool = True) -> ParametrixResult:
    """Parts s_{-1}, ..., s_{-1-depth}.

    With ``trim`` each part keeps only the jet order still needed for
    s_{-1-depth} at the base point.
    """
    ctx = SymbolContext(fact.jets, boundary=True)
    sigma = dtn_symbol(fact)
    par = ParametrixResult(ctx, sigma, {}, depth if trim else None)
    par.parts[-1] = s_init(fact.jets.n)
    par._sigma_cache = DerivativeCache(ctx, sigma)
    par._s_cache = DerivativeCache(ctx, par.parts)
    for m in range(1, depth + 1):
        par.parts[-1 - m] = s_next(par, m)
    return par


def explicit_s(par: ParametrixResult, level: int) -> Symbol:
    """s_{-2}, s_{-3}, s_{-4} written out term by term (cross-check of the
    generic recursion)."""
    n = par.ctx.n
    m = n - 1
    F, S = par._sigma_cache, par._s_cache
    s1 = par.parts[-1]
    I = lambda sym, r: sym.times_i(r)

    def e(*idx):
        v = [0] * m
        for a in idx:
            v[a] += 1
        return tuple(v)

    def d1(j, k):
        acc = Symbol(n)
        for a in range(m):
            acc = acc + F.dxi(j, e(a)) * S.dx(k, e(a))
        return acc

    def d2(j, k):
        acc = Symbol(n)
        for a in range(m):
            for b in range(m):
                acc = acc + F.dxi(j, e(a, b)) * S.dx(k, e(a, b))
        return acc

    def d3(j, k):
        acc = Symbol(n)
        for a in range(m):
            for b in range(m):
                for c in range(m):
                    acc = acc + F.dxi(j, e(a, b, c)) * S.dx(k, e(a, b, c))
        return acc

    w = par.sigma
    s = par.parts
    if level == 2:
        inner = w[0] * s[-1] - I(d1(1, -1), 1)
    elif level == 3:
        inner = (
            w[0] * s[-2]
            + w[-1] * s[-1]
            - I(d1(1, -2) + d1(0, -1), 1)
            - d2(1, -1).scale(mpq(1, 2))
        )
    elif level == 4:
        inner = (
            w[0] * s[-3]
            + w[-1] * s[-2]
            + w[-2] * s[-1]
            - I(d1(1, -3) + d1(0, -2) + d1(-1, -1), 1)
            - (d2(1, -2) + d2(0, -1)).scale(mpq(1, 2))
            + I(d3(1, -1), 1).scale(mpq(1, 6))
        )
    else:
        raise ValueError("explicit forms exist for levels 2, 3, 4")
    return -(s1 * inner)
