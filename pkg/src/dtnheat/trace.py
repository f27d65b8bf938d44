"""Residue in tau and moment integration over xi'.

For a parametrix term ``J xi^mu w1^p s^q`` the contour integral against
e^{-tau} together with the prefactor of the trace formula gives the weight
``1/(q-1)!`` times ``e^{-w1}``; integrating over xi' at the base point
(where w1 = |xi'|) gives

    int w1^p xi^mu e^{-w1} dxi' = omega_{n-2} * moment(n, p, mu),
    moment = Gamma(n-1+p+|mu|) prod (mu_a - 1)!! / prod_{i=1}^{|mu|/2} (n-3+2i)

and zero when any mu_a is odd.  Coefficients are reported in the normalized
form a_k(x0) = omega_{n-2} / (2 pi)^{n-1} * ahat_k.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from gmpy2 import mpq

from .exact_algebra import AtomPoly, format_rational
from .factorization import factorize
from .jets import GaugeJets
from .parametrix import parametrix
from .symbols import Symbol, xi_unpack

__all__ = [
    "DivergentMoment",
    "NonRealResult",
    "InvalidPower",
    "CoefficientResult",
    "contour_weight",
    "moment",
    "heat_coefficient",
    "BoundaryOfValidity",
    "heat_coefficients",
    "phi_v_split",
]


class DivergentMoment(ValueError):
    pass


class NonRealResult(ArithmeticError):
    pass


class InvalidPower(ValueError):
    pass


class BoundaryOfValidity(UserWarning):
    pass


def contour_weight(q: int) -> mpq:
    if q < 1:
        raise InvalidPower(f"resolvent power must be >= 1, got {q}")
    return mpq(1, math.factorial(q - 1))


def _double_factorial(k: int) -> int:
    r = 1
    while k > 1:
        r *= k
        k -= 2
    return r


_MOMENTS: dict = {}


def moment(n: int, p: int, mu) -> mpq:
    """Sphere-normalized moment of w1^p xi^mu e^{-w1} over R^{n-1}."""
    mu = tuple(mu)
    key = (n, p, tuple(sorted(mu)))
    v = _MOMENTS.get(key)
    if v is not None:
        return v
    if any(e % 2 for e in mu):
        return mpq(0)
    total = sum(mu)
    arg = n - 1 + p + total
    if arg < 1:
        raise DivergentMoment(f"Gamma({arg}) in the radial integral (n={n}, p={p}, |mu|={total})")
    num = math.factorial(arg - 1)
    for e in mu:
        num *= _double_factorial(e - 1)
    den = 1
    for i in range(1, total // 2 + 1):
        den *= n - 3 + 2 * i
    v = _MOMENTS[key] = mpq(num, den)
    return v


@dataclass
class CoefficientResult:
    n: int
    k: int
    ahat: object
    prefactor: str = ""
    phiV: object = None
    classical: object = None
    flags: list = field(default_factory=list)

    def to_json(self) -> dict:
        d = {"n": self.n, "k": self.k, "ahat": _ring_str(self.ahat), "prefactor": self.prefactor}
        if self.phiV is not None:
            d["phiV"] = _ring_str(self.phiV)
        if self.flags:
            d["flags"] = list(self.flags)
        return d


def _ring_str(v) -> str:
    if isinstance(v, AtomPoly):
        return v.to_str()
    return format_rational(mpq(v))


def prefactor_text(n: int) -> str:
    return f"omega_{n - 2} / (2 pi)^{n - 1}"


def heat_coefficient(s_part: Symbol, n: int, k: int) -> CoefficientResult:
    """Normalized ahat_k from s_{-1-k}."""
    flags = []
    if k >= n - 1 and k > 0:
        if k > n - 1:
            raise DivergentMoment(f"a_{k} lies beyond the last coefficient a_{n - 1} before log terms")
        warnings.warn(f"a_{k} at n={n} is the last coefficient before log terms", BoundaryOfValidity)
        flags.append("boundary-of-validity")
    m = n - 1
    re = mpq(0)
    im = mpq(0)
    for (x, p, q, r), jet in s_part.terms.items():
        mu = xi_unpack(x, m)
        if any(e % 2 for e in mu):
            continue
        c = jet.value()
        if not c:
            continue
        w = contour_weight(q) * moment(n, p, mu)
        if r:
            im = im + c * w
        else:
            re = re + c * w
    if im:
        raise NonRealResult(f"imaginary part of ahat_{k} does not cancel: {im}")
    if isinstance(re, AtomPoly) and re.is_constant():
        re = re.constant_term()
    return CoefficientResult(n, k, re, prefactor_text(n), flags=flags)


def heat_coefficients(jets: GaugeJets, max_k: int, drift: str = "flat") -> list:
    """ahat_0 .. ahat_{max_k} from the full pipeline (jets order >= max_k)."""
    n = jets.n
    if max_k > n - 1:
        raise DivergentMoment(f"a_{max_k} lies beyond the last coefficient a_{n - 1} before log terms")
    depth = max(max_k, 1)
    par = parametrix(factorize(jets, depth, drift, trim=True), max_k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryOfValidity)
        out = [heat_coefficient(par.parts[-1 - k], n, k) for k in range(max_k + 1)]
    if max_k == n - 1:
        warnings.warn(f"a_{max_k} at n={n} is the last coefficient before log terms", BoundaryOfValidity)
    return out


def phi_v_split(jets: GaugeJets, n: int | None = None, k: int = 3, drift: str = "flat") -> dict:
    """``{"full": CoefficientResult, "phiV": CoefficientResult}``: the given
    jets and the difference to the same jets with phi and V set to zero."""
    if k > 3:
        raise ValueError("the split is defined for k <= 3")
    n = jets.n if n is None else n
    full = heat_coefficients(jets, k, drift)[k]
    bare = heat_coefficients(jets.zero_phi_v(), k, drift)[k]
    pv = full.ahat - bare.ahat
    if isinstance(pv, AtomPoly) and pv.is_constant():
        pv = pv.constant_term()
    full.classical = bare.ahat
    full.phiV = pv
    return {"full": full, "phiV": CoefficientResult(n, k, pv, full.prefactor, flags=list(full.flags))}
