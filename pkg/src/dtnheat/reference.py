"""Closed-form coefficients evaluated on a curvature report.

Every formula is stored as a list of summands ``(coefficient(n), quantity,
latex)`` inside a bracket multiplied by ``Gamma(n-k) / 2^k`` (``Gamma(n-1)`` for k = 0); values are in
the normalized convention a_k = omega_{n-2} / (2 pi)^{n-1} * ahat_k, so they
compare directly with :func:`dtnheat.trace.heat_coefficient`.

Kinds:

* ``A0`` .. ``A3``: coefficients for the weighted Laplacian with potential,
* ``TildeA0`` .. ``TildeA3``: the same for the Laplace-Beltrami operator,
* ``B2``, ``B3``: the simplified forms valid for constant sectional curvature,
* ``PhiV1`` .. ``PhiV3``: the phi, V contributions, transcribed separately so
  that ``A_k - TildeA_k == PhiV_k`` is a real consistency check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from gmpy2 import mpq

from .exact_algebra import AtomPoly, format_rational
from .geometry import CurvatureReport

__all__ = [
    "OutOfRange",
    "MissingReportField",
    "ReferenceKind",
    "KINDS",
    "ref_eval",
    "ref_terms",
    "ref_latex",
    "term_count",
    "corollary_consistency",
    "sphere_report",
    "READINGS",
]


class OutOfRange(ValueError):
    pass


class MissingReportField(KeyError):
    pass


def _need(value, name):
    if value is None:
        raise MissingReportField(name)
    return value


def _sum(it):
    acc = mpq(0)
    for x in it:
        acc = x + acc
    return acc


# quantities ----------------------------------------------------------------


def _H(r):
    return r.H


def _sk2(r):
    return r.sum_kappa2


def _sk3(r):
    return r.sum_kappa3


def _Rt(r):
    return _need(r.tildeScalar, "tildeScalar")


def _R(r):
    return _need(r.boundaryScalar, "boundaryScalar")


def _K0(r):
    return _need(r.K0, "K0")


def _pn(r):
    return _need(r.phi_n, "phi_grad")


def _pnn(r):
    N = r.n - 1
    return _need(r.phi_hess.get((N, N)), "phi_hess")


def _sum_pa2_k(r):
    return _sum(r.phi_grad[a] * r.phi_grad[a] * r.kappa[a] for a in range(r.m))


def _sum_pnaa(r):
    N = r.n - 1
    if not r.phi_third:
        raise MissingReportField("phi_third")
    return _sum(r.phi_third[(a, a, N)] for a in range(r.m))


def _group(r):
    """Delta phi - |grad phi|^2 / 2 + 2 V."""
    lap = _need(r.laplacePhi, "laplacePhi")
    return lap - r.gradPhiSq * mpq(1, 2) + r.V * 2


def _group_op(n):
    def q(r):
        dn = _need(r.normalDerivGroup, "normalDerivGroup")
        return dn + (r.phi_n * (n - 3) + r.H * (n - 4)) * _group(r)

    return q


@dataclass(frozen=True)
class Summand:
    coef: Callable[[int], Fraction]
    quantity: Callable
    latex: str
    coef_latex: str

    def value(self, n: int, report):
        c = mpq(self.coef(n))
        if not c:
            return mpq(0)
        return self.quantity(report) * c


def _t(coef, quantity, latex, coef_latex="1"):
    return Summand(coef, quantity, latex, coef_latex)


F = Fraction

_PHIV2 = [
    _t(lambda n: F(n - 2, 2), lambda r: _pn(r) * _pn(r), r"\phi_n^2", r"\frac{n-2}{2}"),
    _t(lambda n: F(n * n - 5 * n + 5, n - 1), lambda r: r.H * _pn(r), r"H\phi_n", r"\frac{n^2-5n+5}{n-1}"),
    _t(lambda n: F(1), _group, r"\left(\Delta\phi - \tfrac12|\nabla\phi|^2 + 2V\right)"),
]

_TILDE2 = [
    _t(lambda n: F(n**3 - 4 * n**2 + n + 8, 2 * (n * n - 1)), lambda r: r.H * r.H, "H^2",
       r"\frac{n^3-4n^2+n+8}{2(n^2-1)}"),
    _t(lambda n: F(n * (n - 3), 2 * (n * n - 1)), _sk2, r"\sum_\alpha \kappa_\alpha^2", r"\frac{n(n-3)}{2(n^2-1)}"),
    _t(lambda n: F(n - 2, 2 * (n - 1)), _Rt, r"\tilde R", r"\frac{n-2}{2(n-1)}"),
    _t(lambda n: -F(n - 4, 6 * (n - 1)), _R, "R", r"-\frac{n-4}{6(n-1)}"),
]

_TILDE3 = [
    _t(lambda n: F(n**5 - 5 * n**4 - 10 * n**3 + 52 * n**2 + 2 * n - 114, 6 * (n * n - 1) * (n + 3)),
       lambda r: r.H * r.H * r.H, "H^3", r"\frac{n^5-5n^4-10n^3+52n^2+2n-114}{6(n^2-1)(n+3)}"),
    _t(lambda n: F(n**4 - n**3 - 12 * n**2 + 22 * n + 6, 2 * (n * n - 1) * (n + 3)),
       lambda r: r.H * r.sum_kappa2, r"H\sum_\alpha\kappa_\alpha^2", r"\frac{n^4-n^3-12n^2+22n+6}{2(n^2-1)(n+3)}"),
    _t(lambda n: -F(4 * (n - 3) * (n - 2), 3 * (n * n - 1) * (n + 3)), _sk3, r"\sum_\alpha\kappa_\alpha^3",
       r"-\frac{4(n-3)(n-2)}{3(n^2-1)(n+3)}"),
    _t(lambda n: F(n**3 - 6 * n**2 + 2 * n + 14, 2 * (n * n - 1)), lambda r: r.H * _Rt(r), r"H\tilde R",
       r"\frac{n^3-6n^2+2n+14}{2(n^2-1)}"),
    _t(lambda n: -F(3 * n**3 - 20 * n**2 + 12 * n + 42, 6 * (n * n - 1)), lambda r: r.H * _R(r), "HR",
       r"-\frac{3n^3-20n^2+12n+42}{6(n^2-1)}"),
    _t(lambda n: F(2 * (n * n - 3 * n + 1), n * n - 1), lambda r: r.sum_kappa_tildeRic,
       r"\sum_\alpha\kappa_\alpha\tilde R_{\alpha\alpha}", r"\frac{2(n^2-3n+1)}{n^2-1}"),
    _t(lambda n: -F(2 * n * (3 * n - 8), 3 * (n * n - 1)), lambda r: r.sum_kappa_Ric,
       r"\sum_\alpha\kappa_\alpha R_{\alpha\alpha}", r"-\frac{2n(3n-8)}{3(n^2-1)}"),
    _t(lambda n: F(n - 2, n - 1), lambda r: _need(r.nablaRicNN, "nablaRicNN"), r"\nabla_n\tilde R_{nn}",
       r"\frac{n-2}{n-1}"),
]


def _phiv3(n_dummy=None):
    return [
        _t(lambda n: F(n**4 - 9 * n**3 + 20 * n**2 + 7 * n - 31, 2 * (n * n - 1)), lambda r: r.H * r.H * _pn(r),
           r"H^2\phi_n", r"\frac{n^4-9n^3+20n^2+7n-31}{2(n^2-1)}"),
        _t(lambda n: F((n - 3) * (n * n - 6 * n + 6), 2 * (n - 1)), lambda r: r.H * _pn(r) * _pn(r), r"H\phi_n^2",
           r"\frac{(n-3)(n^2-6n+6)}{2(n-1)}"),
        _t(lambda n: F((n - 2) * (n - 3), 6), lambda r: _pn(r) * _pn(r) * _pn(r), r"\phi_n^3",
           r"\frac{(n-2)(n-3)}{6}"),
        _t(lambda n: F(n**3 - 7 * n**2 + 9 * n + 1, 2 * (n * n - 1)), lambda r: _pn(r) * r.sum_kappa2,
           r"\phi_n\sum_\alpha\kappa_\alpha^2", r"\frac{n^3-7n^2+9n+1}{2(n^2-1)}"),
        _t(lambda n: F(1), _sum_pa2_k, r"\sum_\alpha\phi_\alpha^2\kappa_\alpha"),
        _t(lambda n: F(-1), lambda r: r.H * _pnn(r), r"H\phi_{nn}", "-1"),
        _t(lambda n: F(n * n - 6 * n + 7, 2 * (n - 1)), lambda r: _Rt(r) * _pn(r), r"\tilde R\phi_n",
           r"\frac{n^2-6n+7}{2(n-1)}"),
        _t(lambda n: -F(n * n - 10 * n + 15, 6 * (n - 1)), lambda r: _R(r) * _pn(r), r"R\phi_n",
           r"-\frac{n^2-10n+15}{6(n-1)}"),
        _t(lambda n: F((n - 2) * (n - 3), 6 * (n - 1)), _sum_pnaa, r"\sum_\alpha\phi_{n\alpha\alpha}",
           r"\frac{(n-2)(n-3)}{6(n-1)}"),
        _group3,
    ]


class _GroupSummand(Summand):
    def value(self, n, report):
        return _group_op(n)(report)


_group3 = _GroupSummand(
    lambda n: F(1),
    None,
    r"\left(\partial_n + (n-3)\phi_n + (n-4)H\right)\left(\Delta\phi - \tfrac12|\nabla\phi|^2 + 2V\right)",
    "1",
)

_PHIV3 = _phiv3()

_B2_GEOM = [
    _t(lambda n: F((n - 2) * (n * n - n - 4), 2 * (n * n - 1)), lambda r: r.H * r.H, "H^2",
       r"\frac{(n-2)(n^2-n-4)}{2(n^2-1)}"),
    _t(lambda n: -F(2 * (n * n - 3 * n - 1), 3 * (n * n - 1)), _R, "R", r"-\frac{2(n^2-3n-1)}{3(n^2-1)}"),
    _t(lambda n: F(n * (n - 1) * (n - 2), n + 1), _K0, "K_0", r"\frac{n(n-1)(n-2)}{n+1}"),
]

_B3 = [
    _t(lambda n: F(n**5 - 2 * n**4 - 25 * n**3 + 12 * n**2 + 164 * n - 96, 6 * (n * n - 1) * (n + 3)),
       lambda r: r.H * r.H * r.H, "H^3", r"\frac{n^5-2n^4-25n^3+12n^2+164n-96}{6(n^2-1)(n+3)}"),
    _t(lambda n: F(n * (n - 2) * (3 * n**4 - 12 * n**3 - 38 * n**2 + 108 * n - 21), 3 * (n * n - 1) * (n + 3)),
       lambda r: r.H * _K0(r), "HK_0", r"\frac{n(n-2)(3n^4-12n^3-38n^2+108n-21)}{3(n^2-1)(n+3)}"),
    _t(lambda n: -F(3 * n**4 - 13 * n**3 - 44 * n**2 + 120 * n + 72, 3 * (n * n - 1) * (n + 3)),
       lambda r: r.H * _R(r), "HR", r"-\frac{3n^4-13n^3-44n^2+120n+72}{3(n^2-1)(n+3)}"),
    _t(lambda n: F(2 * (3 * n**3 - n**2 - 14 * n - 12), 3 * (n * n - 1) * (n + 3)), _sk3,
       r"\sum_\alpha\kappa_\alpha^3", r"\frac{2(3n^3-n^2-14n-12)}{3(n^2-1)(n+3)}"),
    _t(lambda n: F((n - 3) * (n - 5) * (n * n - 2), 2 * (n * n - 1)), lambda r: r.H * r.H * _pn(r), r"H^2\phi_n",
       r"\frac{(n-3)(n-5)(n^2-2)}{2(n^2-1)}"),
    _t(lambda n: F((n - 3) * (n * n - 6 * n + 6), 2 * (n - 1)), lambda r: r.H * _pn(r) * _pn(r), r"H\phi_n^2",
       r"\frac{(n-3)(n^2-6n+6)}{2(n-1)}"),
    _t(lambda n: F((n - 2) * (n - 3), 6), lambda r: _pn(r) * _pn(r) * _pn(r), r"\phi_n^3", r"\frac{(n-2)(n-3)}{6}"),
    _t(lambda n: F(1), _sum_pa2_k, r"\sum_\alpha\phi_\alpha^2\kappa_\alpha"),
    _t(lambda n: F(-1), lambda r: r.H * _pnn(r), r"H\phi_{nn}", "-1"),
    _t(lambda n: -F(2 * n**3 - 15 * n**2 + 16 * n + 9, 3 * (n * n - 1)), lambda r: _R(r) * _pn(r), r"R\phi_n",
       r"-\frac{2n^3-15n^2+16n+9}{3(n^2-1)}"),
    _t(lambda n: F((n - 1) * (n**3 - 6 * n**2 + 6 * n + 1), n + 1), lambda r: _K0(r) * _pn(r), r"K_0\phi_n",
       r"\frac{(n-1)(n^3-6n^2+6n+1)}{n+1}"),
    _t(lambda n: F((n - 2) * (n - 3), 6 * (n - 1)), _sum_pnaa, r"\sum_\alpha\phi_{n\alpha\alpha}",
       r"\frac{(n-2)(n-3)}{6(n-1)}"),
    _group3,
]


@dataclass(frozen=True)
class ReferenceKind:
    name: str
    k: int
    min_n: int
    terms: tuple

    def prefactor(self, n: int) -> mpq:
        """Gamma(n-1) for k = 0 and Gamma(n-k) / 2^k otherwise."""
        return mpq(math.factorial(n - 1 - max(self.k, 1)), 2**self.k)

    def check_range(self, n: int):
        if n < self.min_n:
            raise OutOfRange(f"{self.name} needs n >= {self.min_n}, got n={n}")


_ONE = [_t(lambda n: F(1), lambda r: mpq(1), "1")]
_A1 = [
    _t(lambda n: F(n - 2, n - 1), _H, "H", r"\frac{n-2}{n-1}"),
    _t(lambda n: F(1), _pn, r"\phi_n"),
]

KINDS = {
    "A0": ReferenceKind("A0", 0, 2, tuple(_ONE)),
    "A1": ReferenceKind("A1", 1, 2, tuple(_A1)),
    "A2": ReferenceKind("A2", 2, 3, tuple(_TILDE2 + _PHIV2)),
    "A3": ReferenceKind("A3", 3, 4, tuple(_TILDE3 + _PHIV3)),
    "TildeA0": ReferenceKind("TildeA0", 0, 2, tuple(_ONE)),
    "TildeA1": ReferenceKind("TildeA1", 1, 2, (_A1[0],)),
    "TildeA2": ReferenceKind("TildeA2", 2, 3, tuple(_TILDE2)),
    "TildeA3": ReferenceKind("TildeA3", 3, 4, tuple(_TILDE3)),
    "B2": ReferenceKind("B2", 2, 3, tuple(_B2_GEOM + _PHIV2)),
    "B3": ReferenceKind("B3", 3, 4, tuple(_B3)),
    "PhiV1": ReferenceKind("PhiV1", 1, 2, (_A1[1],)),
    "PhiV2": ReferenceKind("PhiV2", 2, 3, tuple(_PHIV2)),
    "PhiV3": ReferenceKind("PhiV3", 3, 4, tuple(_PHIV3)),
}


def _kind(kind) -> ReferenceKind:
    if isinstance(kind, ReferenceKind):
        return kind
    try:
        return KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown reference kind {kind!r}; choose from {sorted(KINDS)}") from None


def term_count(kind) -> int:
    """Number of displayed summands inside the bracket."""
    return len(_kind(kind).terms)


READINGS = ("coordinate", "covariant")


class _CoordinateView:
    """A report whose Delta phi, |grad phi|^2 and the normal derivative of
    the phi, V group are the coordinate sums in boundary normal coordinates.

    This is the reading under which the closed forms agree with their own
    intermediate symbol computations; it differs from the covariant one by
    H phi_n in Delta phi and by curvature terms in the normal derivative.
    """

    def __init__(self, report):
        self._r = report

    def __getattr__(self, name):
        return getattr(self._r, name)

    @property
    def laplacePhi(self):
        return self._r.coordLaplacePhi

    @property
    def gradPhiSq(self):
        return self._r.coordGradPhiSq

    @property
    def normalDerivGroup(self):
        return self._r.coordNormalDerivGroup


def _view(report, reading: str):
    if reading not in READINGS:
        raise ValueError(f"reading must be one of {READINGS}")
    if reading == "coordinate" and isinstance(report, CurvatureReport):
        return _CoordinateView(report)
    return report


def ref_terms(kind, report: CurvatureReport, n: int | None = None, reading: str = "coordinate") -> list:
    """Per-summand values, each already multiplied by the Gamma prefactor."""
    K = _kind(kind)
    n = report.n if n is None else n
    report = _view(report, reading)
    K.check_range(n)
    pre = K.prefactor(n)
    return [(t.latex, t.value(n, report) * pre) for t in K.terms]


def ref_eval(kind, report: CurvatureReport, n: int | None = None, reading: str = "coordinate"):
    """Normalized value ahat_k of the chosen closed form on ``report``."""
    acc = mpq(0)
    for _, v in ref_terms(kind, report, n, reading):
        acc = v + acc
    if isinstance(acc, AtomPoly) and acc.is_constant():
        return acc.constant_term()
    return acc


def ref_latex(kind, n: int | None = None) -> str:
    """LaTeX of the formula, symbolic in n or specialized to a given n."""
    K = _kind(kind)
    parts = []
    for t in K.terms:
        if n is None:
            c = t.coef_latex
            parts.append(t.latex if c == "1" else ("-" + t.latex if c == "-1" else f"{c}\\,{t.latex}"))
        else:
            c = F(t.coef(n))
            if not c:
                continue
            if c == 1:
                parts.append(t.latex)
            elif c == -1:
                parts.append("-" + t.latex)
            elif c.denominator == 1:
                parts.append(f"{c.numerator}\\,{t.latex}")
            else:
                sign = "-" if c < 0 else ""
                parts.append(f"{sign}\\frac{{{abs(c.numerator)}}}{{{c.denominator}}}\\,{t.latex}")
    body = " + ".join(parts).replace("+ -", "- ") or "0"
    if n is None:
        pre = r"\frac{\Gamma(n-%d)}{%d}" % (K.k, 2**K.k) if K.k else r"\Gamma(n-1)"
    else:
        pre = format_rational(K.prefactor(n))
    return f"{pre}\\left[{body}\\right]"


def corollary_consistency(report: CurvatureReport, n: int | None = None, reading: str = "coordinate") -> dict:
    """Compare the generic closed forms with the constant-curvature ones on a
    space-form report: ``{"a2": bool, "a3": bool}`` (a3 only when n >= 4 and
    third-order data is present)."""
    n = report.n if n is None else n
    out = {}
    if n >= 3:
        out["a2"] = _same(ref_eval("A2", report, n, reading), ref_eval("B2", report, n, reading))
    if n >= 4 and report.nablaRicNN is not None:
        out["a3"] = _same(ref_eval("A3", report, n, reading), ref_eval("B3", report, n, reading))
    return out


def _same(a, b) -> bool:
    d = a - b
    if isinstance(d, AtomPoly):
        return not d
    return d == 0


def sphere_report(n: int, radius=1, phi_n=0, phi_nn=0, laplace_phi=0, grad_phi_sq=0, V=0,
                  normal_group=0) -> CurvatureReport:
    """Report of the boundary sphere of a flat ball of given radius with
    constant normal data (for the model-geometry predictions).

    ``laplace_phi``, ``grad_phi_sq`` and ``normal_group`` are taken as given
    under both readings."""
    r = mpq(radius) if not isinstance(radius, float) else radius
    m = n - 1
    k = 1 / r
    kappa = [k] * m
    H = k * m
    R = k * k * m * (m - 1)
    ric = {(a, b): (k * k * (m - 1) if a == b else 0) for a in range(m) for b in range(m)}
    grad = [0] * (n - 1) + [phi_n]
    hess = {(n - 1, n - 1): phi_nn}
    return CurvatureReport(
        n=n, kappa=kappa, H=H, h={(a, a): k for a in range(m)},
        tildeRiemann={}, tildeRicci={(a, b): 0 for a in range(n) for b in range(n)}, tildeScalar=0,
        boundaryRiemann={}, boundaryRicci=ric, boundaryScalar=R, nablaRicNN=0,
        laplacePhi=laplace_phi, gradPhiSq=grad_phi_sq, phi_grad=grad, phi_hess=hess,
        phi_third={(a, a, n - 1): 0 for a in range(m)}, V=V, V_grad=None,
        normalDerivGroup=normal_group, K0=0,
        # the caller's values serve either reading
        coordLaplacePhi=laplace_phi, coordGradPhiSq=grad_phi_sq, coordNormalDerivGroup=normal_group,
    )
