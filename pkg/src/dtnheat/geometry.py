"""Curvature and weight quantities at the base point, computed from jets.

Every function is generic over the coefficient ring: the same code runs on
symbolic ``AtomPoly`` jets and on jets instantiated at rational points.
Conventions: ``R_{jklm}`` is given by the coordinate formula below, so the
unit sphere has ``R_{1212} = -1``; Ricci is ``R_{jk} = sum g^{lm} R_{jlmk}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from gmpy2 import mpq

from .exact_algebra import AtomPoly
from .jets import GaugeJets, Jet, OrderTooLow

__all__ = [
    "OrderTooLow",
    "CurvatureReport",
    "christoffel",
    "christoffel_table",
    "riemann",
    "riemann_values",
    "ricci_scalar",
    "nabla_ric_nn",
    "phi_v_report",
    "lemma21_check",
    "gauss_check",
    "curvature_report",
    "space_form_check",
    "riemann_symmetry_check",
]


def _zero():
    return mpq(0)


def _is_zero(x) -> bool:
    return not x


def _require(jets: GaugeJets, T: int, what: str):
    if jets.order < T:
        raise OrderTooLow(f"{what} needs jets of order >= {T}, got {jets.order}")


class _Derivs:
    """Cached metric derivatives and Christoffel jets of a GaugeJets."""

    def __init__(self, jets: GaugeJets, idx: Sequence[int] | None = None, boundary: bool = False):
        self.jets = jets
        n = jets.n
        self.n = n
        self.idx = list(range(n)) if idx is None else list(idx)
        if boundary:
            N = n - 1
            self.g = [[jets.g[j][k].restrict(N) for k in range(n)] for j in range(n)]
            self.ginv = [[jets.ginv[j][k].restrict(N) for k in range(n)] for j in range(n)]
        else:
            self.g, self.ginv = jets.g, jets.ginv
        self._dg = {}
        self._gamma = {}

    def dg(self, j: int, k: int, l: int) -> Jet:
        key = (min(j, k), max(j, k), l)
        v = self._dg.get(key)
        if v is None:
            v = self._dg[key] = self.g[j][k].deriv(l)
        return v

    def gamma(self, j: int, k: int, l: int) -> Jet:
        """Gamma^l_{jk} as a jet."""
        key = (min(j, k), max(j, k), l)
        v = self._gamma.get(key)
        if v is None:
            acc = None
            for m in self.idx:
                gi = self.ginv[l][m]
                if not gi:
                    continue
                inner = self.dg(j, m, k) + self.dg(k, m, j) - self.dg(j, k, m)
                term = gi * inner
                acc = term if acc is None else acc + term
            if acc is None:
                acc = Jet.zero(self.n, self.jets.order - 1)
            v = self._gamma[key] = acc.scale(mpq(1, 2))
        return v

    def d2(self, j: int, k: int, a: int, b: int):
        """Value of d_a d_b g_{jk} at the base point."""
        e = [0] * self.n
        e[a] += 1
        e[b] += 1
        return self.g[j][k].taylor_derivative(e)


def christoffel(jets: GaugeJets, j: int, k: int, l: int) -> Jet:
    """Christoffel symbol Gamma^l_{jk} as a jet of order T - 1."""
    _require(jets, 1, "christoffel")
    return _Derivs(jets).gamma(j, k, l)


def christoffel_table(jets: GaugeJets) -> dict:
    d = _Derivs(jets)
    n = jets.n
    return {(j, k, l): d.gamma(j, k, l).value() for j in range(n) for k in range(n) for l in range(n)}


def _riemann_value(d: _Derivs, gvals, gam, j, k, l, m):
    r = (d.d2(j, l, k, m) + d.d2(k, m, j, l) - d.d2(j, m, k, l) - d.d2(k, l, j, m)) * mpq(1, 2)
    for p in d.idx:
        for h in d.idx:
            gph = gvals[p][h]
            if not gph:
                continue
            a = gam[(j, l, p)] * gam[(k, m, h)] - gam[(j, m, p)] * gam[(k, l, h)]
            if a:
                r = r + gph * a
    return r


def riemann_values(jets: GaugeJets, boundary: bool = False) -> dict:
    """All components R_{jklm}(x0) over the relevant index range.

    With ``boundary=True`` the tangential block restricted to x_n = 0 is
    treated as a metric on the boundary, giving its intrinsic curvature.
    """
    _require(jets, 2, "riemann")
    n = jets.n
    idx = list(range(n - 1)) if boundary else list(range(n))
    d = _Derivs(jets, idx, boundary)
    gvals = [[d.g[j][k].value() for k in range(n)] for j in range(n)]
    gam = {}
    for j in idx:
        for k in idx:
            for l in idx:
                gam[(j, k, l)] = d.gamma(j, k, l).value() if j <= k else gam[(k, j, l)]
    out = {}
    for j in idx:
        for k in idx:
            for l in idx:
                for m in idx:
                    if (j, k) <= (l, m):
                        out[(j, k, l, m)] = _riemann_value(d, gvals, gam, j, k, l, m)
                    else:
                        out[(j, k, l, m)] = out[(l, m, j, k)]
    return out


def riemann(jets: GaugeJets, j: int, k: int, l: int, m: int):
    """Ambient R_{jklm}(x0)."""
    _require(jets, 2, "riemann")
    d = _Derivs(jets)
    n = jets.n
    gvals = [[d.g[a][b].value() for b in range(n)] for a in range(n)]
    gam = {(a, b, c): d.gamma(a, b, c).value() for a in range(n) for b in range(n) for c in range(n)}
    return _riemann_value(d, gvals, gam, j, k, l, m)


def _riemann_jet(d: _Derivs, j, k, l, m) -> Jet:
    def d2(a, b, x, y):
        return d.dg(a, b, x).deriv(y)

    r = (d2(j, l, k, m) + d2(k, m, j, l) - d2(j, m, k, l) - d2(k, l, j, m)).scale(mpq(1, 2))
    for p in d.idx:
        for h in d.idx:
            gph = d.g[p][h]
            if not gph:
                continue
            a = d.gamma(j, l, p) * d.gamma(k, m, h) - d.gamma(j, m, p) * d.gamma(k, l, h)
            if a:
                r = r + gph * a
    return r


def _contract_ricci(rm: dict, ginv_vals, idx, j, k):
    acc = _zero()
    for l in idx:
        for m in idx:
            gi = ginv_vals[l][m]
            if gi:
                acc = acc + gi * rm[(j, l, m, k)]
    return acc


def ricci_scalar(jets: GaugeJets) -> dict:
    """Ambient Ricci and scalar curvature plus the intrinsic boundary ones."""
    _require(jets, 2, "ricci_scalar")
    n = jets.n
    full = list(range(n))
    tang = list(range(n - 1))
    gi = [[jets.ginv[j][k].value() for k in range(n)] for j in range(n)]
    rm = riemann_values(jets)
    ric = {(j, k): _contract_ricci(rm, gi, full, j, k) for j in full for k in full}
    scal = _zero()
    for j in full:
        for k in full:
            if gi[j][k]:
                scal = scal + gi[j][k] * ric[(j, k)]
    brm = riemann_values(jets, boundary=True)
    bric = {(a, b): _contract_ricci(brm, gi, tang, a, b) for a in tang for b in tang}
    bscal = _zero()
    for a in tang:
        for b in tang:
            if gi[a][b]:
                bscal = bscal + gi[a][b] * bric[(a, b)]
    return {
        "tildeRiemann": rm,
        "tildeRicci": ric,
        "tildeScalar": scal,
        "boundaryRiemann": brm,
        "boundaryRicci": bric,
        "boundaryScalar": bscal,
    }


def nabla_ric_nn(jets: GaugeJets):
    """(nabla_{d/dx_n} Ric)(d_n, d_n) at the base point."""
    _require(jets, 3, "nabla_ric_nn")
    n = jets.n
    N = n - 1
    d = _Derivs(jets)
    ric_nn = None
    for l in range(n):
        for m in range(n):
            gi = jets.ginv[l][m]
            if not gi:
                continue
            t = gi * _riemann_jet(d, N, l, m, N)
            ric_nn = t if ric_nn is None else ric_nn + t
    val = ric_nn.deriv(N).value()
    # -2 sum_j Gamma^j_nn R_jn; vanishes in the gauge but kept for generality
    rm = None
    for j in range(n):
        gjnn = d.gamma(N, N, j).value()
        if gjnn:
            if rm is None:
                rm = riemann_values(jets)
                gvals = [[jets.ginv[a][b].value() for b in range(n)] for a in range(n)]
            val = val - 2 * gjnn * _contract_ricci(rm, gvals, range(n), j, N)
    return val


def _phi_jets(jets: GaugeJets):
    n = jets.n
    dphi = [jets.phi.deriv(j) for j in range(n)]
    return dphi


def phi_v_report(jets: GaugeJets, need_normal_group: bool | None = None) -> dict:
    """Laplacian and gradient of phi, relayed jets of phi and V, and the
    normal derivative of ``Delta phi - |grad phi|^2 / 2 + 2 V``."""
    _require(jets, 1, "phi_v_report")
    n = jets.n
    N = n - 1
    phi = jets.phi
    out: dict = {}

    def pd(*ds):
        e = [0] * n
        for x in ds:
            e[x] += 1
        if sum(e) > phi.order:
            return None
        return phi.taylor_derivative(e)

    out["phi_grad"] = [pd(j) for j in range(n)]
    out["phi_hess"] = {(a, b): pd(a, b) for a in range(n) for b in range(a, n)} if phi.order >= 2 else {}
    out["phi_third"] = {}
    if phi.order >= 3:
        out["phi_third"] = {(a, b, c): pd(a, b, c) for a in range(n) for b in range(a, n) for c in range(b, n)}
    out["V"] = jets.V.value()
    out["V_grad"] = [jets.V.taylor_derivative([1 if i == j else 0 for i in range(n)]) for j in range(n)] if jets.V.order >= 1 else None
    gradsq = None
    lap = None
    d = _Derivs(jets)
    dphi = _phi_jets(jets)
    for j in range(n):
        for k in range(n):
            gi = jets.ginv[j][k]
            if not gi:
                continue
            t = gi * dphi[j] * dphi[k]
            gradsq = t if gradsq is None else gradsq + t
    out["gradPhiSq"] = gradsq.value() if gradsq is not None else _zero()
    if jets.order >= 2 and phi.order >= 2:
        for j in range(n):
            for k in range(n):
                gi = jets.ginv[j][k]
                if not gi:
                    continue
                inner = dphi[j].deriv(k)
                for l in range(n):
                    inner = inner - d.gamma(j, k, l) * dphi[l]
                t = gi * inner
                lap = t if lap is None else lap + t
        out["laplacePhi"] = lap.value() if lap is not None else _zero()
    else:
        out["laplacePhi"] = None
    # the same group read with coordinate sums in boundary normal coordinates
    out["coordLaplacePhi"] = _sum(pd(j, j) for j in range(n)) if phi.order >= 2 else None
    out["coordGradPhiSq"] = _sum(pd(j) * pd(j) for j in range(n))
    if phi.order >= 3 and jets.V.order >= 1:
        out["coordNormalDerivGroup"] = (
            _sum(pd(j, j, N) for j in range(n))
            - _sum(pd(j) * pd(j, N) for j in range(n))
            + out["V_grad"][N] * 2
        )
    else:
        out["coordNormalDerivGroup"] = None
    if need_normal_group is None:
        need_normal_group = jets.order >= 3
    if need_normal_group:
        if jets.order < 3 or lap is None:
            raise OrderTooLow("the normal-derivative group needs jets of order >= 3")
        group = lap - gradsq.scale(mpq(1, 2)) + jets.V.scale(2)
        out["normalDerivGroup"] = group.deriv(N).value()
    else:
        out["normalDerivGroup"] = None
    return out


@dataclass
class CurvatureReport:
    n: int
    kappa: list
    H: object
    h: dict
    tildeRiemann: dict
    tildeRicci: dict
    tildeScalar: object
    boundaryRiemann: dict
    boundaryRicci: dict
    boundaryScalar: object
    nablaRicNN: object
    laplacePhi: object
    gradPhiSq: object
    phi_grad: list
    phi_hess: dict
    phi_third: dict
    V: object
    V_grad: object
    normalDerivGroup: object
    K0: object = None
    coordLaplacePhi: object = None
    coordGradPhiSq: object = None
    coordNormalDerivGroup: object = None
    extra: dict = field(default_factory=dict)

    # convenience accessors used by the reference formulas
    @property
    def m(self) -> int:
        return self.n - 1

    @property
    def phi_n(self):
        return self.phi_grad[self.n - 1]

    def phi_at(self, *idx):
        k = tuple(sorted(idx))
        if len(k) == 1:
            return self.phi_grad[k[0]]
        if len(k) == 2:
            return self.phi_hess[k]
        return self.phi_third[k]

    @cached_property
    def sum_kappa2(self):
        return _sum(k * k for k in self.kappa)

    @cached_property
    def sum_kappa3(self):
        return _sum(k * k * k for k in self.kappa)

    @cached_property
    def sum_kappa_tildeRic(self):
        return _sum(self.kappa[a] * self.tildeRicci[(a, a)] for a in range(self.m))

    @cached_property
    def sum_kappa_Ric(self):
        return _sum(self.kappa[a] * self.boundaryRicci[(a, a)] for a in range(self.m))

    @property
    def tildeRicNN(self):
        return self.tildeRicci[(self.n - 1, self.n - 1)]


def _sum(it):
    acc = _zero()
    for x in it:
        acc = acc + x
    return acc


def curvature_report(jets: GaugeJets) -> CurvatureReport:
    """All base-point quantities the coefficient formulas refer to."""
    _require(jets, 1, "curvature_report")
    n = jets.n
    m = n - 1
    N = n - 1
    unit_n = [0] * n
    unit_n[N] = 1
    h = {}
    for a in range(m):
        for b in range(m):
            h[(a, b)] = jets.g[a][b].taylor_derivative(unit_n) * mpq(-1, 2)
    kappa = [h[(a, a)] for a in range(m)]
    H = _sum(kappa)
    curv = ricci_scalar(jets) if jets.order >= 2 else None
    nab = nabla_ric_nn(jets) if jets.order >= 3 else None
    pv = phi_v_report(jets)
    K0 = jets.K0
    return CurvatureReport(
        n=n,
        kappa=kappa,
        H=H,
        h=h,
        tildeRiemann=curv["tildeRiemann"] if curv else {},
        tildeRicci=curv["tildeRicci"] if curv else {},
        tildeScalar=curv["tildeScalar"] if curv else None,
        boundaryRiemann=curv["boundaryRiemann"] if curv else {},
        boundaryRicci=curv["boundaryRicci"] if curv else {},
        boundaryScalar=curv["boundaryScalar"] if curv else None,
        nablaRicNN=nab,
        laplacePhi=pv["laplacePhi"],
        gradPhiSq=pv["gradPhiSq"],
        phi_grad=pv["phi_grad"],
        phi_hess=pv["phi_hess"],
        phi_third=pv["phi_third"],
        V=pv["V"],
        V_grad=pv["V_grad"],
        normalDerivGroup=pv["normalDerivGroup"],
        K0=K0,
        coordLaplacePhi=pv["coordLaplacePhi"],
        coordGradPhiSq=pv["coordGradPhiSq"],
        coordNormalDerivGroup=pv["coordNormalDerivGroup"],
    )


# identity checks -----------------------------------------------------------


def _eq(a, b) -> bool:
    return not (a - b)


def lemma21_check(jets: GaugeJets) -> bool:
    """Normal second jets of the metric and its inverse in terms of curvature:
    sum g_{aa,nn} = 3 sum k^2 - H^2 - tildeR + R and
    sum g^{aa,nn} = 5 sum k^2 + H^2 + tildeR - R."""
    rep = curvature_report(jets)
    n = jets.n
    e = [0] * n
    e[n - 1] = 2
    lhs1 = _sum(jets.g[a][a].taylor_derivative(e) for a in range(n - 1))
    lhs2 = _sum(jets.ginv[a][a].taylor_derivative(e) for a in range(n - 1))
    k2, H, Rt, R = rep.sum_kappa2, rep.H, rep.tildeScalar, rep.boundaryScalar
    return _eq(lhs1, 3 * k2 - H * H - Rt + R) and _eq(lhs2, 5 * k2 + H * H + Rt - R)


def gauss_check(rep: CurvatureReport) -> bool:
    """Gauss equation componentwise, and its traced forms for R_aa and R."""
    m = rep.m
    N = rep.n - 1
    h = rep.h
    for (a, b, c, d), v in rep.boundaryRiemann.items():
        rhs = rep.tildeRiemann[(a, b, c, d)] + h[(a, d)] * h[(b, c)] - h[(a, c)] * h[(b, d)]
        if not _eq(v, rhs):
            return False
    H = rep.H
    for a in range(m):
        rhs = rep.tildeRicci[(a, a)] - rep.tildeRiemann[(N, a, a, N)] + H * rep.kappa[a] - rep.kappa[a] * rep.kappa[a]
        if not _eq(rep.boundaryRicci[(a, a)], rhs):
            return False
    rhs = rep.tildeScalar - 2 * rep.tildeRicNN + H * H - rep.sum_kappa2
    return _eq(rep.boundaryScalar, rhs)


def riemann_symmetry_check(rm: dict) -> bool:
    """Antisymmetry in each pair, pair exchange and first Bianchi."""
    for (j, k, l, m), v in rm.items():
        if not _eq(v, -rm[(k, j, l, m)]) or not _eq(v, -rm[(j, k, m, l)]) or not _eq(v, rm[(l, m, j, k)]):
            return False
        if not _eq(v + rm[(j, l, m, k)] + rm[(j, m, k, l)], 0):
            return False
    return True


def space_form_check(jets: GaugeJets, rep: CurvatureReport | None = None) -> dict:
    """Relations that hold on a space form of curvature K0.

    Returns a dict of named booleans: the ambient tensor has the constant
    curvature form, tildeR = n(n-1)K0, nabla Ric_nn = 0, and the two
    consequences of the Gauss equation for sum k^2 and sum k R_aa.
    """
    rep = rep or curvature_report(jets)
    n = jets.n
    K0 = rep.K0
    gv = [[jets.g[j][k].value() for k in range(n)] for j in range(n)]
    form = all(
        _eq(v, K0 * (gv[j][m] * gv[k][l] - gv[j][l] * gv[k][m]))
        for (j, k, l, m), v in rep.tildeRiemann.items()
    )
    H, R = rep.H, rep.boundaryScalar
    out = {
        "constant_curvature_form": form,
        "scalar": _eq(rep.tildeScalar, K0 * (n * (n - 1))),
        "nabla_ric_nn": rep.nablaRicNN is None or _eq(rep.nablaRicNN, 0),
        "sum_kappa_sq": _eq(rep.sum_kappa2, K0 * ((n - 1) * (n - 2)) + H * H - R),
        "sum_kappa_ric": _eq(rep.sum_kappa_Ric, H * H * H + K0 * H * (n * (n - 2)) - H * R - rep.sum_kappa3),
    }
    return out
