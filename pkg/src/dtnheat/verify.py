"""Verification runs: the engine against the closed forms, the symbol
equations against themselves, the moment formula against quadrature.

Every runner returns a list of :class:`Check` records.  Checks compare exact
rationals or atom polynomials; a seeded instantiation of the free atoms turns
a polynomial identity into a Schwartz-Zippel test with small rationals.
"""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass, field

from gmpy2 import mpq

from .exact_algebra import AtomPoly, format_rational
from .factorization import factorization_residual, factorize
from .geometry import (
    curvature_report,
    gauss_check,
    lemma21_check,
    riemann_symmetry_check,
    riemann_values,
    space_form_check,
)
from .jets import EuclideanBall, RandomGauge, SpaceFormBall, build_gauge_jets, instantiate, random_assignment
from .parametrix import explicit_s, parametrix
from .reference import ref_eval
from .trace import BoundaryOfValidity, DivergentMoment, heat_coefficients, moment, phi_v_split

__all__ = [
    "Check",
    "summarize",
    "check_a0",
    "check_coefficients",
    "check_phi_v_part",
    "check_full_a3",
    "check_space_forms",
    "check_factorization",
    "check_geometry",
    "check_moments",
    "sphere_moment_quadrature",
    "radial_moment_quadrature",
    "MOMENT_RTOL",
]

MOMENT_RTOL = 1e-6


@dataclass
class Check:
    name: str
    passed: bool
    params: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self) -> dict:
        # no timings: identical runs must give identical reports
        return {"name": self.name, "passed": self.passed, "params": self.params, "detail": self.detail}


def summarize(checks: list) -> dict:
    failed = [c.name for c in checks if not c.passed]
    return {"total": len(checks), "failed": len(failed), "passed": not failed}


def _text(v) -> str:
    if isinstance(v, AtomPoly):
        return v.to_str()
    return format_rational(mpq(v))


def _zero(v) -> bool:
    return not v if isinstance(v, AtomPoly) else v == 0


def _jets(scenario, n: int, T: int, seed: int | None):
    """Gauge jets, instantiated with seeded rationals when ``seed`` is given."""
    S = build_gauge_jets(scenario, n, T)
    if seed is None:
        return S
    return instantiate(S, random_assignment(S.atoms, seed))


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _coefficients(J, max_k: int, drift: str):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryOfValidity)
        return heat_coefficients(J, max_k, drift)


# coefficients --------------------------------------------------------------


def check_a0(dims, scenarios=None) -> list:
    """ahat_0 = Gamma(n-1) with no atoms left, for each scenario."""
    scenarios = scenarios or {
        "gauge": RandomGauge(),
        "ball": EuclideanBall(1, phi=True, potential=True),
        "space-form": SpaceFormBall(phi=True, potential=True),
    }
    out = []
    for n in dims:
        for label, sc in scenarios.items():
            J = build_gauge_jets(sc, n, 1)
            (res,), dt = _timed(lambda: _coefficients(J, 0, "flat"))
            want = mpq(math.factorial(n - 2))
            got = res.ahat
            ok = not isinstance(got, AtomPoly) and got == want
            out.append(Check("a0", ok, {"n": n, "scenario": label}, {"ahat": _text(got), "expected": _text(want)}, dt))
    return out


def check_coefficients(dims, max_k: int = 2, seeds=(0,), symbolic: bool = False, drift: str = "flat") -> list:
    """Engine ahat_k against the closed form A_k, k <= min(max_k, n - 1, 3).

    With ``symbolic`` the comparison is an exact identity in the free atoms
    of the generic gauge (seeds are ignored); otherwise each seed draws one
    rational instantiation of all atoms.
    """
    out = []
    for n in dims:
        K = min(max_k, n - 1, 3)
        runs = [None] if symbolic else list(seeds)
        for seed in runs:
            J = _jets(RandomGauge(), n, K, seed)

            def work():
                res = _coefficients(J, K, drift)
                rep = curvature_report(J)
                return res, rep

            (res, rep), dt = _timed(work)
            for k in range(1, K + 1):
                want = ref_eval(f"A{k}", rep, n)
                diff = res[k].ahat - want
                params = {"n": n, "k": k, "seed": seed, "symbolic": symbolic}
                detail = {"difference": _text(diff)}
                if not symbolic:
                    detail.update({"ahat": _text(res[k].ahat), "expected": _text(want)})
                out.append(Check(f"a{k}", _zero(diff), params, detail, dt))
    return out


def check_phi_v_part(dims, seeds=(0,), k: int = 3, drift: str = "flat", keep: dict | None = None) -> list:
    """phi, V part of ahat_k (engine with and without phi, V) against
    A_k - TildeA_k.  ``keep`` collects the full results by (n, seed) for reuse."""
    out = []
    for n in dims:
        for seed in seeds:
            J = _jets(RandomGauge(), n, k, seed)

            def work():
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", BoundaryOfValidity)
                    split = phi_v_split(J, n, k, drift)
                return split, curvature_report(J)

            (split, rep), dt = _timed(work)
            if keep is not None:
                keep[(n, seed)] = (split["full"], rep)
            want = ref_eval(f"A{k}", rep, n) - ref_eval(f"TildeA{k}", rep, n)
            diff = split["phiV"].ahat - want
            detail = {"difference": _text(diff), "phiV": _text(split["phiV"].ahat), "expected": _text(want)}
            out.append(Check(f"phiV{k}", _zero(diff), {"n": n, "seed": seed}, detail, dt))
    return out


def check_full_a3(dims, seeds=(0,), drift: str = "flat", cached: dict | None = None) -> list:
    """Full ahat_3 on the generic gauge against A3 (and the classical part
    against TildeA3, which locates a failure)."""
    out = []
    for n in dims:
        for seed in seeds:
            if cached is not None and (n, seed) in cached:
                full, rep = cached[(n, seed)]
                dt = 0.0
            else:
                J = _jets(RandomGauge(), n, 3, seed)

                def work():
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", BoundaryOfValidity)
                        split = phi_v_split(J, n, 3, drift)
                    return split["full"], curvature_report(J)

                (full, rep), dt = _timed(work)
            d_full = full.ahat - ref_eval("A3", rep, n)
            d_classical = full.classical - ref_eval("TildeA3", rep, n)
            detail = {"difference": _text(d_full), "classical_difference": _text(d_classical)}
            out.append(Check("a3", _zero(d_full), {"n": n, "seed": seed}, detail, dt))
    return out


def check_space_forms(dims, max_k: int = 3, drift: str = "flat") -> list:
    """Symbolic space-form balls (K0 and kappa free) and the unit flat ball:
    engine ahat_2, ahat_3 against B_k and A_k."""
    out = []
    scenarios = {"space-form": SpaceFormBall(), "ball": EuclideanBall(1)}
    for n in dims:
        K = min(max_k, n - 1, 3)
        for label, sc in scenarios.items():
            J = build_gauge_jets(sc, n, K)

            def work():
                return _coefficients(J, K, drift), curvature_report(J)

            (res, rep), dt = _timed(work)
            for k in range(2, K + 1):
                for kind in (f"B{k}", f"A{k}"):
                    diff = res[k].ahat - ref_eval(kind, rep, n)
                    params = {"n": n, "k": k, "scenario": label, "formula": kind}
                    detail = {"ahat": _text(res[k].ahat), "difference": _text(diff)}
                    out.append(Check(f"space-form a{k}", _zero(diff), params, detail, dt))
    return out


# factorization ----------------------------------------------------------------


def check_factorization(dims, depth: int = 3, seeds=(0,), scenario=None, drift: str = "flat",
                        explicit_levels=(2, 3, 4)) -> list:
    """Empty residual of the symbol equation at every computed degree, and
    the recursive parametrix levels against their written-out forms."""
    out = []
    scenario = scenario or RandomGauge()
    for n in dims:
        T = min(depth, 3)
        for seed in seeds:
            J = _jets(scenario, n, T, seed)

            def work():
                fact = factorize(J, depth, drift)
                return fact, factorization_residual(fact)

            (fact, res), dt = _timed(work)
            nonempty = sorted(d for d, comp in res.items() if comp)
            params = {"n": n, "depth": depth, "seed": seed}
            out.append(Check("residual", not nonempty, params,
                             {"degrees": sorted(res, reverse=True), "nonempty": nonempty}, dt))
            levels = [lv for lv in explicit_levels if lv <= min(depth, T + 1)]
            if not levels:
                continue

            def work2():
                par = parametrix(fact, max(levels) - 1, trim=False)
                bad = []
                for lv in levels:
                    mine = par.parts[-lv]
                    written = explicit_s(par, lv)
                    order = min(mine.min_order(), written.min_order())
                    if (mine - written).truncate(order):
                        bad.append(lv)
                return bad

            bad, dt2 = _timed(work2)
            out.append(Check("parametrix levels", not bad, dict(params, levels=levels), {"mismatched": bad}, dt2))
    return out


# geometry -------------------------------------------------------------------


def check_geometry(dims, seeds=(None,)) -> list:
    """Normal-gauge metric identities, Gauss equation and Riemann symmetries on the
    generic gauge; constant-curvature relations on symbolic space forms."""
    out = []
    for n in dims:
        for seed in seeds:
            J = _jets(RandomGauge(), n, 3, seed)

            def work():
                rep = curvature_report(J)
                return {
                    "lemma21": lemma21_check(J),
                    "gauss": gauss_check(rep),
                    "riemann_symmetries": riemann_symmetry_check(riemann_values(J))
                    and riemann_symmetry_check(rep.boundaryRiemann),
                }

            res, dt = _timed(work)
            for name, ok in res.items():
                out.append(Check(name, bool(ok), {"n": n, "seed": seed}, {}, dt / len(res)))
        J = build_gauge_jets(SpaceFormBall(), n, 3)
        res, dt = _timed(lambda: space_form_check(J))
        for name, ok in res.items():
            out.append(Check(f"space-form {name}", bool(ok), {"n": n}, {}, dt / len(res)))
    return out


# moments ----------------------------------------------------------------------


def sphere_moment_quadrature(mu) -> float:
    """Integral of xi^mu over the unit sphere in R^d, d = len(mu), by nested
    Gauss-Jacobi rules in the first coordinate."""
    from scipy.special import roots_jacobi

    mu = tuple(mu)
    d = len(mu)
    if d == 1:
        return 1.0 + (-1.0) ** mu[0]
    rest = sum(mu[1:])
    inner = sphere_moment_quadrature(mu[1:])
    if inner == 0.0 or rest % 2:
        return 0.0
    # xi_1 = t, the others sqrt(1 - t^2) eta; weight (1 - t^2)^{(d-3)/2}
    nodes = (mu[0] + rest) // 2 + 2
    a = (d - 3) / 2
    t, w = roots_jacobi(nodes, a, a)
    return float(math.fsum(w * t ** mu[0] * (1 - t * t) ** (rest // 2))) * inner


def radial_moment_quadrature(a: int) -> float:
    """int_0^inf r^a e^{-r} dr by adaptive quadrature."""
    from scipy.integrate import quad

    v, _ = quad(lambda r: r**a * math.exp(-r), 0, math.inf, epsabs=0, epsrel=1e-12, limit=200)
    return v


def check_moments(dims, max_degree: int = 6, max_p: int = 6, rtol: float = MOMENT_RTOL) -> list:
    """moment(n, p, mu) against quadrature for |p| <= max_p, |mu| <= max_degree.

    One check per n; the detail lists the worst relative error and any
    combination where the formula should have refused but did not (or the
    reverse).
    """
    out = []
    for n in dims:
        d = n - 1
        t0 = time.perf_counter()
        omega = sphere_moment_quadrature((0,) * d)
        sphere: dict = {}
        radial: dict = {}
        worst = 0.0
        worst_at = None
        bad = []
        count = 0
        for total in range(max_degree + 1):
            for mu in _exponents(d, total):
                key = tuple(sorted(mu))
                if key not in sphere:
                    sphere[key] = sphere_moment_quadrature(key) / omega
                for p in range(-max_p, max_p + 1):
                    a = d - 1 + p + total
                    try:
                        got = moment(n, p, mu)
                    except DivergentMoment:
                        if a >= 0 and sphere[key] != 0.0:
                            bad.append(f"p={p} mu={list(mu)}: refused a convergent moment")
                        continue
                    if a < 0 and sphere[key] != 0.0:
                        bad.append(f"p={p} mu={list(mu)}: accepted a divergent moment")
                        continue
                    count += 1
                    if sphere[key] == 0.0:
                        if got != 0:
                            bad.append(f"p={p} mu={list(mu)}: expected 0")
                        continue
                    if a not in radial:
                        radial[a] = radial_moment_quadrature(a)
                    ref = radial[a] * sphere[key]
                    err = abs(float(got) - ref) / abs(ref)
                    if err > worst:
                        worst, worst_at = err, f"p={p} mu={list(mu)}"
                    if err > rtol:
                        bad.append(f"p={p} mu={list(mu)}: relative error {err:.2e}")
        dt = time.perf_counter() - t0
        detail = {"compared": count, "worst_relative_error": f"{worst:.3e}", "worst_at": worst_at, "failures": bad[:20]}
        out.append(Check("moments", not bad, {"n": n, "max_degree": max_degree, "max_p": max_p}, detail, dt))
    return out


def _exponents(d: int, total: int):
    for c in itertools.combinations_with_replacement(range(d), total):
        e = [0] * d
        for i in c:
            e[i] += 1
        yield tuple(e)
