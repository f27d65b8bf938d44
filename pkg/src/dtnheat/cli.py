"""Command-line entry point.

    dtnheat expand --dim 4 --max-k 2 [--scenario gauge|ball|space-form] [--format text|latex|json]
    dtnheat verify coefficients --dims 3..6 --max-k 2 --seed 7 [--trials 3] [--symbolic]
    dtnheat verify a3 --dims 4..5
    dtnheat verify factorization --dim 4 --depth 3
    dtnheat verify geometry --dims 3..6
    dtnheat verify moments --dim 5 --max-degree 6
    dtnheat numeric disk --phi 0,0,0.5
    dtnheat geometry --dim 3 --scenario ball

Exit codes: 0 pass, 1 verification failure, 2 usage error.  Symbolic output
writes rationals as "p/q" strings; JSON output is deterministic for a given
command line.  The thread count for the numeric spectra is read from the
DTNHEAT_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import asdict, dataclass, field

from .exact_algebra import AtomPoly, format_rational
from .jets import EuclideanBall, RandomGauge, SpaceFormBall, build_gauge_jets
from .reference import ref_eval, ref_latex

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    dims: list = field(default_factory=list)
    max_k: int | None = None
    scenario: str = "gauge"
    seed: int = 0
    trials: int = 1
    symbolic: bool = False
    output: str = "text"
    drift: str = "flat"
    depth: int | None = None
    max_degree: int | None = None
    max_p: int | None = None
    geometry: str | None = None
    phi: list = field(default_factory=list)
    V: list = field(default_factory=list)
    modes: int | None = None
    window: list = field(default_factory=list)
    points: int | None = None
    terms: int | None = None
    tol: float | None = None
    weyl_tau: float | None = None

    def validate(self):
        if self.output not in ("text", "latex", "json"):
            raise UsageError(f"unknown format {self.output!r}")
        if any(n < 2 for n in self.dims):
            raise UsageError("dimensions must be at least 2")
        if self.trials < 1:
            raise UsageError("--trials must be positive")
        if self.command == "expand":
            n = self.dims[0]
            if self.max_k < 0:
                raise UsageError("--max-k must be nonnegative")
            if self.max_k > min(3, n - 1):
                raise UsageError(f"k = {self.max_k} exceeds the valid range k <= min(3, n - 1) = {min(3, n - 1)}")
        if self.command == "verify factorization" and not 1 <= self.depth <= 3:
            raise UsageError("--depth must be 1, 2 or 3 (jets are available through order 3)")
        if self.command == "numeric":
            if len(self.window) != 2 or not 0 < self.window[0] < self.window[1]:
                raise UsageError("--window needs two increasing positive numbers")
        return self

    @property
    def seeds(self) -> list:
        return list(range(self.seed, self.seed + self.trials))


# argument parsing -------------------------------------------------------------


def _dims(text: str) -> list:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}; use 4, 3,5 or 3..6") from None


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",")] if text.strip() else []
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dtnheat", description="Heat-trace coefficients of the Dirichlet-to-Neumann map.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt(q):
        q.add_argument("--format", dest="output", choices=("text", "latex", "json"), default="text")

    e = sub.add_parser("expand", help="print ahat_0 .. ahat_k as atom polynomials")
    e.add_argument("--dim", type=int, required=True)
    e.add_argument("--max-k", type=int, required=True)
    e.add_argument("--scenario", choices=("gauge", "ball", "space-form"), default="gauge")
    e.add_argument("--drift", choices=("flat", "covariant"), default="flat")
    fmt(e)

    v = sub.add_parser("verify", help="run acceptance checks")
    vs = v.add_subparsers(dest="what", required=True, parser_class=_Parser)
    vc = vs.add_parser("coefficients", help="ahat_1 .. ahat_k against the closed forms")
    vc.add_argument("--dims", type=_dims, default=_dims("3..6"))
    vc.add_argument("--max-k", type=int, default=2)
    vc.add_argument("--symbolic", action="store_true", help="exact identity in the free atoms instead of seeded draws")
    va = vs.add_parser("a3", help="phi, V part and full ahat_3, generic gauge and space forms")
    va.add_argument("--dims", type=_dims, default=_dims("4..5"))
    vf = vs.add_parser("factorization", help="symbol-equation residual and parametrix levels")
    vf.add_argument("--dim", "--dims", dest="dims", type=_dims, default=[4])
    vf.add_argument("--depth", type=int, default=3)
    vg = vs.add_parser("geometry", help="curvature identities")
    vg.add_argument("--dim", "--dims", dest="dims", type=_dims, default=_dims("3..6"))
    vm = vs.add_parser("moments", help="moment formula against quadrature")
    vm.add_argument("--dim", "--dims", dest="dims", type=_dims, default=_dims("3..6"))
    vm.add_argument("--max-degree", type=int, default=6)
    vm.add_argument("--max-p", type=int, default=6)
    for q in (vc, va, vf, vg, vm):
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--trials", type=int, default=1)
        q.add_argument("--drift", choices=("flat", "covariant"), default="flat")
        fmt(q)

    nm = sub.add_parser("numeric", help="Steklov spectrum, heat trace and fitted coefficients")
    nm.add_argument("geometry", choices=("disk", "ball"))
    nm.add_argument("--phi", type=_floats, default=[], help="radial coefficients phi_0,phi_1,... of phi(r)")
    nm.add_argument("--V", type=_floats, default=[], help="radial coefficients of V(r)")
    nm.add_argument("--modes", type=int, default=800)
    nm.add_argument("--window", type=_floats, default=[0.05, 0.6])
    nm.add_argument("--points", type=int, default=40)
    nm.add_argument("--terms", type=int, default=None, help="number of fitted coefficients (default n)")
    nm.add_argument("--tol", type=float, default=1e-3)
    nm.add_argument("--weyl-tau", type=float, default=50.0)
    fmt(nm)

    g = sub.add_parser("geometry", help="curvature report of a scenario")
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--scenario", choices=("gauge", "ball", "space-form"), default="gauge")
    g.add_argument("--order", type=int, default=3)
    fmt(g)
    return p


def config_from_args(a) -> RunConfig:
    if a.command == "expand":
        c = RunConfig("expand", [a.dim], a.max_k, a.scenario, output=a.output, drift=a.drift)
    elif a.command == "verify":
        c = RunConfig(f"verify {a.what}", a.dims, seed=a.seed, trials=a.trials, output=a.output, drift=a.drift)
        if a.what == "coefficients":
            c.max_k, c.symbolic = a.max_k, a.symbolic
        elif a.what == "factorization":
            c.depth = a.depth
        elif a.what == "moments":
            c.max_degree, c.max_p = a.max_degree, a.max_p
    elif a.command == "numeric":
        c = RunConfig("numeric", output=a.output, geometry=a.geometry, phi=a.phi, V=a.V, modes=a.modes,
                      window=a.window, points=a.points, terms=a.terms, tol=a.tol, weyl_tau=a.weyl_tau)
    else:
        c = RunConfig("geometry", [a.dim], scenario=a.scenario, output=a.output, depth=a.order)
    return c.validate()


# output helpers ------------------------------------------------------------------


def _rat(v) -> str:
    if isinstance(v, AtomPoly):
        return v.to_str()
    return format_rational(v)


def _tex(v) -> str:
    if isinstance(v, AtomPoly):
        return v.to_latex()
    v = AtomPoly.const(v)
    return v.to_latex()


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2)


def _scenario(name: str):
    return {"gauge": RandomGauge(), "ball": EuclideanBall(1, phi=True, potential=True),
            "space-form": SpaceFormBall(phi=True, potential=True)}[name]


# commands -----------------------------------------------------------------------


def cmd_expand(c: RunConfig, out) -> int:
    from .geometry import curvature_report
    from .trace import BoundaryOfValidity, heat_coefficients

    n, K = c.dims[0], c.max_k
    J = build_gauge_jets(_scenario(c.scenario), n, max(K, 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryOfValidity)
        res = heat_coefficients(J, K, c.drift)
    rep = curvature_report(J)
    records = []
    for r in res:
        rec = {"k": r.k, "ahat": r.ahat, "flags": list(r.flags)}
        kind = f"A{r.k}"
        try:
            want = ref_eval(kind, rep, n)
            rec["closed_form"] = ref_latex(kind, n)
            rec["matches_closed_form"] = not (r.ahat - want)
            if not rec["matches_closed_form"]:
                rec["difference"] = r.ahat - want
        except ValueError:
            pass
        records.append(rec)
    prefactor = f"omega_{n - 2} / (2 pi)^{n - 1}"
    if c.output == "json":
        doc = {"schema": SCHEMA, "command": "expand", "n": n, "scenario": c.scenario, "drift": c.drift,
               "prefactor": prefactor, "coefficients": []}
        for rec in records:
            d = {k: (_rat(v) if k in ("ahat", "difference") else v) for k, v in rec.items()}
            doc["coefficients"].append(d)
        print(_dump(doc), file=out)
        return EXIT_OK
    if c.output == "latex":
        print(rf"% a_k(x_0) = \frac{{\omega_{{{n - 2}}}}}{{(2\pi)^{{{n - 1}}}}}\,\hat a_k, n = {n}", file=out)
        for rec in records:
            print(rf"\hat a_{{{rec['k']}}} = {_tex(rec['ahat'])}", file=out)
            if "closed_form" in rec:
                mark = "" if rec["matches_closed_form"] else "  % differs from the closed form"
                print(rf"\quad = {rec['closed_form']}{mark}" if rec["matches_closed_form"]
                      else rf"\quad \ne {rec['closed_form']}{mark}", file=out)
        return EXIT_OK
    print(f"n = {n}, scenario = {c.scenario}: a_k(x0) = {prefactor} * ahat_k", file=out)
    for rec in records:
        flags = f"  [{', '.join(rec['flags'])}]" if rec["flags"] else ""
        print(f"ahat_{rec['k']} = {_rat(rec['ahat'])}{flags}", file=out)
        if "closed_form" in rec:
            status = "matches" if rec["matches_closed_form"] else f"differs by {_rat(rec['difference'])}"
            print(f"  closed form {rec['closed_form']}: {status}", file=out)
    return EXIT_OK


def _run_checks(c: RunConfig) -> list:
    from . import verify as V

    what = c.command.split(" ", 1)[1]
    if what == "coefficients":
        return V.check_coefficients(c.dims, c.max_k, c.seeds, c.symbolic, c.drift)
    if what == "a3":
        dims = [n for n in c.dims if n >= 4]
        if not dims:
            raise UsageError("ahat_3 needs n >= 4")
        keep: dict = {}
        checks = V.check_phi_v_part(dims, c.seeds, 3, c.drift, keep)
        checks += V.check_full_a3(dims, c.seeds, c.drift, keep)
        checks += [x for x in V.check_space_forms(dims, 3, c.drift) if x.params["k"] == 3]
        return checks
    if what == "factorization":
        return V.check_factorization(c.dims, c.depth, c.seeds, drift=c.drift)
    if what == "geometry":
        return V.check_geometry(c.dims, c.seeds)
    return V.check_moments(c.dims, c.max_degree, c.max_p)


def cmd_verify(c: RunConfig, out) -> int:
    from .verify import summarize

    checks = _run_checks(c)
    summary = summarize(checks)
    if c.output == "json":
        cfg = {k: v for k, v in asdict(c).items() if v not in (None, [], "")}
        doc = {"schema": SCHEMA, "command": c.command, "config": cfg,
               "checks": [x.to_json() for x in checks], "summary": summary}
        print(_dump(doc), file=out)
    else:
        for x in checks:
            params = " ".join(f"{k}={v}" for k, v in x.params.items())
            line = f"{'PASS' if x.passed else 'FAIL'} {x.name} {params}"
            if not x.passed and "difference" in x.detail:
                line += f"  difference: {x.detail['difference']}"
            elif not x.passed and x.detail:
                line += f"  {x.detail}"
            print(line, file=out)
        print(f"{'PASS' if summary['passed'] else 'FAIL'}: {summary['total'] - summary['failed']}/{summary['total']} checks",
              file=out)
    return EXIT_OK if summary["passed"] else EXIT_FAIL


def cmd_numeric(c: RunConfig, out) -> int:
    from . import steklov as S

    prob = S.RadialProblem(c.geometry, tuple(c.phi), tuple(c.V), c.modes)
    n = prob.d
    K = n if c.terms is None else c.terms
    if not 1 <= K <= n:
        raise UsageError(f"--terms must be between 1 and {n}")
    spec = S.steklov_spectrum(prob)
    t = S.t_grid(tuple(c.window), c.points)
    trace = S.heat_trace(spec, t)
    fit = S.fit_asymptotics(t, trace, n, K)
    pred = S.predict_coefficients(prob, K)
    rows = []
    ok = True
    for k in range(K):
        err = abs(float(fit.coefficients[k]) - pred[k])
        good = err <= c.tol
        ok &= good
        rows.append({"k": k, "fitted": float(fit.coefficients[k]), "stderr": float(fit.errors[k]),
                     "predicted": pred[k], "abs_error": err, "pass": good})
    weyl = None
    if c.weyl_tau:
        try:
            weyl = S.weyl_ratio(spec, c.weyl_tau)
        except S.CutoffTooSmall:
            weyl = None
    lowest = spec.sorted()[:6]
    if c.output == "json":
        doc = {"schema": SCHEMA, "command": "numeric", "geometry": c.geometry, "n": n, "phi": c.phi, "V": c.V,
               "modes": c.modes, "window": c.window, "points": c.points, "guards": list(S.DEFAULT_GUARDS),
               "tolerance": c.tol, "lowest_eigenvalues": [[lam, m] for lam, m in lowest],
               "condition": fit.condition, "coefficients": rows, "weyl_ratio": weyl, "passed": ok}
        print(_dump(doc), file=out)
    else:
        print(f"{c.geometry}: n = {n}, phi = {c.phi or [0]}, V = {c.V or [0]}, modes = {c.modes}", file=out)
        print("lowest eigenvalues: " + ", ".join(f"{lam:.10g} (x{m})" for lam, m in lowest), file=out)
        print(f"fit on t in [{c.window[0]}, {c.window[1]}], {c.points} points, condition {fit.condition:.3e}", file=out)
        print(f"{'k':>2} {'fitted':>16} {'predicted':>16} {'error':>10}", file=out)
        for r in rows:
            mark = "" if r["pass"] else "  FAIL"
            print(f"{r['k']:>2} {r['fitted']:>16.9f} {r['predicted']:>16.9f} {r['abs_error']:>10.2e}{mark}", file=out)
        if weyl is not None:
            print(f"Weyl ratio at tau = {c.weyl_tau:g}: {weyl:.5f}", file=out)
        print("PASS" if ok else "FAIL", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_geometry(c: RunConfig, out) -> int:
    from .geometry import curvature_report

    J = build_gauge_jets(_scenario(c.scenario), c.dims[0], c.depth)
    rep = curvature_report(J)
    fields = {
        "H": rep.H, "sum_kappa2": rep.sum_kappa2, "sum_kappa3": rep.sum_kappa3,
        "tildeScalar": rep.tildeScalar, "boundaryScalar": rep.boundaryScalar,
        "tildeRicNN": rep.tildeRicNN, "nablaRicNN": rep.nablaRicNN,
        # coordinate sums are the reading the closed forms use
        "laplacePhi": rep.coordLaplacePhi, "gradPhiSq": rep.coordGradPhiSq,
        "normalDerivGroup": rep.coordNormalDerivGroup,
        "covariantLaplacePhi": rep.laplacePhi, "covariantNormalDerivGroup": rep.normalDerivGroup,
    }
    fields = {k: v for k, v in fields.items() if v is not None}
    if c.output == "json":
        doc = {"schema": SCHEMA, "command": "geometry", "n": rep.n, "scenario": c.scenario,
               "kappa": [_rat(k) for k in rep.kappa], **{k: _rat(v) for k, v in fields.items()}}
        print(_dump(doc), file=out)
    else:
        show = _tex if c.output == "latex" else _rat
        for k, v in fields.items():
            print(f"{k} = {show(v)}", file=out)
    return EXIT_OK


COMMANDS = {"expand": cmd_expand, "verify": cmd_verify, "numeric": cmd_numeric, "geometry": cmd_geometry}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return COMMANDS[config.command.split(" ")[0]](config, out)
    except (UsageError, ValueError) as exc:
        print(f"dtnheat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
