import pytest
from gmpy2 import mpq

from dtnheat.exact_algebra import Atom, AtomPoly
from dtnheat.geometry import curvature_report
from dtnheat.jets import EuclideanBall, RandomGauge, SpaceFormBall, build_gauge_jets
from dtnheat.reference import OutOfRange, corollary_consistency, ref_eval, ref_latex, sphere_report, term_count


@pytest.mark.parametrize(
    "kind,count",
    [("A0", 1), ("A1", 2), ("A2", 7), ("A3", 18), ("TildeA2", 4), ("TildeA3", 8), ("B2", 6), ("B3", 13)],
)
def test_term_counts(kind, count):
    assert term_count(kind) == count


@pytest.mark.parametrize("n", [4, 5, 6])
def test_split_into_geometric_and_phi_v_parts(n):
    rep = curvature_report(build_gauge_jets(RandomGauge(), n, 3))
    for k in (1, 2, 3):
        assert ref_eval(f"A{k}", rep, n) - ref_eval(f"TildeA{k}", rep, n) == ref_eval(f"PhiV{k}", rep, n)


def test_low_orders():
    assert ref_eval("A0", sphere_report(5), 5) == 6
    # at n = 2 the mean-curvature term drops out
    assert ref_eval("A1", sphere_report(2, phi_n=3), 2) == mpq(3, 2)


def test_unit_ball_a2():
    rep = curvature_report(build_gauge_jets(EuclideanBall(1), 3, 2))
    assert ref_eval("A2", rep, 3) == mpq(1, 6)
    assert ref_eval("B2", rep, 3) == mpq(1, 6)


def test_out_of_range():
    with pytest.raises(OutOfRange):
        ref_eval("A3", sphere_report(3), 3)
    with pytest.raises(OutOfRange):
        ref_eval("A2", sphere_report(2), 2)


@pytest.mark.parametrize("n", [4, 5, 7])
def test_constant_curvature_forms_agree(n):
    rep = curvature_report(build_gauge_jets(SpaceFormBall(phi=True, potential=True), n, 3))
    assert corollary_consistency(rep) == {"a2": True, "a3": True}


def test_readings_differ_by_covariant_shift():
    rep = curvature_report(build_gauge_jets(RandomGauge(), 4, 2))
    diff = ref_eval("A2", rep, 4, reading="covariant") - ref_eval("A2", rep, 4)
    H = sum((AtomPoly.atom(Atom.kappa(a)) for a in (1, 2, 3)), AtomPoly())
    # the covariant Laplacian of phi is the coordinate sum minus H phi_n;
    # the bracket carries the prefactor Gamma(2)/4
    assert diff == -H * AtomPoly.atom(Atom.phi(4)) / 4


def test_latex_rendering():
    tex = ref_latex("A1")
    assert r"\phi_n" in tex and "H" in tex
