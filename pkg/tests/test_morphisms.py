import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from valkit.errors import HypothesisViolation, UnsupportedRefinement
from valkit.hahn_series import Universe
from valkit.instances import iso_instances, refinement_instances
from valkit.morphisms import FLAGS, FieldIso, RefinedUniverse, extend_iso, refine_valuation, verify_refinement
from valkit.ordered_groups import GammaElement, subgroup_intersection
from valkit.presentations import Presentation, value_group_shadow
from valkit.rv_sort import PowerModel

U = Universe(("t1", "t2"), ("x1", "x2"))
p = U.parse
Q = Presentation.prime(U)
M = Presentation("M", U, [p("x2"), p("t2")], degree_bound=3)


def test_identity_extension():
    L = Presentation("L", U, [p("x1*t1")], degree_bound=3)
    rep = extend_iso(FieldIso.identity(L), L, M, Q, d=3)
    assert rep.ok and not rep.flagged
    assert rep.checked > 0 and rep.counts["ring_hom"] > 0


@pytest.mark.parametrize("model", [None, PowerModel("acf"), PowerModel("rcf")])
def test_unit_twist_extends(model):
    L = Presentation("L", U, [p("x1*t1")], degree_bound=3)
    sigma = FieldIso(L, [p("x1*t1*(1+t1)")], FLAGS)
    rep = extend_iso(sigma, L, M, Q, d=3, model=model)
    assert rep.ok, rep.failures[:3]
    assert not rep.flagged
    assert rep.counts["valuation"] == rep.checked
    if model is not None:
        assert any(k.startswith("lambda_n") for k in rep.counts)


def test_scaled_axis_flags_rv_only():
    L = Presentation("L", U, [p("t1")], degree_bound=3)
    sigma = FieldIso(L, [p("2*t1")], ("C", "gamma", "k"))
    rep = extend_iso(sigma, L, M, Q, d=3, model=PowerModel("rcf"))
    assert rep.ok
    rv_flags = [f for f in rep.flagged if f["check"] == "rv"]
    assert rv_flags
    first = next(f for f in rv_flags if f["x"] == "t1")
    assert first["expected"].endswith(", 1)") and first["got"].endswith(", 2)")


def test_declared_rv_fix_is_verified():
    L = Presentation("L", U, [p("t1")], degree_bound=3)
    with pytest.raises(HypothesisViolation):
        extend_iso(FieldIso(L, [p("2*t1")], FLAGS), L, M, Q, d=3)


def test_residue_fix_is_verified():
    L = Presentation("L", U, [p("x1")], degree_bound=2)
    with pytest.raises(HypothesisViolation):
        extend_iso(FieldIso(L, [p("x1+1")], ("C", "k")), L, M, Q, d=2)


def test_shipped_iso_instances():
    for inst in iso_instances():
        for model in (PowerModel("acf"), PowerModel("rcf")):
            rep = extend_iso(inst.sigma, inst.L, inst.M, inst.C, d=3, model=model)
            assert rep.ok, (inst.name, rep.failures[:2])
            assert bool(rep.flagged) == (inst.name == "scaled_axis")


def test_iso_rejects_bad_hypotheses():
    L = Presentation("L", U, [p("x1*t2")], degree_bound=2)  # shares v(t2) with M
    with pytest.raises(HypothesisViolation):
        extend_iso(FieldIso.identity(L), L, M, Q, d=2)


# -- refinement --


def test_trivial_refinement():
    L = Presentation("L", U, [p("x1*t1")], degree_bound=2)
    R = refine_valuation(L, M, Q, [], [])
    assert R.r == 0
    x = p("x1*t1 + t2")
    assert R.refine(x).valuation() == x.valuation()
    assert verify_refinement(R, L, M, Q, d=2).ok
    # no demotion cannot repair value groups that already overlap
    Mt = Presentation("M", U, [p("x2"), p("t1")], degree_bound=2)
    rep = verify_refinement(R, L, Mt, Q, d=2)
    assert [k for k, ok in rep.assertions.items() if not ok] == ["gamma_intersection"]


def test_one_demotion():
    inst = next(i for i in refinement_instances() if i.name == "r1")
    R = inst.refine()
    assert R.demoted == ["x1"]
    v1 = R.refine(p("x1*t1")).valuation()
    v0 = R.refine(p("t1")).valuation()
    assert v1 == R.U.gamma([1, 0], [1])
    assert v0 == R.U.gamma([1, 0], [0])
    assert R.quotient(v1) == R.quotient(v0) == U.gamma([1, 0])


def test_demoted_intersection_matches_c():
    inst = next(i for i in refinement_instances() if i.name == "r1")
    R = inst.refine()
    memo = {}
    Lr, Mr, Cr = (R.presentation(P, memo) for P in (inst.L, inst.M, inst.C))
    inter = subgroup_intersection(value_group_shadow(Lr, 4), value_group_shadow(Mr, 4))
    assert inter.same_as(value_group_shadow(Cr, 4))


@pytest.mark.parametrize("name", ["r1", "r2"])
def test_shipped_refinements_verify(name):
    inst = next(i for i in refinement_instances() if i.name == name)
    rep = verify_refinement(inst.refine(), inst.L, inst.M, inst.C, d=4)
    assert rep.ok, rep.witnesses
    assert rep.counts["rv_formula"] > 0


def test_broken_layout_fails_convexity():
    inst = next(i for i in refinement_instances() if i.name == "r1_broken")
    rep = verify_refinement(inst.refine(), inst.L, inst.M, inst.C, d=4)
    assert not rep.assertions["delta_convex"]
    w = rep.witnesses["delta_convex"]
    low, mid, high = (GammaElement.from_json(w[k]) for k in ("low", "between", "high"))
    assert low < mid < high


def test_refinement_errors():
    Mt = Presentation("M", U, [p("x2"), p("t1")], degree_bound=2)
    L = Presentation("L", U, [p("(x1+1)*t1")], degree_bound=2)
    with pytest.raises(UnsupportedRefinement):
        refine_valuation(L, Mt, Q, [p("(x1+1)*t1")], [p("t1")])
    Lt = Presentation("L", U, [p("t1")], degree_bound=2)
    with pytest.raises(HypothesisViolation):
        refine_valuation(Lt, Mt, Q, [p("t1")], [p("t1")])


def test_refine_unrefine_round_trip():
    R = RefinedUniverse(U, ["x1"])
    for text in ["x1*t1 + t2", "(x1**2 - 3*x1*x2)*t1**(1/2)", "x2 + t2**2", "x1**3*t1 + O(t1**2)"]:
        s = p(text)
        assert R.unrefine(R.refine(s)) == s


def _refined_gamma(values):
    R = RefinedUniverse(U, ["x1", "x2"])
    return R, R.lift_gamma(U.gamma(values[:2]), values[2:])


@given(st.lists(st.integers(-3, 3), min_size=4, max_size=4), st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_quotient_is_monotone_homomorphism(a, b):
    R, ga = _refined_gamma(a)
    _, gb = _refined_gamma(b)
    qa, qb = R.quotient(ga), R.quotient(gb)
    assert R.quotient(ga + gb) == qa + qb
    if ga <= gb:
        assert qa <= qb


def test_v_is_quotient_of_refined_v():
    R = RefinedUniverse(U, ["x1"])
    rng = random.Random(3)
    mons = ["1", "x1", "x2", "x1**2", "x1*x2"]
    for _ in range(100):
        terms = [f"({rng.randint(-3, 3)})*({rng.choice(mons)})*t1**{rng.randint(-1, 2)}*t2**{rng.randint(0, 2)}"
                 for _ in range(3)]
        s = p(" + ".join(terms))
        if s.is_exact_zero():
            continue
        assert R.quotient(R.refine(s).valuation()) == s.valuation()
