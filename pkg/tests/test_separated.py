import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from valkit.errors import HypothesisViolation, InternalInconsistency, PrecisionExhausted
from valkit.hahn_series import Universe, rv_of
from valkit.presentations import RESIDUE_DISJOINT, Presentation
from valkit.separated import (
    NOT_INDEPENDENT,
    NOT_SEPARATED,
    SEPARATED_GOOD,
    SEPARATED_NOT_GOOD,
    check_lift,
    check_separated,
    compositum_check,
    make_separated,
    make_separated_trivial,
    monomial_tuples,
    rv_of_combination,
)

U = Universe(("t",), ("x1",))
U2 = Universe(("t1", "t2"), ("x1", "x2"))
Q = Presentation.prime(U)
Q2 = Presentation.prime(U2)
Ct = Presentation("Ct", U, [U.t()])
p = U.parse
p2 = U2.parse

SMALL_Q = sorted({Fraction(n, d) for n in range(-3, 4) for d in range(1, 4)})


def _violates(coeffs, vectors):
    terms = [(c * v) for c, v in zip(coeffs, vectors) if c]
    if not terms:
        return False
    x = sum(terms[1:], terms[0])
    bound = min(s.valuation() for s in terms)
    return x.is_exact_zero() or x.valuation() > bound


def _brute_violation(vectors):
    for coeffs in itertools.product(SMALL_Q, repeat=len(vectors)):
        if _violates(coeffs, vectors):
            return coeffs
    return None


# -- check_separated --


def test_distinct_valuations_over_q():
    rep = check_separated([p("1"), p("t")], Q)
    assert rep.verdict == SEPARATED_GOOD
    assert rep.partition == [[0], [1]]


def test_cancelling_leading_terms_over_q():
    vectors = [p("1+t"), p("1-t")]
    rep = check_separated(vectors, Q)
    assert rep.verdict == NOT_SEPARATED
    w = rep.witness
    assert [str(c) for c in w.coefficients] == ["1", "-1"]
    assert w.achieved == U.gamma([1]) and w.bound == U.gamma([0])
    # the brute-force oracle finds a violation too, and the witness is one
    assert _brute_violation(vectors) is not None
    assert _violates([Fraction(1), Fraction(-1)], vectors)


def test_ramified_basis_over_power_series():
    rep = check_separated([p("1"), p("t**(1/2)")], Ct)
    assert rep.verdict == SEPARATED_GOOD
    assert rep.partition == [[0], [1]]


def test_same_class_not_good():
    rep = check_separated([p("1"), p("x1*t")], Ct)
    assert rep.verdict == SEPARATED_NOT_GOOD
    assert rep.partition == [[0, 1]]


def test_degenerate_inputs_are_reports():
    assert check_separated([p("1"), p("0")], Q).verdict == NOT_INDEPENDENT
    assert check_separated([p("1+t"), p("1+t")], Q).verdict == NOT_INDEPENDENT
    assert check_separated([p("1"), p("t"), p("1+t")], Q).verdict == NOT_INDEPENDENT


def test_truncated_vector_without_terms():
    with pytest.raises(PrecisionExhausted):
        check_separated([p("1"), p("O(t**2)")], Q)


series_text = st.builds(
    lambda a, b, e: f"{a} + ({b})*t**{e}",
    st.integers(1, 3),
    st.integers(-3, 3).filter(bool),
    st.integers(1, 2),
)


@settings(max_examples=25)
@given(st.lists(series_text, min_size=2, max_size=2, unique=True), st.booleans())
def test_verdict_matches_brute_force(texts, shift):
    vectors = [p(s) for s in texts]
    if shift:
        vectors[1] = vectors[1] * U.t()
    rep = check_separated(vectors, Q)
    brute = _brute_violation(vectors)
    if rep.separated:
        assert brute is None
    elif rep.verdict == NOT_INDEPENDENT:
        assert any(
            not (c * vectors[0] + d * vectors[1]).terms
            for c, d in itertools.product(SMALL_Q, repeat=2)
            if c or d
        )
    else:
        assert rep.verdict == NOT_SEPARATED
        assert brute is not None
        w = rep.witness
        assert w.achieved > w.bound


def test_witness_reevaluates_over_ct():
    vectors = [p("1 + t**(1/2)"), p("t + t**(3/2) + t**2")]
    rep = check_separated(vectors, Ct)
    assert rep.verdict == NOT_SEPARATED
    w = rep.witness
    combo = sum((c * v for c, v in zip(w.coefficients, vectors)), U.zero())
    bound = min((c * v).valuation() for c, v in zip(w.coefficients, vectors) if not c.is_exact_zero())
    assert bound == w.bound
    assert combo.valuation() == w.achieved > w.bound


# -- constructions --


def _span_checks(vectors, out, K=Q):
    n = len(vectors)
    for i in range(n):
        lhs = sum((out.change[i][j] * vectors[j] for j in range(n)), U.zero())
        assert lhs == out.basis[i]
        back = sum((out.inverse[i][j] * out.basis[j] for j in range(n)), U.zero())
        assert back == vectors[i]
    assert not out.determinant().is_exact_zero()


def test_trivial_examples():
    out = make_separated_trivial([p("t")])
    assert out.basis == [p("t")]
    assert out.change == [[U.one()]]
    vectors = [p("1+t"), p("1-t")]
    out = make_separated_trivial(vectors)
    assert out.basis == [p("1+t"), p("2*t")]
    assert check_separated(out.basis, Q).verdict == SEPARATED_GOOD
    _span_checks(vectors, out)
    vectors = [p("1"), p("1+t"), p("1+t+t**2")]
    out = make_separated_trivial(vectors)
    assert out.basis == [p("1"), p("t"), p("t**2")]
    _span_checks(vectors, out)


def test_trivial_rejects_valued_base():
    with pytest.raises(HypothesisViolation):
        make_separated_trivial([p("1")], Ct)


def test_make_separated_examples():
    C1 = Presentation("C1", U2, [p2("t1")])
    out = make_separated([p2("1"), p2("1+t2")], C1)
    assert out.basis == [p2("1"), p2("t2")]
    assert check_separated(out.basis, C1).verdict == SEPARATED_GOOD
    vectors = [p("1"), p("t**(1/2)")]
    out = make_separated(vectors, Ct)
    assert out.basis == vectors
    assert out.change == [[U.one(), U.zero()], [U.zero(), U.one()]]


def test_make_separated_needs_maximal_field():
    with pytest.raises(PrecisionExhausted):
        make_separated([p("1"), p("1 + O(t**10)")], Ct)


@settings(max_examples=20)
@given(st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2)), min_size=3, max_size=3))
def test_constructions_are_good_and_invertible(rows):
    base = [p("1"), p("t"), p("x1*t")]
    vectors = [sum((c * b for c, b in zip(r, base)), U.zero()) + U.t(power=3 + i) for i, r in enumerate(rows)]
    out = make_separated_trivial(vectors)
    assert check_separated(out.basis, Q).verdict == SEPARATED_GOOD
    _span_checks(vectors, out)


# -- lifting --


def test_lift_examples():
    L = Presentation("L", U2, [p2("x1"), p2("t1")])
    M = Presentation("M", U2, [p2("x2"), p2("t2")])
    basis = [p2("1"), p2("x1"), p2("t1")]
    assert check_lift(basis, Q2, M, L).verdict == SEPARATED_GOOD
    shared = Presentation("M", U2, [p2("x1")])
    with pytest.raises(HypothesisViolation) as exc:
        check_lift(basis, Q2, shared, L)
    assert RESIDUE_DISJOINT in exc.value.failed
    C = Presentation("C", U2, [p2("t2")])
    Lc = Presentation("L", U2, [p2("x1"), p2("t1")], base=C)
    assert check_lift([p2("1"), p2("x1"), p2("t1")], C, C, Lc).verdict == SEPARATED_GOOD


def test_lift_survives_sampling():
    L = Presentation("L", U2, [p2("x1"), p2("t1")])
    M = Presentation("M", U2, [p2("x2"), p2("t2")])
    basis = [p2("1"), p2("x1"), p2("t1")]
    assert check_lift(basis, Q2, M, L).good
    rng = random.Random(11)
    mons = [p2(s) for s in ["1", "x2", "t2", "x2*t2", "x2**2", "t2**2"]]
    for _ in range(1000):
        m = [sum((rng.randint(-2, 2) * b for b in rng.sample(mons, 2)), U2.zero()) for _ in basis]
        if all(mi.is_exact_zero() for mi in m):
            continue
        terms = [b * mi for b, mi in zip(basis, m) if not mi.is_exact_zero()]
        x = sum(terms[1:], terms[0])
        assert x.valuation() == min(s.valuation() for s in terms)


# -- compositum --


def test_compositum_examples():
    ell = [p2("1"), p2("t1")]
    x = ell[0] * p2("t2") + ell[1] * p2("1")
    assert x.valuation() == U2.gamma([0, 1])
    rep = compositum_check(ell, [[p2("t2"), p2("1")], [p2("0"), p2("t2**3")]])
    assert rep.ok and rep.checked == 2
    rep = compositum_check([p2("1"), p2("x1")], [[p2("1"), p2("x2")]])
    assert rep.ok
    x = p2("1") + p2("x1") * p2("x2")
    assert x.residue() == U2.field.parse("1 + x1*x2")


def test_compositum_flags_a_bad_basis():
    rep = compositum_check([p2("1"), p2("1+t1")], [[p2("1"), p2("-1")]])
    assert not rep.ok
    assert rep.mismatches[0]["kind"] == "valuation"


def test_monomial_tuples_cover_singles_and_pairs():
    mons = [p2("1"), p2("t2")]
    tuples = list(monomial_tuples(2, mons))
    assert len(tuples) == 2 * 2 + 4


def test_rv_of_combination_examples():
    r = rv_of_combination([p2("1"), p2("t1")], [p2("t2"), p2("1")])
    assert r == rv_of(p2("t2"))
    r = rv_of_combination([p2("x1"), p2("x2")], [p2("t1"), p2("t1")])
    assert (r.gamma, r.coeff) == (U2.gamma([1, 0]), U2.field.parse("x1 + x2"))
    with pytest.raises(InternalInconsistency):
        rv_of_combination([p2("1"), p2("1+t1")], [p2("1"), p2("-1")])


def test_rv_of_combination_random():
    rng = random.Random(50)
    ell = [p2("1"), p2("x1"), p2("t1"), p2("x1*t1**(1/2)")]
    mons = [p2(s) for s in ["1", "x2", "t2", "x2*t2", "t1", "x2**2*t1"]]
    for _ in range(50):
        m = [sum((Fraction(rng.randint(-3, 3), rng.randint(1, 2)) * b for b in rng.sample(mons, 2)), U2.zero())
             for _ in ell]
        if all(mi.is_exact_zero() for mi in m):
            continue
        x = sum((li * mi for li, mi in zip(ell, m)), U2.zero())
        assert rv_of_combination(ell, m) == rv_of(x)
