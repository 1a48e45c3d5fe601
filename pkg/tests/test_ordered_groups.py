import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from valkit.errors import RankMismatch
from valkit.ordered_groups import (
    GammaElement,
    GammaSubgroup,
    hnf_with_transform,
    lex_compare,
    q_basis_mod,
    subgroup_contains,
    subgroup_intersection,
    torsion_free_quotient,
)


def G(*main, inf=()):
    return GammaElement(main, inf)


small = st.fractions(min_value=-4, max_value=4, max_denominator=3)


def elements(n_main=2, n_inf=1):
    return st.builds(
        lambda m, i: GammaElement(m, i),
        st.lists(small, min_size=n_main, max_size=n_main),
        st.lists(small, min_size=n_inf, max_size=n_inf),
    )


# -- lex_compare --


def test_lex_compare_examples():
    assert lex_compare(G(0, 0), G(0, 0)) == 0
    assert lex_compare(G(1, -5), G(1, 0)) == -1
    assert lex_compare(G(1, 0), G(1, -5)) == 1


def test_infinitesimal_axis_below_every_main_multiple():
    delta = GammaElement.unit(1, 1, 0, infinitesimal=True)
    gamma = GammaElement.unit(1, 1, 0)
    for n in range(1, 1001):
        assert lex_compare(delta * n, gamma) == -1


def test_rank_mismatch():
    with pytest.raises(RankMismatch):
        lex_compare(G(1), G(1, 0))
    with pytest.raises(RankMismatch):
        G(1, inf=(0,)) + G(1)


@given(elements(), elements())
def test_order_antisymmetric_and_total(a, b):
    c = lex_compare(a, b)
    assert c == -lex_compare(b, a)
    assert (c == 0) == (a == b)


@given(elements(), elements(), elements())
def test_order_transitive_and_translation_invariant(a, b, c):
    if a <= b and b <= c:
        assert a <= c
    assert lex_compare(a, b) == lex_compare(a + c, b + c)


@given(elements(1, 2), elements(1, 2))
def test_infinitesimal_block_is_convex(h, x):
    # anything between two elements with zero main block has zero main block
    lo = GammaElement([0], x.inf)
    hi = GammaElement([0], [c + 1 for c in x.inf])
    if lo < h < hi:
        assert all(c == 0 for c in h.main)


def test_json_round_trip():
    g = G(Fraction(1, 2), -3, inf=(Fraction(2, 3),))
    data = g.to_json()
    assert data == {"main": ["1/2", "-3"], "inf": ["2/3"]}
    assert GammaElement.from_json(data) == g


def test_arithmetic_keeps_exact_rationals():
    g = G(Fraction(1, 3)) * 3
    assert g == G(1)
    assert hash(g) == hash(G(1))
    assert G(Fraction(1, 2)) + G(Fraction(1, 2)) == G(1)


# -- membership --


def test_subgroup_contains_examples():
    H = GammaSubgroup([G(1, 0), G(0, 2)])
    assert subgroup_contains(H, G(3, 4))
    assert not subgroup_contains(H, G(0, 1))
    Z = GammaSubgroup([G(1)])
    assert not subgroup_contains(Z, G(Fraction(1, 2)))
    assert GammaSubgroup.trivial(2).contains(G(0, 0))
    assert not GammaSubgroup.trivial(2).contains(G(0, 1))


def test_coefficients_reproduce_element():
    H = GammaSubgroup([G(2, 1), G(0, 3), G(4, 5)])
    assert H.coefficients(G(6, 14)) is None  # 2a + 4c = 6 forces 3(b + c) = 11
    g = G(6, 15)
    c = H.coefficients(g)
    assert c is not None
    acc = G(0, 0)
    for ci, h in zip(c, H.generators):
        acc = acc + h * ci
    assert acc == g


def _hadamard_bound(rows, g):
    """Bound on |c_i| for the unique c with c.rows = g (rows independent):
    Cramer's rule on a maximal nonzero minor, Hadamard on the adjugate."""
    k = len(rows)
    n = len(rows[0])
    best = None
    for J in itertools.combinations(range(n), k):
        sub = [[r[j] for j in J] for r in rows]
        det = _det(sub)
        if det and (best is None or abs(det) > abs(best[1])):
            best = (J, det)
    J, det = best
    norms = sorted((math.sqrt(sum(r[j] ** 2 for j in J)) for r in rows), reverse=True)
    adj = math.prod(norms[: k - 1]) if k > 1 else 1
    return math.ceil(sum(abs(g[j]) for j in J) * adj / abs(det))


def _det(m):
    if len(m) == 1:
        return m[0][0]
    return sum((-1) ** j * m[0][j] * _det([r[:j] + r[j + 1 :] for r in m[1:]]) for j in range(len(m)))


def _rank(rows):
    n = len(rows[0])
    return max(
        (k for k in range(1, len(rows) + 1)
         for R in itertools.combinations(rows, k)
         for J in itertools.combinations(range(n), k)
         if _det([[r[j] for j in J] for r in R])),
        default=0,
    )


@st.composite
def lattice_instance(draw):
    n = draw(st.integers(1, 3))
    k = draw(st.integers(1, n))
    lo = -1 if k == 3 else -2
    entry = st.integers(lo, -lo)
    rows = draw(st.lists(st.lists(entry, min_size=n, max_size=n), min_size=k, max_size=k))
    assume(_rank(rows) == k)
    g = draw(st.lists(st.integers(-3, 3), min_size=n, max_size=n))
    if draw(st.booleans()):
        # bias towards members
        c = draw(st.lists(st.integers(-2, 2), min_size=k, max_size=k))
        g = [sum(ci * r[j] for ci, r in zip(c, rows)) for j in range(n)]
    den = draw(st.sampled_from([1, 2]))
    return rows, g, den


@given(lattice_instance())
def test_subgroup_contains_matches_brute_force(inst):
    rows, g, den = inst
    B = _hadamard_bound(rows, g)
    found = any(
        all(sum(ci * r[j] for ci, r in zip(c, rows)) == g[j] for j in range(len(g)))
        for c in itertools.product(range(-B, B + 1), repeat=len(rows))
    )
    H = GammaSubgroup([GammaElement([Fraction(x, den) for x in r]) for r in rows])
    assert subgroup_contains(H, GammaElement([Fraction(x, den) for x in g])) == found


def test_dependent_generators_brute_force():
    H = GammaSubgroup([G(2), G(3)])
    for x in range(-6, 7):
        brute = any(2 * a + 3 * b == x for a in range(-10, 11) for b in range(-10, 11))
        assert H.contains(G(x)) == brute


@given(st.lists(st.lists(st.integers(-3, 3), min_size=2, max_size=2), min_size=1, max_size=3),
       st.lists(st.integers(-4, 4), min_size=2, max_size=2),
       st.integers(-3, 3))
def test_membership_invariant_under_unimodular_change(rows, g, m):
    gens = [GammaElement(r) for r in rows]
    # add m times the first generator to the last: a unimodular change
    changed = gens[:-1] + [gens[-1] + gens[0] * m] if len(gens) > 1 else [-gens[0]]
    assert GammaSubgroup(gens).contains(GammaElement(g)) == GammaSubgroup(changed).contains(GammaElement(g))


def test_hnf_transform_is_consistent():
    rows = [[2, 4, 4], [-6, 6, 12], [10, -4, -16]]
    H, U = hnf_with_transform(rows)
    for h, u in zip(H, U):
        assert h == [sum(u[i] * rows[i][j] for i in range(3)) for j in range(3)]
    assert abs(_det(U)) == 1


# -- quotients --


def test_q_basis_mod_examples():
    assert q_basis_mod([G(1, 0), G(0, 1)], GammaSubgroup([G(1, 0)])) == [G(0, 1)]
    assert q_basis_mod([G(Fraction(1, 2))], GammaSubgroup([G(1)])) == []
    assert q_basis_mod([G(1)], GammaSubgroup.trivial(1)) == [G(1)]


def test_q_basis_mod_greedy_in_input_order():
    out = q_basis_mod([G(1, 1), G(2, 2), G(0, 1), G(1, 0)], GammaSubgroup.trivial(2))
    assert out == [G(1, 1), G(0, 1)]


def test_torsion_free_quotient_examples():
    assert not torsion_free_quotient([G(Fraction(1, 2))], GammaSubgroup([G(1)]))
    assert torsion_free_quotient([G(0, 1)], GammaSubgroup([G(1, 0)]))
    assert torsion_free_quotient([G(1)], GammaSubgroup.trivial(1))


def _torsion_free_brute(gens_L, C, box=4, n_max=6):
    """Search g in the span of gens_L and C with n*g in C but g not in C."""
    gens = list(gens_L) + list(C.generators)
    for coeffs in itertools.product(range(-box, box + 1), repeat=len(gens)):
        g = GammaElement.zero(*C.rank)
        for c, h in zip(coeffs, gens):
            g = g + h * c
        if C.contains(g):
            continue
        if any(C.contains(g * n) for n in range(2, n_max + 1)):
            return False
    return True


@pytest.mark.parametrize(
    "gens_L, C",
    [
        ([G(Fraction(1, 3), 1)], GammaSubgroup([G(1, 0), G(0, 3)])),
        ([G(Fraction(1, 3), 1)], GammaSubgroup([G(1, 0)])),
        ([G(1, 1)], GammaSubgroup([G(2, 2)])),
        ([G(1, 0), G(0, 1)], GammaSubgroup([G(2, 0)])),
        ([G(Fraction(1, 2), 0), G(0, 1)], GammaSubgroup([G(1, 0), G(0, 1)])),
        ([G(0, 1)], GammaSubgroup([G(1, 0)])),
    ],
)
def test_torsion_free_quotient_brute_force(gens_L, C):
    assert torsion_free_quotient(gens_L, C) == _torsion_free_brute(gens_L, C)


def test_intersection():
    A = GammaSubgroup([G(2, 0), G(0, 1)])
    B = GammaSubgroup([G(3, 0), G(1, 1)])
    inter = subgroup_intersection(A, B)
    # brute force over a box of A
    for a, b in itertools.product(range(-7, 8), repeat=2):
        g = G(a, b)
        assert inter.contains(g) == (A.contains(g) and B.contains(g))
