"""Seeded property suites.

Each suite draws its cases from ``random.Random(f"{name}:{seed}")`` and
returns a :class:`SuiteResult` whose JSON form is deterministic (no timings).
The same functions back the acceptance tests and the ``suite-run`` task.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import sympy

from ._reduction import Reducer
from .errors import InternalInconsistency, NotIndependent, PrecisionExhausted
from .hahn_series import INFINITY, HahnSeries, Universe, random_series
from .instances import compositum_instances, iso_instances, refinement_instances
from .morphisms import extend_iso, verify_refinement
from .ordered_groups import GammaElement, GammaSubgroup, torsion_free_quotient
from .presentations import Presentation, _monomials, check_hypotheses, value_group_shadow
from .residue_algebra import ResidueField, ResSubfield, algebraically_independent_over
from .rv_sort import COLLISION, PowerModel, rv_try_add
from .separated import (
    NOT_SEPARATED,
    SEPARATED_GOOD,
    check_lift,
    check_separated,
    compositum_check,
    make_separated,
    make_separated_trivial,
    monomial_tuples,
    rv_of_combination,
)


@dataclass
class SuiteResult:
    name: str
    seed: int
    size: int
    checked: int = 0
    failures: list[dict] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, **info) -> None:
        self.failures.append(info)

    def bump(self, key: str, n: int = 1) -> None:
        self.stats[key] = self.stats.get(key, 0) + n

    def to_json(self) -> dict:
        return {
            "suite": self.name,
            "seed": self.seed,
            "size": self.size,
            "checked": self.checked,
            "ok": self.ok,
            "failure_count": len(self.failures),
            "failures": self.failures[:10],
            "stats": dict(sorted(self.stats.items())),
        }


def _rng(name: str, seed: int) -> random.Random:
    return random.Random(f"{name}:{seed}")


def _q(rng: random.Random, bound: int = 5, zero_ok: bool = False) -> Fraction:
    lo = 0 if zero_ok else 1
    return Fraction(rng.choice([-1, 1]) * rng.randint(lo, bound), rng.randint(1, 3))


# -- valuation axioms --


def valuation_axioms(seed: int = 0, size: int = 10_000) -> SuiteResult:
    """v(ab) = v(a)+v(b), the ultrametric inequality, residue homomorphism and
    rv multiplicativity / partial addition on random pairs."""
    res = SuiteResult("valuation_axioms", seed, size)
    rng = _rng(res.name, seed)
    U = Universe(("t1", "t2"), ("x1",))
    zero = U.gamma_zero
    for _ in range(size):
        a = random_series(U, rng, 3, (-2, 3), var_prob=0.3)
        b = random_series(U, rng, 3, (-2, 3), var_prob=0.3)
        if rng.random() < 0.25:
            # force equal valuations so leading terms can cancel
            b = b.shift(a.valuation() - b.valuation())
        elif rng.random() < 0.1:
            # b = -a + higher terms: a + b cancels at the leading term
            b = -a + random_series(U, rng, 2, (1, 3)).shift(a.valuation() - zero)
        va, vb = a.valuation(), b.valuation()
        res.checked += 1
        ab = a * b
        if ab.valuation() != va + vb:
            res.fail(check="v_mul", a=str(a), b=str(b))
        s = a + b
        lo = min(va, vb)
        vs = s.valuation() if not s.is_exact_zero() else INFINITY
        if vs is not INFINITY and vs < lo:
            res.fail(check="v_add_lower", a=str(a), b=str(b))
        if va != vb and vs != lo:
            res.fail(check="v_add_equal", a=str(a), b=str(b))
        ra, rb = a.rv(), b.rv()
        if ab.rv() != ra * rb:
            res.fail(check="rv_mul", a=str(a), b=str(b))
        tried = rv_try_add(ra, rb)
        if tried is COLLISION:
            res.bump("rv_collisions")
        elif s.is_exact_zero() or s.rv() != tried:
            res.fail(check="rv_add", a=str(a), b=str(b))
        # residues on the valuation ring: shift to valuation 0 or slightly above
        up_a = zero if rng.random() < 0.7 else U.gamma([0, 1])
        up_b = zero if rng.random() < 0.7 else U.gamma([0, 1])
        a0 = a.shift(up_a - va)
        b0 = b.shift(up_b - vb)
        if (a0 + b0).residue() != a0.residue() + b0.residue():
            res.fail(check="res_add", a=str(a0), b=str(b0))
        if (a0 * b0).residue() != a0.residue() * b0.residue():
            res.fail(check="res_mul", a=str(a0), b=str(b0))
    return res


# -- separatedness criterion against sampling --


def _c_element(rng: random.Random, t: HahnSeries | None, U: Universe, d: int) -> HahnSeries:
    """Random element of the degree-d shadow of Q (t None) or Q(t), possibly zero."""
    if rng.random() < 0.15:
        return U.zero()
    if t is None:
        return U.const(_q(rng))
    g = t.valuation()
    q = _q(rng)
    c = U.monomial(q, g * rng.randint(-d, d))
    if rng.random() < 0.3:
        q = _q(rng)
        c = c + U.monomial(q, g * rng.randint(-d, d))
    return c


def _candidate_basis(rng: random.Random, U: Universe, t: HahnSeries | None, d: int) -> list[HahnSeries]:
    k = rng.randint(1, 4)
    den = 1 if t is None else 2
    vecs: list[HahnSeries] = []
    while len(vecs) < k:
        if vecs and rng.random() < 0.35:
            # a C-multiple of an earlier vector plus a strictly smaller perturbation
            j = rng.randrange(len(vecs))
            c = _c_element(rng, t, U, 1)
            if c.is_exact_zero():
                continue
            base = c * vecs[j]
            pert = random_series(U, rng, 2, (1, 3), var_prob=0.3).shift(
                base.valuation() - U.gamma_zero
            )
            vecs.append(base + pert)
        else:
            vecs.append(random_series(U, rng, 3, (-2, 3), exp_den=den, var_prob=0.3))
    return vecs


def separation_sampling(seed: int = 0, size: int = 200, samples: int = 1000) -> SuiteResult:
    """check_separated against random C-combinations, over trivial Q and Q((t))."""
    res = SuiteResult("separation_sampling", seed, size)
    rng = _rng(res.name, seed)
    U = Universe(("t",), ("x1", "x2"))
    d = 2
    t = U.t("t")
    fields = [
        ("Q", Presentation.prime(U), None),
        ("Q((t))", Presentation("C", U, [t], degree_bound=d), t),
    ]
    for label, C, tt in fields:
        K = C.coefficient_field(d)
        for _ in range(size):
            vecs = _candidate_basis(rng, U, tt, d)
            rep = check_separated(vecs, K, d)
            res.bump(f"{label}:{rep.verdict}")
            res.checked += 1
            if rep.separated:
                vals = [v.valuation() for v in vecs]
                for _ in range(samples):
                    cs = [_c_element(rng, tt, U, d) for _ in vecs]
                    live = [(c, v, vv) for c, v, vv in zip(cs, vecs, vals) if not c.is_exact_zero()]
                    if not live:
                        continue
                    res.bump("samples")
                    bound = min(c.valuation() + vv for c, _, vv in live)
                    x = U.zero()
                    for c, v, _ in live:
                        x = x + c * v
                    if not x.terms or x.valuation() != bound:
                        res.fail(field=label, check="sample", vectors=[str(v) for v in vecs], coefficients=[str(c) for c in cs])
                        break
            elif rep.verdict == NOT_SEPARATED:
                w = rep.witness
                terms = [(c, v) for c, v in zip(w.coefficients, vecs) if not c.is_exact_zero()]
                bound = min(c.valuation() + v.valuation() for c, v in terms)
                x = U.zero()
                for c, v in terms:
                    x = x + c * v
                if x.is_exact_zero():
                    achieved = INFINITY
                else:
                    achieved = x.valuation() if x.terms else x.cutoff
                if not (achieved > bound) or bound != w.bound:
                    res.fail(field=label, check="witness", vectors=[str(v) for v in vecs])
    return res


# -- constructions --


def _atoms(rng: random.Random, U: Universe, over_t: bool) -> list[HahnSeries]:
    """Four vectors independent over the coefficient field by construction:
    distinct residue monomials, and over Q((t1)) mixed exponent classes."""
    F = U.field
    residues = [F.one(), F.var("x1"), F.var("x2"), F.var("x1") * F.var("x2")]
    rng.shuffle(residues)
    out = []
    for r in residues:
        if over_t:
            g = U.gamma([rng.randint(-1, 1), rng.randint(0, 1)])
        else:
            g = U.gamma([rng.randint(-1, 2), rng.randint(0, 1)])
        lead = U.monomial(r, g)
        tail = random_series(U, rng, 2, (1, 3), var_prob=0.3).shift(g)
        out.append(lead + tail)
    return out


def constructions(seed: int = 0, size: int = 100) -> SuiteResult:
    """make_separated(_trivial) on mixed 4-dimensional inputs: output is good,
    the change matrix is invertible, and both change matrices are exact."""
    res = SuiteResult("constructions", seed, size)
    rng = _rng(res.name, seed)
    U = Universe(("t1", "t2"), ("x1", "x2"))
    t1 = U.t("t1")
    Q = Presentation.prime(U)
    Ct = Presentation("C", U, [t1], degree_bound=3)
    for case in range(size):
        over_t = case % 2 == 1
        C = Ct if over_t else Q
        atoms = _atoms(rng, U, over_t)
        n = len(atoms)
        # A = P * L * D with L unit lower triangular over C, D nonzero diagonal
        A = [[U.zero()] * n for _ in range(n)]
        for i in range(n):
            A[i][i] = U.const(_q(rng))
            for j in range(i):
                c = U.const(_q(rng, zero_ok=True))
                if over_t:
                    c = c * t1 ** rng.randint(-1, 2)
                A[i][j] = c * A[j][j]
        perm = list(range(n))
        rng.shuffle(perm)
        vecs = []
        for i in perm:
            v = U.zero()
            for j in range(n):
                if not A[i][j].is_exact_zero():
                    v = v + A[i][j] * atoms[j]
            vecs.append(v)
        res.checked += 1
        try:
            out = make_separated(vecs, Ct) if over_t else make_separated_trivial(vecs)
        except (NotIndependent, PrecisionExhausted) as exc:
            res.fail(case=case, check="construct", error=type(exc).__name__, detail=str(exc))
            continue
        rep = check_separated(out.basis, C)
        res.bump(f"steps:{sum(out.steps)}")
        if rep.verdict != SEPARATED_GOOD:
            res.fail(case=case, check="verdict", verdict=rep.verdict, basis=[str(b) for b in out.basis])
        det = out.determinant()
        if det.is_exact_zero() or not det.terms:
            res.fail(case=case, check="determinant", det=str(det))
        for i in range(n):
            s = U.zero()
            for j in range(n):
                s = s + out.change[i][j] * vecs[j]
            if s != out.basis[i]:
                res.fail(case=case, check="change_row", row=i)
            s = U.zero()
            for j in range(n):
                s = s + out.inverse[i][j] * out.basis[j]
            if s != vecs[i]:
                res.fail(case=case, check="inverse_row", row=i)
    return res


# -- lifting --


def _lift_triple(rng: random.Random, U: Universe, d: int):
    p = U.parse
    C_kind = rng.choice(["Q", "t1", "x1", "x1,t1"])
    C_gens = {"Q": [], "t1": ["t1"], "x1": ["x1"], "x1,t1": ["x1", "t1"]}[C_kind]
    C = Presentation("C", U, [p(g) for g in C_gens], degree_bound=d) if C_gens else Presentation.prime(U)
    base = C if C_gens else None

    def noise() -> str:
        opts = ["1"]
        if "t1" in C_gens:
            opts += [f"(1 + {_q(rng)}*t1)", "(1 - t1**2)"]
        if "x1" in C_gens:
            opts += [f"(x1 + {rng.randint(1, 3)})"]
        return rng.choice(opts)

    L_pool = [
        "x2", "t2", "x2*t2", "t2**(1/2)", "x2 + t2", "(1 + x2)*t2**(1/3)", "x2**2*t2",
    ]
    M_pool = ["x3", "t3", "x3*t3", "t3**(1/2)", "x3 + t3", "x3*t3**(1/2)"]
    Lg = [f"({g})*{noise()}" for g in rng.sample(L_pool, rng.randint(1, 2))]
    Mg = [f"({g})*{noise()}" for g in rng.sample(M_pool, rng.randint(1, 2))]
    if rng.random() < 0.2:
        # a tempting overlap that the hypothesis checker must reject
        Mg.append(rng.choice(["t2", "x2*t3", "t2**(1/2)"]))
    L = Presentation("L", U, [p(g) for g in Lg], base=base, degree_bound=d)
    M = Presentation("M", U, [p(g) for g in Mg], base=base, degree_bound=d)
    return C, L, M


def lift_family(seed: int = 0, size: int = 50, d: int = 2) -> SuiteResult:
    """Random (C, L, M) passing the hypothesis checker: a good basis of L over
    C stays good over M."""
    res = SuiteResult("lift_family", seed, size)
    rng = _rng(res.name, seed)
    U = Universe(("t1", "t2", "t3"), ("x1", "x2", "x3"))
    draws = 0
    while res.checked < size:
        draws += 1
        if draws > 50 * size:
            res.fail(check="generator", detail="could not draw enough admissible triples")
            break
        C, L, M = _lift_triple(rng, U, d)
        hyp = check_hypotheses(L, M, C, d)
        if hyp.failed(["gamma_intersection", "residue_linearly_disjoint"]):
            res.bump("rejected")
            continue
        red = Reducer(C.coefficient_field(d))
        for m in _monomials(L.generators, d, U):
            try:
                red.push(m)
            except (NotIndependent, PrecisionExhausted):
                pass
        ell = red.basis
        res.checked += 1
        rep = check_lift(ell, C, M, L, d)
        res.bump(f"dim:{len(ell)}")
        if rep.verdict != SEPARATED_GOOD:
            res.fail(
                check="lift",
                verdict=rep.verdict,
                C=C.to_json(),
                L=L.to_json(),
                M=M.to_json(),
                basis=[str(b) for b in ell],
            )
    res.stats["draws"] = draws
    return res


# -- compositum --


def compositum(seed: int = 0, size: int = 0, d: int = 4) -> SuiteResult:
    """Valuation/residue formulas and the rv formula over the shipped instances,
    all monomial coefficient tuples to degree d."""
    res = SuiteResult("compositum", seed, size)
    for inst in compositum_instances(d):
        lift = check_lift(inst.ell, inst.C, inst.M, inst.L, d)
        if lift.verdict != SEPARATED_GOOD:
            res.fail(instance=inst.name, check="lift", verdict=lift.verdict)
            continue
        mons = list(_monomials(inst.M.all_generators, d, inst.U))
        tuples = list(monomial_tuples(len(inst.ell), mons))
        rep = compositum_check(inst.ell, tuples, inst.C)
        res.checked += rep.checked
        res.stats[inst.name] = rep.checked
        for bad in rep.mismatches:
            res.fail(instance=inst.name, **bad)
        for m in tuples:
            if all(mi.is_exact_zero() for mi in m):
                continue
            try:
                got = rv_of_combination(inst.ell, m)
            except InternalInconsistency as exc:
                res.fail(instance=inst.name, check="rv", detail=str(exc))
                continue
            x = HahnSeries(inst.U)
            for li, mi in zip(inst.ell, m):
                x = x + li * mi
            if x.rv() != got:
                res.fail(instance=inst.name, check="rv", m=[str(mi) for mi in m])
    return res


# -- ramified example --


def ramified_example(seed: int = 0, size: int = 0) -> SuiteResult:
    res = SuiteResult("ramified_example", seed, size)
    U = Universe(("t",), ())
    p = U.parse
    C = Presentation("C", U, [p("t")])
    L = Presentation("L", U, [p("t**(1/2)")], base=C)
    res.checked = 3
    shadow = value_group_shadow(Presentation("R", U, [p("t**(1/2)")]), 1)
    if not shadow.same_as(GammaSubgroup([GammaElement([Fraction(1, 2)])])):
        res.fail(check="shadow", got=str(shadow))
    if torsion_free_quotient(value_group_shadow(L).basis(), value_group_shadow(C)):
        res.fail(check="torsion_free")
    verdict = check_separated([p("1"), p("t**(1/2)")], C).verdict
    if verdict != SEPARATED_GOOD:
        res.fail(check="verdict", got=verdict)
    return res


# -- refinement --


def refinement(seed: int = 0, size: int = 0, d: int = 4) -> SuiteResult:
    res = SuiteResult("refinement", seed, size)
    for inst in refinement_instances(d):
        R = inst.refine(d)
        rep = verify_refinement(R, inst.L, inst.M, inst.C, d)
        res.checked += 1
        res.stats[inst.name] = sorted(k for k, v in rep.assertions.items() if v)
        if inst.layout == "standard":
            if not rep.ok:
                res.fail(instance=inst.name, report=rep.to_json())
        elif rep.assertions.get("delta_convex") or "delta_convex" not in rep.witnesses:
            res.fail(instance=inst.name, check="negative_control", report=rep.to_json())
    return res


# -- isomorphism extension --


def iso_extension(seed: int = 0, size: int = 0, d: int = 3) -> SuiteResult:
    res = SuiteResult("iso_extension", seed, size)
    for inst in iso_instances(d):
        for kind in ("acf", "rcf"):
            rep = extend_iso(inst.sigma, inst.L, inst.M, inst.C, d, PowerModel(kind))
            res.checked += rep.checked
            res.stats[f"{inst.name}:{kind}"] = {"checked": rep.checked, "flagged": len(rep.flagged)}
            for f in rep.failures:
                res.fail(instance=inst.name, model=kind, **f)
            if "rv" not in inst.sigma.fixes and not rep.flagged:
                res.fail(instance=inst.name, model=kind, check="expected an rv flag")
    return res


# -- Jacobian criterion against relation search --


_XS = sympy.symbols("x1 x2 x3")


def _random_poly(rng: random.Random, nvars: int, deg: int):
    """Nonconstant integer polynomial of degree <= deg in the first nvars variables."""
    xs = _XS[:nvars]
    while True:
        e = sympy.Integer(rng.randint(-1, 1))
        for _ in range(rng.randint(1, 3)):
            mono = sympy.Integer(rng.choice([-2, -1, 1, 2]))
            for _ in range(rng.randint(1, deg)):
                mono *= rng.choice(xs)
            e += mono
        e = sympy.expand(e)
        if e.free_symbols:
            return e


def jacobian_instance(rng: random.Random):
    """Up to three polynomials of degree <= 3; dependent cases carry a small
    explicit relation so that a bounded search can find one."""
    k = rng.randint(1, 3)
    mode = rng.choice(["generic", "generic", "dependent", "few_vars"])
    if mode == "generic":
        nv = rng.randint(k, 3)
        elems = []
        used = list(_XS[:nv])
        for i in range(k):
            # a private leading variable per element: independent generically
            e = used[i] ** rng.randint(1, 3) + rng.choice([0, 1]) * _random_poly(rng, nv, 2)
            elems.append(sympy.expand(e))
        return elems
    if mode == "few_vars":
        # one variable, several elements: each is a small polynomial in x + a
        x = _XS[0]
        a = rng.choice([0, 1, -1])
        pool = [x**2, a * x**2 + x, x**3, x**2 - 1]
        picks = rng.sample(pool, max(1, k - 1))
        return [sympy.expand(x + a)] + [sympy.expand(p) for p in picks]
    # dependent: last element is a small polynomial in the earlier ones
    k = max(k, 2)
    nv = rng.randint(1, 3)
    base = [_random_poly(rng, nv, 1) for _ in range(k - 1)]
    c1, c2 = rng.choice([-1, 1, 2]), rng.choice([-1, 1])
    if k == 2:
        last = c1 * base[0] ** 2 + c2
    else:
        last = rng.choice([c1 * base[0] + c2 * base[1], base[0] * base[1] + c1, base[0] ** 2 - c2 * base[1]])
    return base + [sympy.expand(last)]


def _rref_kernel(rows: list[list[Fraction]], ncols: int) -> list[dict[int, Fraction]]:
    """Kernel of the linear map given by ``rows`` (vectors on ncols unknowns),
    one vector per free column: {column: value}."""
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        vec = {fcol: Fraction(1)}
        for i, pc in enumerate(pivots):
            if m[i][fcol] != 0:
                vec[pc] = -m[i][fcol]
        basis.append(vec)
    return basis


def relation_search(elems, max_deg: int = 3, bound: int = 3) -> tuple | None:
    """Exhaustive search for a nonzero integer relation P(elems) = 0 with
    deg P <= max_deg and coefficients in [-bound, bound].

    Every such P lies in the rational kernel of the evaluation map on
    monomials of degree <= max_deg and is fixed by its values on the free
    columns, so it suffices to scan those values in [-bound, bound].
    Returns the exponent/coefficient list of a relation, or None.
    """
    k = len(elems)
    exps = [e for deg in range(max_deg + 1) for e in _exps(k, deg)]
    polys = []
    for alpha in exps:
        val = sympy.Integer(1)
        for el, a in zip(elems, alpha):
            val *= el**a
        polys.append(sympy.Poly(sympy.expand(val), *_XS).as_dict())
    keys = sorted({m for p in polys for m in p})
    rows = [[_fraction(p.get(m, 0)) for p in polys] for m in keys]
    kernel = _rref_kernel(rows, len(exps))
    if not kernel:
        return None
    values = range(-bound, bound + 1)
    # fewer nonzero free values first: relations are found early
    for support in range(1, len(kernel) + 1):
        for idx in itertools.combinations(range(len(kernel)), support):
            for vals in itertools.product([v for v in values if v], repeat=support):
                vec = {}
                for i, v in zip(idx, vals):
                    for c, x in kernel[i].items():
                        vec[c] = vec.get(c, 0) + v * x
                if all(x.denominator == 1 and abs(x) <= bound for x in vec.values()) and any(vec.values()):
                    return tuple((exps[c], int(x)) for c, x in sorted(vec.items()) if x)
    return None


def _fraction(c) -> Fraction:
    r = sympy.Rational(c)
    return Fraction(int(r.p), int(r.q))


def _exps(k: int, deg: int):
    for combo in itertools.combinations_with_replacement(range(k), deg):
        alpha = [0] * k
        for i in combo:
            alpha[i] += 1
        yield tuple(alpha)


def jacobian_vs_search(seed: int = 0, size: int = 30) -> SuiteResult:
    res = SuiteResult("jacobian_vs_search", seed, size)
    rng = _rng(res.name, seed)
    F = ResidueField(("x1", "x2", "x3"))
    for case in range(size):
        elems = jacobian_instance(rng)
        rels = [F.from_sympy(e) for e in elems]
        jac = algebraically_independent_over(rels, ResSubfield(()))
        rel = relation_search(elems)
        res.checked += 1
        res.bump("independent" if jac else "dependent")
        if jac != (rel is None):
            res.fail(case=case, elements=[str(e) for e in elems], jacobian=jac, relation=str(rel))
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "valuation_axioms": valuation_axioms,
    "separation_sampling": separation_sampling,
    "constructions": constructions,
    "lift_family": lift_family,
    "compositum": compositum,
    "ramified_example": ramified_example,
    "refinement": refinement,
    "iso_extension": iso_extension,
    "jacobian_vs_search": jacobian_vs_search,
}


def run_suite(name: str, seed: int = 0, size: int | None = None) -> SuiteResult:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; known: {sorted(SUITES)}") from None
    return fn(seed) if size is None else fn(seed, size)
