"""Isomorphisms of presented fields, their extension to composita, and the
refinement of a valuation by demoting residue variables to infinitesimals.

An isomorphism is given on generators.  Its extension to LM is defined on a
good separated basis l of L over C by sigma(sum l_i m_i) = sum sigma(l_i) m_i
and then checked exhaustively on the degree-d shadow: valuations, residues,
leading data and power-coset classes must be preserved.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from ._reduction import Reducer, decompose
from .errors import (
    HypothesisViolation,
    InternalInconsistency,
    NotIndependent,
    PrecisionExhausted,
    UnsupportedRefinement,
)
from .hahn_series import HahnSeries, Universe
from .ordered_groups import GammaElement, subgroup_intersection
from .presentations import (
    GAMMA_INTERSECTION,
    RESIDUE_DISJOINT,
    Presentation,
    _monomials,
    check_hypotheses,
    residue_variables,
    value_group_shadow,
)
from .residue_algebra import ResElement
from .rv_sort import PowerModel, check_lambda_identity, rv_independent
from .separated import check_separated, monomial_tuples, rv_of_combination

__all__ = [
    "FieldIso",
    "ExtensionReport",
    "extend_iso",
    "RefinedUniverse",
    "refine_valuation",
    "verify_refinement",
    "RefinementReport",
]

FLAGS = ("C", "gamma", "k", "rv")


def _vanishes(s: HahnSeries) -> bool:
    """Zero as far as the precision can tell."""
    return not s.terms


def _exponent_tuples(n: int, d: int):
    yield (0,) * n
    for deg in range(1, d + 1):
        for combo in itertools.combinations_with_replacement(range(n), deg):
            alpha = [0] * n
            for i in combo:
                alpha[i] += 1
            yield tuple(alpha)


@dataclass
class FieldIso:
    """sigma: L -> L' given by images of L's own generators; C is fixed pointwise."""

    source: Presentation
    images: list[HahnSeries]
    fixes: frozenset = frozenset({"C"})

    def __post_init__(self):
        if len(self.images) != len(self.source.generators):
            raise ValueError("one image per generator of the source presentation is required")
        for im in self.images:
            if not im.is_determinable():
                raise ValueError(f"image {im} has no determinable leading term")
        bad = set(self.fixes) - set(FLAGS)
        if bad:
            raise ValueError(f"unknown fix flags {sorted(bad)}")
        self.fixes = frozenset(self.fixes) | {"C"}

    @classmethod
    def identity(cls, L: Presentation, fixes=FLAGS) -> "FieldIso":
        return cls(L, list(L.generators), frozenset(fixes))

    def apply_monomial(self, alpha: Sequence[int]) -> HahnSeries:
        out = self.source.U.one()
        for im, a in zip(self.images, alpha):
            if a:
                out = out * im**a
        return out

    def verify_flags(self) -> list[str]:
        """Declared flags that fail on the generators."""
        fails = []
        L = self.source
        for i, (g, im) in enumerate(zip(L.generators, self.images)):
            if "gamma" in self.fixes and g.valuation() != im.valuation():
                fails.append(f"gamma: v(sigma(g{i})) = {im.valuation()} != {g.valuation()}")
            if "rv" in self.fixes and g.rv() != im.rv():
                fails.append(f"rv: rv(sigma(g{i})) = {im.rv()} != {g.rv()}")
        if "k" in self.fixes:
            # residues of valuation-0 monomials (exponents may be negative)
            vals = [g.valuation() for g in L.generators]
            for alpha in _valuation_kernel(vals):
                src = L.U.one()
                for g, a in zip(L.generators, alpha):
                    if a:
                        src = src * g**a
                img = self.apply_monomial(alpha)
                if src.residue() != img.residue():
                    fails.append(f"k: residue of monomial {alpha} moves: {src.residue()} -> {img.residue()}")
        return fails

    def to_json(self) -> dict:
        return {
            "source": self.source.name,
            "images": [str(im) for im in self.images],
            "fixes": sorted(self.fixes),
        }


def _valuation_kernel(vals: Sequence[GammaElement]) -> list[tuple[int, ...]]:
    from .ordered_groups import _scaled, hnf_with_transform

    if not vals:
        return []
    _, rows = _scaled([v.key for v in vals])
    H, T = hnf_with_transform(rows)
    return [tuple(t) for h, t in zip(H, T) if not any(h)]


@dataclass
class ExtensionReport:
    degree: int
    basis: list[str] = field(default_factory=list)
    checked: int = 0
    counts: dict = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)
    flagged: list[dict] = field(default_factory=list)
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def bump(self, key: str, n: int = 1) -> None:
        self.counts[key] = self.counts.get(key, 0) + n

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "basis": self.basis,
            "checked": self.checked,
            "counts": dict(sorted(self.counts.items())),
            "failures": self.failures[:20],
            "failure_count": len(self.failures),
            "flagged": self.flagged[:20],
            "flagged_count": len(self.flagged),
            "skipped": self.skipped,
        }


def _signed_tuples(k: int, mons: Sequence[HahnSeries]):
    yield from monomial_tuples(k, mons)
    U = mons[0].U
    zero = U.zero()
    for i, j in itertools.combinations(range(k), 2):
        for a in mons:
            for b in mons:
                t = [zero] * k
                t[i], t[j] = a, -b
                yield t


def extend_iso(
    sigma: FieldIso,
    L: Presentation,
    M: Presentation,
    C: Presentation,
    d: int = 3,
    model: PowerModel | None = None,
    ns: Sequence[int] = (),
) -> ExtensionReport:
    """Extend sigma by the identity on M and verify the extension on the degree-d shadow."""
    if sigma.source is not L:
        raise ValueError("sigma must be defined on L")
    hyp = check_hypotheses(L, M, C, d)
    failed = hyp.failed([GAMMA_INTERSECTION, RESIDUE_DISJOINT])
    if failed:
        raise HypothesisViolation(f"hypotheses fail: {failed}", failed=tuple(failed))
    flag_fails = sigma.verify_flags()
    if flag_fails:
        raise HypothesisViolation("declared fixes fail on generators: " + "; ".join(flag_fails), failed=("fixes",))
    if model is not None and not ns:
        ns = (2,) if model.kind == "rcf" else (2, 3)
    U = L.U
    rep = ExtensionReport(d)
    rv_fixed = "rv" in sigma.fixes
    KC = C.coefficient_field(d)

    # good separated basis of the span of L's own monomials over C
    alphas = list(_exponent_tuples(len(L.generators), d))
    mons = []
    for alpha in alphas:
        m = U.one()
        for g, a in zip(L.generators, alpha):
            if a:
                m = m * g**a
        mons.append(m)
    red = Reducer(KC)
    accepted: list[int] = []
    relations: list[tuple[int, dict]] = []
    for idx, m in enumerate(mons):
        try:
            red.push(m)
            accepted.append(idx)
        except NotIndependent as exc:
            relations.append((idx, exc.relation))
        except PrecisionExhausted:
            rep.skipped += 1
    smons = {idx: sigma.apply_monomial(alphas[idx]) for idx in range(len(mons))}
    ell = red.basis
    sell = []
    for row in red.change:
        s = U.zero()
        for j, c in row.items():
            s = s + c * smons[accepted[j]]
        sell.append(s)
    rep.basis = [str(b) for b in ell]

    # well-definedness: C-relations among monomials map to relations
    for idx, rel in relations:
        total = U.zero()
        for j, c in rel.items():
            src = idx if j == len(accepted) else accepted[j]
            total = total + c * smons[src]
        rep.bump("relations")
        if not _vanishes(total):
            rep.failures.append({"check": "relation", "monomial": str(mons[idx]), "image_residual": str(total)})

    # images stay separated over M
    srep = check_separated(sell, M, d)
    rep.bump("image_basis")
    if not srep.separated:
        rep.failures.append({"check": "image_basis", "verdict": srep.verdict})

    # ring homomorphism on basis products
    for i, j in itertools.combinations_with_replacement(range(len(ell)), 2):
        coeffs = decompose(ell, ell[i] * ell[j], KC)
        if coeffs is None:
            continue
        via = U.zero()
        for k, c in coeffs.items():
            via = via + c * sell[k]
        rep.bump("ring_hom")
        if not _vanishes(via - sell[i] * sell[j]):
            rep.failures.append({"check": "ring_hom", "pair": [i, j], "difference": str(via - sell[i] * sell[j])})

    if model is not None:
        reps_cache = {}
        for n in ns:
            reps = model.representatives(n, U.rank, U.field)
            reps_cache[n] = reps
            bad = check_lambda_identity(n, model, reps)
            rep.bump(f"lambda_n{n}", len(reps) ** 3)
            for r, i, j in bad[:5]:
                rep.failures.append({"check": "lambda_table", "n": n, "rho": r, "x": i, "y": j})

    mM = list(_monomials(M.generators, d, U))
    for m in _signed_tuples(len(ell), mM):
        if all(mi.is_exact_zero() for mi in m):
            continue
        x = U.zero()
        y = U.zero()
        for li, si, mi in zip(ell, sell, m):
            if not mi.is_exact_zero():
                x = x + li * mi
                y = y + si * mi
        if not x.terms or not y.terms:
            rep.skipped += 1
            continue
        rep.checked += 1
        vx, vy = x.valuation(), y.valuation()
        rep.bump("valuation")
        if vx != vy:
            rep.failures.append({"check": "valuation", "x": str(x), "expected": vx.to_json(), "got": vy.to_json()})
            continue
        if vx.is_zero():
            rep.bump("residue")
            if x.residue() != y.residue():
                rep.failures.append(
                    {"check": "residue", "x": str(x), "expected": str(x.residue()), "got": str(y.residue())}
                )
        rx, ry = x.rv(), y.rv()
        rep.bump("rv")
        if rx != ry:
            entry = {"check": "rv", "x": str(x), "expected": str(rx), "got": str(ry)}
            (rep.failures if rv_fixed else rep.flagged).append(entry)
        if model is not None:
            for n in ns:
                rep.bump(f"power_coset_n{n}")
                cx, cy = model.coset(rx, n), model.coset(ry, n)
                if cx != cy:
                    entry = {"check": "power_coset", "n": n, "x": str(x), "expected": list(cx), "got": list(cy)}
                    (rep.failures if rv_fixed else rep.flagged).append(entry)
    return rep


# -- valuation refinement --


class RefinedUniverse:
    """The base universe with residue variables x_j demoted to infinitesimal axes.

    With the standard layout the new axes are the least significant
    coordinates, ordered so that the axis of the first pair is the smallest:
    inf block = base inf axes, then delta_r, ..., delta_1.  The
    ``delta_above_main`` layout puts them in front of the main axes instead;
    it exists as a negative control and is never a refinement.
    """

    def __init__(self, base: Universe, demoted: Sequence[str], pairs=(), layout: str = "standard"):
        if layout not in ("standard", "delta_above_main"):
            raise ValueError(f"unknown layout {layout!r}")
        self.base = base
        self.demoted = list(demoted)
        self.pairs = list(pairs)
        self.layout = layout
        names = set(base.axes) | set(base.variables) | set(base.inf_axes)
        deltas = []
        for i in range(len(self.demoted)):
            nm = f"delta{i + 1}"
            while nm in names:
                nm = "_" + nm
            deltas.append(nm)
        self.delta_names = deltas
        keep = [v for v in base.variables if v not in self.demoted]
        ordered = list(reversed(deltas))  # most significant first
        if layout == "standard":
            self.U = Universe(base.axes, keep, base.inf_axes + tuple(ordered), base._precision)
        else:
            self.U = Universe(tuple(ordered) + base.axes, keep, base.inf_axes, base._precision)
        key_names = self.U.axes + self.U.inf_axes
        self.delta_positions = [key_names.index(nm) for nm in deltas]
        self._base_positions = [key_names.index(nm) for nm in base.axes + base.inf_axes]
        self._demoted_idx = [base.field.index[v] for v in self.demoted]
        self._keep_idx = [base.field.index[v] for v in keep]

    @property
    def r(self) -> int:
        return len(self.demoted)

    def delta(self, i: int) -> GammaElement:
        """Exponent of the demoted variable of pair i (0-based)."""
        key = [0] * (self.U.n_main + self.U.n_inf)
        key[self.delta_positions[i]] = 1
        return GammaElement(key[: self.U.n_main], key[self.U.n_main :])

    def lift_gamma(self, g: GammaElement, delta_exps: Sequence[int] = ()) -> GammaElement:
        key = [0] * (self.U.n_main + self.U.n_inf)
        for pos, c in zip(self._base_positions, g.key):
            key[pos] = c
        for pos, c in zip(self.delta_positions, delta_exps):
            key[pos] = c
        return GammaElement(key[: self.U.n_main], key[self.U.n_main :])

    def quotient(self, g: GammaElement) -> GammaElement:
        """Drop the delta coordinates."""
        key = [g.key[p] for p in self._base_positions]
        return GammaElement(key[: self.base.n_main], key[self.base.n_main :])

    def in_delta(self, g: GammaElement) -> bool:
        return all(g.key[p] == 0 for p in self._base_positions)

    def _project(self, poly_elem: ResElement) -> ResElement:
        F = self.U.field
        terms = {tuple(m[i] for i in self._keep_idx): c for m, c in poly_elem.num}
        return F.from_poly(terms)

    def _delta_series(self, groups: dict) -> HahnSeries:
        out = self.U.zero()
        for alpha, coeff in groups.items():
            out = out + self.U.monomial(self._project(coeff), self.lift_gamma(self.base.gamma_zero, alpha))
        return out

    def refine(self, s: HahnSeries) -> HahnSeries:
        """Re-expand a base series in the refined universe."""
        if s.U is not self.base:
            raise ValueError("series does not live in the base universe")
        out = self.U.zero()
        for g, c in s.terms:
            num, den = c.split_by(self.demoted)
            nser = self._delta_series(num)
            dser = self._delta_series(den)
            if not dser.is_monomial():
                cser = nser * dser.inverse()
            else:
                dg, dc = dser.terms[0]
                cser = nser.shift(-dg).scale(dc.inverse())
            out = out + cser.shift(self.lift_gamma(g))
        if s.cutoff is not None:
            out = out + self.U.big_o(self.lift_gamma(s.cutoff))
        return out

    def unrefine(self, s: HahnSeries) -> HahnSeries:
        """Inverse of :meth:`refine` on polynomial re-expansions."""
        F = self.base.field
        out = self.base.zero()
        for g, c in s.terms:
            dexp = [int(g.key[p]) for p in self.delta_positions]
            mono = F.one()
            for v, e in zip(self.demoted, dexp):
                mono = mono * F.var(v) ** e
            terms = {}
            for m, coeff in c.num:
                full = [0] * len(self.base.variables)
                for i, e in zip(self._keep_idx, m):
                    full[i] = e
                terms[tuple(full)] = coeff
            num = F.from_poly(terms)
            dterms = {}
            for m, coeff in c.den:
                full = [0] * len(self.base.variables)
                for i, e in zip(self._keep_idx, m):
                    full[i] = e
                dterms[tuple(full)] = coeff
            base_c = num / F.from_poly(dterms) * mono
            out = out + self.base.monomial(base_c, self.quotient(g))
        if s.cutoff is not None:
            out = out + self.base.big_o(self.quotient(s.cutoff))
        return out

    def presentation(self, P: Presentation, memo: dict | None = None) -> Presentation:
        memo = {} if memo is None else memo
        if id(P) in memo:
            return memo[id(P)]
        base = self.presentation(P.base, memo) if P.base is not None else None
        out = Presentation(P.name + "'", self.U, [self.refine(g) for g in P.generators], base, P.degree_bound)
        memo[id(P)] = out
        return out

    def to_json(self) -> dict:
        return {
            "layout": self.layout,
            "demoted": self.demoted,
            "delta_axes": self.delta_names,
            "universe": self.U.to_json(),
        }


def refine_valuation(
    L: Presentation,
    M: Presentation,
    C: Presentation,
    a: Sequence[HahnSeries],
    e: Sequence[HahnSeries],
    b: Sequence[HahnSeries] = (),
    d: int | None = None,
    layout: str = "standard",
) -> RefinedUniverse:
    """Demote res(a_i/e_i) (a rational multiple of a single variable) to a new
    infinitesimal axis delta_i, with delta_1 << ... << delta_r."""
    U = L.U
    if len(a) != len(e):
        raise ValueError("a and e must have the same length")
    if not a:
        return RefinedUniverse(U, [], [], layout)
    indep = rv_independent(list(a), list(b), list(e), L, M, C, d)
    if not indep:
        raise HypothesisViolation(f"rv independence fails: {indep.diagnostic}", failed=("rv_independent",))
    protected = residue_variables(C, d) | residue_variables(M, d)
    demoted = []
    for i, (ai, ei) in enumerate(zip(a, e)):
        res = (ai / ei).residue()
        vars_ = res.variables()
        if len(vars_) != 1:
            raise UnsupportedRefinement(f"res(a[{i}]/e[{i}]) = {res} is not a multiple of one variable")
        (x,) = vars_
        ratio = res / U.field.var(x)
        if not ratio.is_constant() or x in protected or x in demoted:
            raise UnsupportedRefinement(f"res(a[{i}]/e[{i}]) = {res} is not a distinguished residue variable")
        demoted.append(x)
    return RefinedUniverse(U, demoted, list(zip(a, e)), layout)


@dataclass
class RefinementReport:
    degree: int
    assertions: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.assertions.values())

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "assertions": dict(self.assertions),
            "witnesses": dict(self.witnesses),
            "counts": dict(self.counts),
        }


def _convexity_witness(R: RefinedUniverse):
    """(low, h, high) with low < h < high, low and high in the delta span, h not;
    None if the delta coordinates are the least significant ones."""
    if not R.delta_positions:
        return None
    U = R.U
    n = U.n_main + U.n_inf
    for q in R.delta_positions:
        for p in range(q + 1, n):
            if p in R.delta_positions:
                continue
            key = [0] * n
            key[p] = 1
            h = GammaElement(key[: U.n_main], key[U.n_main :])
            high = R.delta(R.delta_positions.index(q))
            low = U.gamma_zero
            if low < h < high and not R.in_delta(h):
                return low, h, high
    return None


def verify_refinement(
    R: RefinedUniverse,
    L: Presentation,
    M: Presentation,
    C: Presentation,
    d: int = 4,
) -> RefinementReport:
    """Check the four refinement properties on the degree-d shadows."""
    rep = RefinementReport(d)
    U = R.base

    # (1) quotient recovers v
    ok = True
    count = 0
    for P in (L, M):
        for x in _monomials(P.all_generators, d, U):
            count += 1
            xr = R.refine(x)
            if not xr.terms or R.quotient(xr.valuation()) != x.valuation():
                ok = False
                rep.witnesses.setdefault("quotient", str(x))
    rep.assertions["quotient_recovers_v"] = ok
    rep.counts["quotient"] = count

    # (2) the delta span is convex
    wit = _convexity_witness(R)
    rep.assertions["delta_convex"] = wit is None
    if wit is not None:
        rep.witnesses["delta_convex"] = {
            "low": wit[0].to_json(),
            "between": wit[1].to_json(),
            "high": wit[2].to_json(),
        }

    # (3) value groups meet in that of C
    memo: dict = {}
    Lr, Mr, Cr = (R.presentation(P, memo) for P in (L, M, C))
    GL, GM, GC = (value_group_shadow(P, d) for P in (Lr, Mr, Cr))
    inter = subgroup_intersection(GL, GM)
    rep.assertions["gamma_intersection"] = inter.same_as(GC)
    if not inter.same_as(GC):
        extra = next((g for g in inter.basis() if not GC.contains(g)), None)
        rep.witnesses["gamma_intersection"] = extra.to_json() if extra is not None else str(inter)

    # (4) rv formula in the refined universe on separated combinations
    ok = True
    count = 0
    try:
        own = [m for m in _monomials(Lr.generators, d, R.U)]
        red = Reducer(Cr.coefficient_field(d), track=False)
        for m in own:
            try:
                red.push(m)
            except (NotIndependent, PrecisionExhausted):
                pass
        ell = red.basis
        base_ell = [R.unrefine(x) for x in ell]
        sep = check_separated(base_ell, M, d)
        if not sep.separated:
            ok = False
            rep.witnesses["rv_formula"] = f"basis not separated over M under v: {sep.verdict}"
        mM = list(_monomials(Mr.generators, d, R.U))
        low = list(_monomials(Mr.generators, max(1, d // 2), R.U))
        for m in monomial_tuples(len(ell), mM, cyclic_shifts=8, pair_mons=low):
            if all(mi.is_exact_zero() for mi in m):
                continue
            count += 1
            try:
                rv_of_combination(ell, m)
            except InternalInconsistency as exc:
                ok = False
                rep.witnesses.setdefault("rv_formula", str(exc))
    except PrecisionExhausted as exc:
        ok = False
        rep.witnesses["rv_formula"] = f"precision exhausted: {exc}"
    rep.assertions["rv_formula"] = ok
    rep.counts["rv_formula"] = count
    return rep
