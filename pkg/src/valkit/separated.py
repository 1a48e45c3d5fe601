"""Separated bases over a valued subfield C: decision, construction, lifting.

The decision procedure partitions the vectors by valuation modulo the value
group of C, moves every class member to a common valuation with an element
of C, and asks whether the resulting leading residues are linearly
independent over k_C.  A dependence there lifts to an explicit combination
whose valuation jumps above the expected minimum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from ._reduction import CoefficientField, Reducer, ReductionResult, determinant
from .errors import (
    HypothesisViolation,
    InternalInconsistency,
    NotIndependent,
    PrecisionExhausted,
)
from .hahn_series import HahnSeries
from .ordered_groups import GammaElement
from .presentations import (
    GAMMA_INTERSECTION,
    RESIDUE_DISJOINT,
    Presentation,
    check_hypotheses,
)
from .residue_algebra import linearly_independent_over
from .rv_sort import RvElement

__all__ = [
    "SeparationWitness",
    "BasisReport",
    "check_separated",
    "make_separated_trivial",
    "make_separated",
    "check_lift",
    "compositum_check",
    "CompositumReport",
    "rv_of_combination",
    "check_combination",
    "monomial_tuples",
    "SEPARATED_GOOD",
    "SEPARATED_NOT_GOOD",
    "NOT_SEPARATED",
    "NOT_INDEPENDENT",
]

SEPARATED_GOOD = "separated-good"
SEPARATED_NOT_GOOD = "separated-not-good"
NOT_SEPARATED = "not-separated"
NOT_INDEPENDENT = "not-independent"


@dataclass
class SeparationWitness:
    coefficients: list[HahnSeries]
    achieved: GammaElement
    bound: GammaElement
    achieved_is_lower_bound: bool = False

    def to_json(self) -> dict:
        return {
            "coefficients": [str(c) for c in self.coefficients],
            "achieved": self.achieved.to_json(),
            "bound": self.bound.to_json(),
            "achieved_is_lower_bound": self.achieved_is_lower_bound,
        }


@dataclass
class BasisReport:
    verdict: str
    partition: list[list[int]]
    witness: SeparationWitness | None = None
    detail: str = ""
    degree: int | None = None

    @property
    def separated(self) -> bool:
        return self.verdict in (SEPARATED_GOOD, SEPARATED_NOT_GOOD)

    @property
    def good(self) -> bool:
        return self.verdict == SEPARATED_GOOD

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "partition": self.partition, "degree": self.degree}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.detail:
            out["detail"] = self.detail
        return out


def _field_of(C, d) -> CoefficientField:
    if isinstance(C, CoefficientField):
        return C
    return C.coefficient_field(d)


def _partition(vals: Sequence[GammaElement], K: CoefficientField) -> list[list[int]]:
    classes: list[list[int]] = []
    for i, v in enumerate(vals):
        for cls in classes:
            if K.same_class(vals[cls[0]], v):
                cls.append(i)
                break
        else:
            classes.append([i])
    return classes


def _independence_probe(vectors: Sequence[HahnSeries], K: CoefficientField) -> str | None:
    """Reason the vectors are C-dependent, if the reducer can show it."""
    red = Reducer(K, track=False)
    try:
        for v in vectors:
            red.push(v)
    except NotIndependent as exc:
        return str(exc)
    except PrecisionExhausted:
        return None
    return None


def check_separated(vectors: Sequence[HahnSeries], C, d: int | None = None) -> BasisReport:
    """Decide whether ``vectors`` form a separated basis over C (a presentation
    or a prepared :class:`CoefficientField`), and whether it is good."""
    vectors = list(vectors)
    K = _field_of(C, d)
    deg = d if d is not None else getattr(C, "degree_bound", None)
    for i, v in enumerate(vectors):
        if v.is_exact_zero():
            return BasisReport(NOT_INDEPENDENT, [], detail=f"vector {i} is zero", degree=deg)
    for i, j in itertools.combinations(range(len(vectors)), 2):
        if vectors[i] == vectors[j]:
            return BasisReport(NOT_INDEPENDENT, [], detail=f"vectors {i} and {j} coincide", degree=deg)
    vals = [v.valuation() for v in vectors]  # PrecisionExhausted propagates
    classes = _partition(vals, K)
    good = True
    U = vectors[0].U if vectors else None
    for cls in classes:
        g0 = vals[cls[0]]
        mults = [K.multiplier(g0 - vals[j]) for j in cls]
        if any(vals[j] != g0 for j in cls):
            good = False
        rhos = [m.leading()[1] * vectors[j].leading()[1] for m, j in zip(mults, cls)]
        indep, w = linearly_independent_over(rhos, K.subfield)
        if indep:
            continue
        coeffs = [U.zero() for _ in vectors]
        for wi, m, j in zip(w, mults, cls):
            if wi:
                coeffs[j] = K.lift(wi) * m
        combo = U.zero()
        for c, v in zip(coeffs, vectors):
            if not c.is_exact_zero():
                combo = combo + c * v
        if combo.is_exact_zero():
            return BasisReport(
                NOT_INDEPENDENT, classes, detail="a C-combination of the vectors vanishes exactly", degree=deg
            )
        reason = _independence_probe(vectors, K)
        if reason is not None:
            return BasisReport(NOT_INDEPENDENT, classes, detail=reason, degree=deg)
        if combo.terms:
            achieved, lower = combo.valuation(), False
        else:
            achieved, lower = combo.cutoff, True
        wit = SeparationWitness(coeffs, achieved, g0, lower)
        return BasisReport(NOT_SEPARATED, classes, wit, degree=deg)
    return BasisReport(SEPARATED_GOOD if good else SEPARATED_NOT_GOOD, classes, degree=deg)


@dataclass
class Construction:
    basis: list[HahnSeries]
    change: list[list[HahnSeries]]
    inverse: list[list[HahnSeries]]
    steps: list[int] = field(default_factory=list)

    def determinant(self) -> HahnSeries:
        return determinant(self.change)

    def to_json(self) -> dict:
        return {
            "basis": [str(b) for b in self.basis],
            "change_matrix": [[str(c) for c in row] for row in self.change],
            "inverse_matrix": [[str(c) for c in row] for row in self.inverse],
            "steps": self.steps,
        }


def _construct(vectors, K, target=None, max_steps=None) -> Construction:
    red = Reducer(K, max_steps=max_steps, target=target, goodify=True)
    for v in vectors:
        red.push(v)
    res: ReductionResult = red.result()
    return Construction(res.basis, res.change, res.inverse, res.steps)


def make_separated_trivial(vectors: Sequence[HahnSeries], C=None, d: int | None = None) -> Construction:
    """Separated basis over a trivially valued C (the prime field by default).

    Vectors are inserted in order; a vector whose valuation is new is kept,
    otherwise its leading datum is cancelled against the prefix and the
    residual is processed again.
    """
    vectors = list(vectors)
    if C is None:
        K = CoefficientField.prime(vectors[0].U)
    else:
        K = _field_of(C, d)
        if not K.trivially_valued:
            raise HypothesisViolation(f"{K.name} is not trivially valued", failed=("trivially_valued",))
    return _construct(vectors, K)


def make_separated(
    vectors: Sequence[HahnSeries],
    C,
    target: GammaElement | None = None,
    d: int | None = None,
    max_steps: int | None = None,
) -> Construction:
    """Good separated basis of the C-span of ``vectors`` with change matrices.

    Raises PrecisionExhausted when a residual keeps cancelling until the
    precision (or ``target``) runs out, and NotIndependent on a C-relation.
    """
    return _construct(list(vectors), _field_of(C, d), target=target, max_steps=max_steps)


def check_lift(
    basis: Sequence[HahnSeries],
    C: Presentation,
    M: Presentation,
    L: Presentation | None = None,
    d: int | None = None,
) -> BasisReport:
    """Re-run the criterion for ``basis`` with M as coefficient field.

    Preconditions, checked before anything else: the value groups of L and M
    meet in that of C, the residue fields are linearly disjoint over k_C, and
    the basis is good over C.
    """
    basis = list(basis)
    if L is None:
        L = Presentation("L", C.U, basis, base=C, degree_bound=C.degree_bound)
    hyp = check_hypotheses(L, M, C, d)
    failed = hyp.failed([GAMMA_INTERSECTION, RESIDUE_DISJOINT])
    if failed:
        details = "; ".join(f"{e.name}: {e.detail}" for e in hyp.entries if e.name in failed)
        raise HypothesisViolation(f"hypotheses fail: {details}", failed=tuple(failed))
    over_C = check_separated(basis, C, d)
    if not over_C.good:
        raise HypothesisViolation(f"basis is {over_C.verdict} over {C.name}", failed=("good_over_C",))
    return check_separated(basis, M, d)


# -- compositum --


@dataclass
class CompositumReport:
    checked: int = 0
    mismatches: list[dict] = field(default_factory=list)
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict:
        return {"checked": self.checked, "mismatches": self.mismatches[:20], "mismatch_count": len(self.mismatches), "skipped": self.skipped}


def _combination(ell, m) -> tuple[HahnSeries, list[int], GammaElement | None]:
    """x = sum ell_i m_i, the indices attaining the min valuation, and the min."""
    U = ell[0].U
    x = U.zero()
    mins: list[int] = []
    best = None
    for i, (li, mi) in enumerate(zip(ell, m)):
        if mi.is_exact_zero():
            continue
        x = x + li * mi
        v = li.valuation() + mi.valuation()
        if best is None or v < best:
            best, mins = v, [i]
        elif v == best:
            mins.append(i)
    return x, mins, best


def check_combination(ell: Sequence[HahnSeries], m: Sequence[HahnSeries]) -> dict | None:
    """None if the valuation and residue formulas hold for sum ell_i m_i."""
    x, I, best = _combination(ell, m)
    if best is None:
        return None
    if not x.terms:
        return {"kind": "vanished", "m": [str(mi) for mi in m], "x": str(x)}
    vx = x.valuation()
    if vx != best:
        return {"kind": "valuation", "m": [str(mi) for mi in m], "expected": best.to_json(), "got": vx.to_json()}
    if vx.is_zero():
        F = x.U.field
        predicted = F.zero()
        for i in I:
            predicted = predicted + ell[i].leading()[1] * m[i].leading()[1]
        if predicted != x.residue():
            return {"kind": "residue", "m": [str(mi) for mi in m], "expected": str(predicted), "got": str(x.residue())}
    return None


def compositum_check(
    ell: Sequence[HahnSeries], m_tuples, C: Presentation | None = None
) -> CompositumReport:
    """Check v(sum l_i m_i) = min v(l_i m_i) and the residue decomposition on
    each tuple of M-elements in ``m_tuples``."""
    rep = CompositumReport()
    for m in m_tuples:
        if all(mi.is_exact_zero() for mi in m):
            rep.skipped += 1
            continue
        rep.checked += 1
        bad = check_combination(ell, m)
        if bad is not None:
            rep.mismatches.append(bad)
    return rep


def monomial_tuples(
    k: int,
    mons: Sequence[HahnSeries],
    cyclic_shifts: int | None = None,
    pair_mons: Sequence[HahnSeries] | None = None,
):
    """Coefficient tuples for compositum sweeps: every single placement of
    ``mons``, every pair placement of ``pair_mons`` (default ``mons``), and
    full tuples along cyclic shifts of ``mons``."""
    U = mons[0].U
    pair_mons = mons if pair_mons is None else pair_mons
    zero = U.zero()
    for i in range(k):
        for a in mons:
            t = [zero] * k
            t[i] = a
            yield t
    for i, j in itertools.combinations(range(k), 2):
        for a in pair_mons:
            for b in pair_mons:
                t = [zero] * k
                t[i], t[j] = a, b
                yield t
    if k > 2:
        N = len(mons)
        shifts = range(N) if cyclic_shifts is None else range(min(cyclic_shifts, N))
        for s in shifts:
            for step in range(1, N):
                yield [mons[(s + step * i) % N] for i in range(k)]


def rv_of_combination(ell: Sequence[HahnSeries], m: Sequence[HahnSeries]) -> RvElement:
    """rv(sum m_i l_i) from the min-attaining indices, checked against direct evaluation."""
    x, I, best = _combination(ell, m)
    if best is None:
        raise ValueError("all coefficients are zero")
    coeff = None
    for i in I:
        c = ell[i].leading()[1] * m[i].leading()[1]
        coeff = c if coeff is None else coeff + c
    if not coeff:
        raise InternalInconsistency(
            f"leading terms cancel on the minimal set {I}: the basis is not separated over these coefficients"
        )
    predicted = RvElement(best, coeff)
    if not x.terms or x.rv() != predicted:
        got = x.rv() if x.terms else "undetermined"
        raise InternalInconsistency(f"rv formula gives {predicted}, direct evaluation gives {got}")
    return predicted
