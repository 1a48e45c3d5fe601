"""Finitely presented valued subfields and the standing-hypothesis checks.

A presentation names a base field (the prime field Q, trivially valued, or
another presentation) and a list of generator series.  Everything global
about the field is only seen through its *degree-d shadow*: the monomials of
total degree <= d in all generators, reduced to a separated basis of their
Q-span.  Value groups and residue variables computed from the shadow are
lower bounds, and reports say so.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Iterator, Sequence

from ._reduction import CoefficientField, Reducer
from .errors import NotIndependent, PrecisionExhausted
from .hahn_series import HahnSeries, Universe
from .ordered_groups import (
    GammaSubgroup,
    _scaled,
    hnf_with_transform,
    subgroup_intersection,
    torsion_free_quotient,
)
from .residue_algebra import ResSubfield, linearly_independent_over

__all__ = [
    "Presentation",
    "FieldShadow",
    "enumerate_elements",
    "value_group_shadow",
    "residue_variables",
    "coefficient_field",
    "check_hypotheses",
    "HypothesisReport",
]


class Presentation:
    """C(generators) over ``base``; base None means the prime field Q."""

    def __init__(
        self,
        name: str,
        U: Universe,
        generators: Sequence[HahnSeries] = (),
        base: "Presentation | None" = None,
        degree_bound: int = 4,
    ):
        if degree_bound < 1:
            raise ValueError("degree bound must be positive")
        gens = tuple(generators)
        for g in gens:
            if g.U is not U:
                raise ValueError(f"generator {g} is not in {U}")
            if not g.is_determinable():
                raise ValueError(f"generator {g} has no determinable leading term")
        if base is not None and base.U is not U:
            raise ValueError("base presentation lives in another universe")
        self.name = name
        self.U = U
        self.generators = gens
        self.base = base
        self.degree_bound = degree_bound
        self._shadows: dict = {}

    @classmethod
    def prime(cls, U: Universe, name: str = "Q") -> "Presentation":
        return cls(name, U, ())

    @cached_property
    def all_generators(self) -> tuple[HahnSeries, ...]:
        inherited = self.base.all_generators if self.base is not None else ()
        out = list(inherited)
        for g in self.generators:
            if g not in out:
                out.append(g)
        return tuple(out)

    def is_prime(self) -> bool:
        return not self.all_generators

    def contains_base(self, C: "Presentation") -> bool:
        P = self
        while P is not None:
            if P is C:
                return True
            P = P.base
        return C.is_prime()

    def shadow(self, d: int | None = None) -> "FieldShadow":
        d = self.degree_bound if d is None else d
        hit = self._shadows.get(d)
        if hit is None:
            hit = FieldShadow(self, d)
            self._shadows[d] = hit
        return hit

    def coefficient_field(self, d: int | None = None) -> CoefficientField:
        return self.shadow(d).coefficient_field

    def __repr__(self) -> str:
        base = self.base.name if self.base is not None else "Q"
        gens = ", ".join(str(g) for g in self.generators)
        return f"{self.name} = {base}({gens})"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "base": self.base.name if self.base is not None else "Q",
            "generators": [str(g) for g in self.generators],
            "degree_bound": self.degree_bound,
        }


def _monomials(gens: Sequence[HahnSeries], d: int, U: Universe) -> Iterator[HahnSeries]:
    """Monomials of total degree <= d, graded, each degree in index order."""
    yield U.one()
    cache: dict = {(): U.one()}
    for deg in range(1, d + 1):
        for combo in itertools.combinations_with_replacement(range(len(gens)), deg):
            val = cache[combo[:-1]] * gens[combo[-1]]
            cache[combo] = val
            yield val


def enumerate_elements(
    P: Presentation, d: int | None = None, samples: int = 0, seed: int = 0
) -> Iterator[HahnSeries]:
    """All degree-<=d monomials in P's generators, then ``samples`` seeded
    Q-linear combinations of them."""
    d = P.degree_bound if d is None else d
    if d > P.degree_bound:
        raise ValueError(f"degree {d} exceeds the bound {P.degree_bound} of {P.name}")
    mons = list(_monomials(P.all_generators, d, P.U))
    yield from mons
    if samples:
        rng = random.Random(f"{seed}:{P.name}:{d}")
        for _ in range(samples):
            k = rng.randint(2, min(3, len(mons))) if len(mons) > 1 else 1
            picks = rng.sample(range(len(mons)), k)
            s = P.U.zero()
            for i in picks:
                s = s + mons[i] * Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 3))
            if not s.is_exact_zero():
                yield s


class FieldShadow:
    """Degree-d data of a presentation: reduced basis, value group, residue variables."""

    def __init__(self, P: Presentation, d: int):
        self.P = P
        self.d = d
        U = P.U
        seen = set()
        mons = []
        for m in _monomials(P.all_generators, d, U):
            if m not in seen:
                seen.add(m)
                mons.append(m)
        self.monomials = mons
        self.skipped = 0
        # dependent monomials (over Q) are skipped
        red = Reducer(CoefficientField.prime(U), goodify=False, track=False)
        for m in mons:
            try:
                red.push(m)
            except (NotIndependent, PrecisionExhausted):
                self.skipped += 1
        basis = red.basis
        self.reduced = basis
        self.gamma = GammaSubgroup([b.valuation() for b in basis], rank=U.rank)
        self.residue_vars = self._residue_variables()

    def _residue_variables(self) -> frozenset[str]:
        data = [b.leading() for b in self.reduced]
        if not data:
            return frozenset()
        U = self.P.U
        F = U.field
        _, rows = _scaled([g.key for g, _ in data])
        H, T = hnf_with_transform(rows)
        names: set[str] = set()
        for h, alpha in zip(H, T):
            if any(h):
                continue
            if max(abs(a) for a in alpha) > 12:
                # keep it cheap: over-approximate by the variables involved
                for a, (_, c) in zip(alpha, data):
                    if a:
                        names |= c.variables()
                continue
            prod = F.one()
            for a, (_, c) in zip(alpha, data):
                if a:
                    prod = prod * c**a
            names |= prod.variables()
        return frozenset(names)

    @cached_property
    def coefficient_field(self) -> CoefficientField:
        return CoefficientField(self.P.U, self.reduced, self.residue_vars, name=self.P.name)

    @property
    def subfield(self) -> ResSubfield:
        return ResSubfield(self.residue_vars)


def value_group_shadow(P: Presentation, d: int | None = None) -> GammaSubgroup:
    """Lower bound for the value group: span of valuations of the reduced degree-d shadow."""
    return P.shadow(d).gamma


def residue_variables(P: Presentation, d: int | None = None) -> frozenset[str]:
    return P.shadow(d).residue_vars


def coefficient_field(P: Presentation, d: int | None = None) -> CoefficientField:
    return P.coefficient_field(d)


@dataclass
class HypothesisEntry:
    name: str
    status: str  # "pass" | "bounded" | "fail"
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"

    def to_json(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail}


@dataclass
class HypothesisReport:
    degree: int
    entries: list[HypothesisEntry] = field(default_factory=list)

    def entry(self, name: str) -> HypothesisEntry:
        return next(e for e in self.entries if e.name == name)

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def failed(self, names: Sequence[str] | None = None) -> list[str]:
        return [e.name for e in self.entries if not e.ok and (names is None or e.name in names)]

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "lower_bound_semantics": True,
            "entries": [e.to_json() for e in self.entries],
        }


GAMMA_INTERSECTION = "gamma_intersection"
RESIDUE_DISJOINT = "residue_linearly_disjoint"
TORSION_FREE = "gamma_quotient_torsion_free"


def check_hypotheses(
    L: Presentation, M: Presentation, C: Presentation, d: int | None = None
) -> HypothesisReport:
    """Certify, at degree ``d``, the standing hypotheses for L and M over C.

    Value-group statements are lattice computations on shadows and are
    reported as ``bounded`` when they pass.  Residue disjointness is decided
    by the variable rule (the residue variables of L and M outside C's are
    disjoint) and cross-checked by linear independence of low-degree
    monomials of L's extra variables over k_M.
    """
    if d is None:
        d = min(L.degree_bound, M.degree_bound, C.degree_bound)
    rep = HypothesisReport(d)
    GL, GM, GC = (value_group_shadow(P, d) for P in (L, M, C))
    inter = subgroup_intersection(GL, GM)
    if inter.same_as(GC):
        rep.entries.append(HypothesisEntry(GAMMA_INTERSECTION, "bounded", f"{GL} meet {GM} = {GC}"))
    else:
        extra = next((g for g in inter.basis() if not GC.contains(g)), None)
        if extra is None:
            detail = f"{GC} not contained in {GL} meet {GM}"
        else:
            detail = f"{extra} lies in both value groups but not in that of {C.name}"
        rep.entries.append(HypothesisEntry(GAMMA_INTERSECTION, "fail", detail))

    kC = residue_variables(C, d)
    kL = residue_variables(L, d)
    kM = residue_variables(M, d)
    shared = (kL & kM) - kC
    if shared:
        rep.entries.append(
            HypothesisEntry(RESIDUE_DISJOINT, "fail", f"shared residue variables outside k_C: {sorted(shared)}")
        )
    else:
        F = L.U.field
        extra = sorted(kL - kC)
        probe = [F.one()] + [F.var(x) for x in extra]
        probe += [F.var(x) * F.var(y) for x, y in itertools.combinations_with_replacement(extra, 2)]
        indep, w = linearly_independent_over(probe, ResSubfield(kM | kC))
        if indep:
            rep.entries.append(HypothesisEntry(RESIDUE_DISJOINT, "pass", "disjoint residue variables"))
        else:
            rep.entries.append(HypothesisEntry(RESIDUE_DISJOINT, "fail", f"dependence {w} over k_M"))

    if torsion_free_quotient(GL.basis(), GC):
        rep.entries.append(HypothesisEntry(TORSION_FREE, "bounded", "saturated lattice"))
    else:
        rep.entries.append(HypothesisEntry(TORSION_FREE, "fail", f"{GL} / {GC} has torsion"))
    return rep
