"""Shipped regression instances: compositum triples, refinement data, and
isomorphisms to extend.  Everything is rebuilt on each call; universes are
cached, so repeated calls share series objects' universes but not state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .hahn_series import HahnSeries, Universe
from .morphisms import FLAGS, FieldIso, RefinedUniverse, refine_valuation
from .presentations import Presentation


@dataclass
class CompositumInstance:
    name: str
    U: Universe
    C: Presentation
    L: Presentation
    M: Presentation
    ell: list[HahnSeries]


@dataclass
class RefinementInstance:
    name: str
    U: Universe
    C: Presentation
    L: Presentation
    M: Presentation
    a: list[HahnSeries]
    e: list[HahnSeries]
    b: list[HahnSeries] = field(default_factory=list)
    layout: str = "standard"

    def refine(self, d: int | None = None) -> RefinedUniverse:
        if self.layout == "standard":
            return refine_valuation(self.L, self.M, self.C, self.a, self.e, self.b, d)
        # negative control: same demotion, deliberately wrong axis placement
        R = refine_valuation(self.L, self.M, self.C, self.a, self.e, self.b, d)
        return RefinedUniverse(self.U, R.demoted, R.pairs, layout=self.layout)


@dataclass
class IsoInstance:
    name: str
    sigma: FieldIso
    L: Presentation
    M: Presentation
    C: Presentation


def _prime(U: Universe) -> Presentation:
    return Presentation.prime(U)


def compositum_instances(d: int = 4) -> list[CompositumInstance]:
    out = []

    U = Universe(("t1", "t2"), ("x1", "x2"))
    p = U.parse
    Q = _prime(U)
    out.append(
        CompositumInstance(
            "axes", U, Q,
            Presentation("L", U, [p("t1")], degree_bound=d),
            Presentation("M", U, [p("t2")], degree_bound=d),
            [p("1"), p("t1")],
        )
    )
    out.append(
        CompositumInstance(
            "residues", U, Q,
            Presentation("L", U, [p("x1")], degree_bound=d),
            Presentation("M", U, [p("x2")], degree_bound=d),
            [p("1"), p("x1")],
        )
    )
    out.append(
        CompositumInstance(
            "mixed", U, Q,
            Presentation("L", U, [p("x1"), p("t1")], degree_bound=d),
            Presentation("M", U, [p("x2"), p("t2")], degree_bound=d),
            [p("1"), p("x1"), p("t1")],
        )
    )

    V = Universe(("t",), ("x1",))
    q = V.parse
    Ct = Presentation("C", V, [q("t")], degree_bound=d)
    out.append(
        CompositumInstance(
            "ramified", V, Ct,
            Presentation("L", V, [q("t**(1/2)")], base=Ct, degree_bound=d),
            Presentation("M", V, [q("x1")], base=Ct, degree_bound=d),
            [q("1"), q("t**(1/2)")],
        )
    )

    W = Universe(("t1", "t2", "t3"), ("x1", "x2"))
    w = W.parse
    C1 = Presentation("C", W, [w("t1")], degree_bound=d)
    out.append(
        CompositumInstance(
            "graded", W, C1,
            Presentation("L", W, [w("x1*t2")], base=C1, degree_bound=d),
            Presentation("M", W, [w("x2"), w("t3")], base=C1, degree_bound=d),
            [w("1"), w("x1*t2"), w("x1**2*t2**2")],
        )
    )
    return out


def refinement_instances(d: int = 4) -> list[RefinementInstance]:
    U = Universe(("t1", "t2"), ("x1", "x2"))
    p = U.parse
    Q = _prime(U)
    L = Presentation("L", U, [p("x1*t1")], degree_bound=d)
    M = Presentation("M", U, [p("x2"), p("t1")], degree_bound=d)
    r1 = RefinementInstance("r1", U, Q, L, M, [p("x1*t1")], [p("t1")])
    broken = RefinementInstance("r1_broken", U, Q, L, M, [p("x1*t1")], [p("t1")], layout="delta_above_main")

    V = Universe(("t1", "t2"), ("x1", "x2", "x3"))
    q = V.parse
    QV = _prime(V)
    L2 = Presentation("L", V, [q("x1*t1"), q("x3*t2")], degree_bound=d)
    M2 = Presentation("M", V, [q("x2"), q("t1"), q("t2")], degree_bound=d)
    r2 = RefinementInstance("r2", V, QV, L2, M2, [q("x1*t1"), q("x3*t2")], [q("t1"), q("t2")])
    return [r1, r2, broken]


def iso_instances(d: int = 3) -> list[IsoInstance]:
    U = Universe(("t1", "t2"), ("x1", "x2"))
    p = U.parse
    Q = _prime(U)
    M = Presentation("M", U, [p("x2"), p("t2")], degree_bound=d)
    L = Presentation("L", U, [p("x1*t1")], degree_bound=d)
    L1 = Presentation("L", U, [p("t1")], degree_bound=d)
    return [
        IsoInstance("identity", FieldIso.identity(L), L, M, Q),
        IsoInstance("unit_twist", FieldIso(L, [p("x1*t1*(1+t1)")], FLAGS), L, M, Q),
        IsoInstance("scaled_axis", FieldIso(L1, [p("2*t1")], ("C", "gamma", "k")), L1, M, Q),
    ]
