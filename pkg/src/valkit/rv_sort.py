"""The RV sort as leading data (valuation, leading coefficient).

Holds :class:`RvElement` arithmetic, partial addition, n-th power coset
models and the RV-independence test.  Series-level inputs are consumed by
duck typing (``valuation``, ``residue``, ``rv``) so this module does not
depend on the series implementation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import UnsupportedModel
from .ordered_groups import GammaElement, q_basis_mod
from .residue_algebra import (
    ResElement,
    ResSubfield,
    algebraically_independent_over,
    transcendence_degree,
)

__all__ = [
    "RvElement",
    "COLLISION",
    "rv_try_add",
    "PowerModel",
    "power_coset_of",
    "lambda_table",
    "check_lambda_identity",
    "rv_independent",
    "RvIndependence",
]


class RvElement:
    """Element (gamma, coeff) of RV; coeff is a nonzero residue."""

    __slots__ = ("gamma", "coeff")

    def __init__(self, gamma: GammaElement, coeff: ResElement):
        if not coeff:
            raise ValueError("RV coefficient must be nonzero")
        self.gamma = gamma
        self.coeff = coeff

    def __mul__(self, other: "RvElement") -> "RvElement":
        return RvElement(self.gamma + other.gamma, self.coeff * other.coeff)

    def inverse(self) -> "RvElement":
        return RvElement(-self.gamma, self.coeff.inverse())

    def __truediv__(self, other: "RvElement") -> "RvElement":
        return self * other.inverse()

    def __pow__(self, n: int) -> "RvElement":
        return RvElement(self.gamma * n, self.coeff**n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RvElement):
            return NotImplemented
        return self.gamma == other.gamma and self.coeff == other.coeff

    def __hash__(self) -> int:
        return hash((self.gamma, self.coeff))

    def in_k(self) -> bool:
        """Whether the element lies in the fiber over 0 (the residue field)."""
        return self.gamma.is_zero()

    def __repr__(self) -> str:
        return f"rv({self.gamma}, {self.coeff})"

    def to_json(self) -> dict:
        return {"gamma": self.gamma.to_json(), "coeff": str(self.coeff)}

    @classmethod
    def from_json(cls, data: Mapping, field_) -> "RvElement":
        return cls(GammaElement.from_json(data["gamma"]), field_.parse(data["coeff"]))


class _Collision:
    __slots__ = ()

    def __repr__(self) -> str:
        return "COLLISION"

    def __bool__(self) -> bool:
        return False


COLLISION = _Collision()


def rv_try_add(a: RvElement, b: RvElement):
    """Partial addition of leading data; returns COLLISION on cancellation."""
    if a.gamma < b.gamma:
        return a
    if b.gamma < a.gamma:
        return b
    s = a.coeff + b.coeff
    if not s:
        return COLLISION
    return RvElement(a.gamma, s)


# -- n-th power cosets --


def _integral(gamma: GammaElement) -> tuple[int, ...]:
    out = []
    for c in gamma.key:
        if c.denominator != 1:
            raise UnsupportedModel(f"non-integral exponent {gamma} in a built-in power model")
        out.append(int(c))
    return tuple(out)


@dataclass
class PowerModel:
    """Coset model for the n-th power predicates P_n on RV.

    ``acf``: residue field treated as algebraically closed, so only the
    exponent classes mod n matter.  ``rcf``: real closed residue field, n = 2,
    sign of the leading coefficient decides (by lex leading coefficient, or
    by evaluation at ``sample_point`` when one is configured).  ``table``:
    user-supplied characters; a coset is identified by the tuple of
    character values.
    """

    kind: str
    sample_point: Mapping[str, Fraction] | None = None
    tables: Mapping[int, dict] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("acf", "rcf", "table"):
            raise UnsupportedModel(f"unknown power model kind {self.kind!r}")

    def supports(self, n: int) -> bool:
        if self.kind == "acf":
            return n >= 2
        if self.kind == "rcf":
            return n == 2
        return n in self.tables

    def sign(self, c: ResElement) -> int:
        if self.sample_point is not None:
            val = c.evaluate(self.sample_point)
            if val is not None and val != 0:
                return 1 if val > 0 else -1
        return c.leading_sign()

    def coset(self, x: RvElement, n: int) -> tuple:
        if n < 2:
            raise UnsupportedModel("P_n needs n >= 2")
        if self.kind == "acf":
            return tuple(c % n for c in _integral(x.gamma))
        if self.kind == "rcf":
            if n != 2:
                raise UnsupportedModel("real closed residue model supports only n = 2")
            return tuple(c % 2 for c in _integral(x.gamma)) + (0 if self.sign(x.coeff) > 0 else 1,)
        tab = self.tables.get(n)
        if tab is None:
            raise UnsupportedModel(f"no coset table for n = {n}")
        return tuple(ch(x) for ch in tab["characters"])

    def representatives(self, n: int, rank: tuple[int, int], field_) -> list[RvElement]:
        """One RvElement per coset of P_n in the shadow Z^rank (built-ins) or the table's list."""
        if self.kind == "table":
            tab = self.tables[n]
            ranges = [range(m) for m in tab["moduli"]]
            signs = (1, -1) if tab["sign"] else (1,)
        else:
            ranges = [range(n)] * (rank[0] + rank[1])
            signs = (1, -1) if self.kind == "rcf" else (1,)
        reps = []
        for gam in itertools.product(*ranges):
            g = GammaElement(gam[: rank[0]], gam[rank[0] :])
            for s in signs:
                reps.append(RvElement(g, field_.const(s)))
        return reps

    @classmethod
    def from_json(cls, data: Mapping) -> "PowerModel":
        kind = data["kind"]
        sp = data.get("sample_point")
        sample = {k: Fraction(str(v)) for k, v in sp.items()} if sp else None
        if kind != "table":
            return cls(kind, sample)
        tables = {}
        for n_str, raw in data.get("tables", {}).items():
            tables[int(n_str)] = _table_from_json(int(n_str), raw)
        return cls(kind, sample, tables)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.sample_point is not None:
            out["sample_point"] = {k: str(v) for k, v in self.sample_point.items()}
        if self.tables:
            out["tables"] = {str(n): t["raw"] for n, t in sorted(self.tables.items())}
        return out


def _table_from_json(n: int, raw: Mapping) -> dict:
    """Table models carry integer characters on exponents plus a sign flag.

    ``{"exponent_moduli": [m_1, ...], "sign": bool}``: the coset of (gamma, c)
    is (gamma_i mod m_i)_i, plus the sign of c when ``sign`` is set.
    """
    moduli = [int(m) for m in raw["exponent_moduli"]]
    use_sign = bool(raw.get("sign", False))
    chars = []
    for i, m in enumerate(moduli):
        chars.append(lambda x, i=i, m=m: _integral(x.gamma)[i] % m)
    if use_sign:
        chars.append(lambda x: 0 if x.coeff.leading_sign() > 0 else 1)
    return {"characters": chars, "moduli": moduli, "sign": use_sign, "raw": dict(raw)}


def power_coset_of(x: RvElement, n: int, model: PowerModel) -> tuple[tuple, bool]:
    """Coset identifier of x modulo P_n and whether x lies in P_n."""
    cid = model.coset(x, n)
    return cid, not any(cid)


def lambda_table(rho: RvElement, n: int, model: PowerModel, reps: Sequence[RvElement]) -> list[tuple[int, int]]:
    """Index pairs (i, j) of representatives with [reps_i][reps_j][rho] trivial.

    These are the pairs for which P_n(rho^-1 x y) holds exactly when
    P_n(reps_i x) and P_n(reps_j y) do.
    """
    pairs = []
    for i in range(len(reps)):
        for j in range(len(reps)):
            _, ok = power_coset_of(reps[i] * reps[j] * rho, n, model)
            if ok:
                pairs.append((i, j))
    return pairs


def check_lambda_identity(
    n: int, model: PowerModel, reps: Sequence[RvElement]
) -> list[tuple[int, int, int]]:
    """Exhaustive check over coset representatives x, y, rho of

        P_n(rho^-1 x y)  <=>  OR over (lam, mu) in table(rho) of P_n(lam x) and P_n(mu y).

    Returns the failing (rho, x, y) index triples (empty on success).
    """
    fails = []
    for r, rho in enumerate(reps):
        table = lambda_table(rho, n, model, reps)
        rho_inv = rho.inverse()
        for i, x in enumerate(reps):
            for j, y in enumerate(reps):
                lhs = power_coset_of(rho_inv * x * y, n, model)[1]
                rhs = any(
                    power_coset_of(reps[a] * x, n, model)[1] and power_coset_of(reps[b] * y, n, model)[1]
                    for a, b in table
                )
                if lhs != rhs:
                    fails.append((r, i, j))
    return fails


# -- RV independence --


@dataclass
class RvIndependence:
    independent: bool
    diagnostic: str
    residues: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.independent

    def to_json(self) -> dict:
        return {
            "independent": self.independent,
            "diagnostic": self.diagnostic,
            "residues": [str(r) for r in self.residues],
        }


def rv_independent(a, b, e, L, M, C, d: int | None = None) -> RvIndependence:
    """Test the RV-independence condition for a in L, b in L, e in M.

    Preconditions (reported, not raised): the valuations of ``a`` form a
    Q-basis of the value group of L modulo that of C, the residues of ``b``
    form a transcendence basis of k_L over k_C, and v(a_i) = v(e_i).  The
    verdict is algebraic independence of (res(a_i/e_i), res(b_j)) over the
    residue field of M.
    """
    from .presentations import residue_variables, value_group_shadow

    if len(a) != len(e):
        return RvIndependence(False, "precondition: a and e differ in length")
    for i, (ai, ei) in enumerate(zip(a, e)):
        if ai.valuation() != ei.valuation():
            return RvIndependence(False, f"precondition: v(a[{i}]) != v(e[{i}])")
    G_C = value_group_shadow(C, d)
    G_L = value_group_shadow(L, d)
    va = [ai.valuation() for ai in a]
    if len(q_basis_mod(va, G_C)) != len(va):
        return RvIndependence(False, "precondition: v(a) not Q-independent modulo the value group of C")
    if len(q_basis_mod(va + G_L.basis(), G_C)) != len(va):
        return RvIndependence(False, "precondition: v(a) does not span the value group of L modulo C over Q")
    kC = ResSubfield(residue_variables(C, d))
    need = len(residue_variables(L, d) - kC.variables)
    res_b = []
    for j, bj in enumerate(b):
        if not bj.valuation().is_zero():
            return RvIndependence(False, f"precondition: b[{j}] does not have valuation 0")
        res_b.append(bj.residue())
    if transcendence_degree(res_b, kC) != len(res_b):
        return RvIndependence(False, "precondition: res(b) not algebraically independent over k_C")
    if len(res_b) != need:
        return RvIndependence(
            False, f"precondition: res(b) has {len(res_b)} elements, k_L has transcendence degree {need} over k_C"
        )
    residues = [(ai / ei).residue() for ai, ei in zip(a, e)] + res_b
    kM = ResSubfield(residue_variables(M, d))
    if not residues:
        return RvIndependence(True, "independent (empty tuple)", residues)
    ok = algebraically_independent_over(residues, kM)
    if ok:
        return RvIndependence(True, "independent", residues)
    return RvIndependence(False, "dependent: residues algebraically dependent over k_M", residues)
