"""Truncated generalized power series with residue-field coefficients.

A series is a finite sorted list of (exponent, coefficient) pairs plus an
optional cutoff: when present, every term with exponent below the cutoff is
known and nothing is known at or above it.  Arithmetic propagates cutoffs
conservatively and raises :class:`PrecisionExhausted` instead of guessing.

Series live in a :class:`Universe`, which fixes the series axes (exponent
main block), optional infinitesimal axes, the residue variables and the
default relative precision used for inverses.
"""

from __future__ import annotations

import os
import random
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import NotInValuationRing, PrecisionExhausted
from .ordered_groups import GammaElement
from .residue_algebra import ResElement, ResidueField
from .rv_sort import RvElement

__all__ = [
    "Universe",
    "HahnSeries",
    "INFINITY",
    "hs_mul",
    "hs_inv",
    "valuation",
    "residue",
    "rv_of",
    "random_series",
    "default_precision_cap",
]

PRECISION_ENV = "VALKIT_PRECISION_CAP"


def default_precision_cap() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw:
        try:
            val = int(raw)
        except ValueError:
            raise ValueError(f"{PRECISION_ENV} must be a positive integer, got {raw!r}") from None
        if val < 1:
            raise ValueError(f"{PRECISION_ENV} must be positive")
        return val
    return 10


class _Infinity:
    """Valuation of the exact zero series; compares above every GammaElement."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "INFINITY"

    def __eq__(self, other) -> bool:
        return other is self

    def __hash__(self) -> int:
        return 0x1F

    def __lt__(self, other) -> bool:
        return False

    def __le__(self, other) -> bool:
        return other is self

    def __gt__(self, other) -> bool:
        return other is not self

    def __ge__(self, other) -> bool:
        return True


INFINITY = _Infinity()


class Universe:
    """Ambient Hahn field k((t_1, ..., t_n)) with lexicographic exponents."""

    _cache: dict = {}

    def __new__(
        cls,
        axes: Sequence[str] = ("t",),
        variables: Sequence[str] = (),
        inf_axes: Sequence[str] = (),
        precision: int | None = None,
    ):
        key = (tuple(axes), tuple(variables), tuple(inf_axes), precision)
        hit = cls._cache.get(key)
        if hit is not None:
            return hit
        self = super().__new__(cls)
        self.axes = tuple(axes)
        self.variables = tuple(variables)
        self.inf_axes = tuple(inf_axes)
        names = self.axes + self.variables + self.inf_axes
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate names in universe declaration {names}")
        self._precision = precision
        self.field = ResidueField(self.variables)
        self.n_main = len(self.axes)
        self.n_inf = len(self.inf_axes)
        self.rank = (self.n_main, self.n_inf)
        self.gamma_zero = GammaElement.zero(self.n_main, self.n_inf)
        cls._cache[key] = self
        return self

    def __getnewargs__(self):
        return (self.axes, self.variables, self.inf_axes, self._precision)

    @property
    def precision(self) -> int:
        return self._precision if self._precision is not None else default_precision_cap()

    def __repr__(self) -> str:
        s = f"Universe(axes={list(self.axes)}, variables={list(self.variables)}"
        if self.inf_axes:
            s += f", inf_axes={list(self.inf_axes)}"
        return s + ")"

    # -- element constructors --

    def gamma(self, main: Iterable = (), inf: Iterable = ()) -> GammaElement:
        main = list(main)
        inf = list(inf)
        main += [0] * (self.n_main - len(main))
        inf += [0] * (self.n_inf - len(inf))
        g = GammaElement(main, inf)
        if g.rank != self.rank:
            raise ValueError(f"exponent {g} does not fit {self}")
        return g

    def axis_gamma(self, name: str) -> GammaElement:
        if name in self.axes:
            return GammaElement.unit(self.n_main, self.n_inf, self.axes.index(name))
        return GammaElement.unit(self.n_main, self.n_inf, self.inf_axes.index(name), infinitesimal=True)

    def zero(self) -> "HahnSeries":
        return HahnSeries._make(self, (), None)

    def one(self) -> "HahnSeries":
        return self.const(1)

    def const(self, c) -> "HahnSeries":
        if not isinstance(c, ResElement):
            c = self.field.const(c)
        if not c:
            return self.zero()
        return HahnSeries._make(self, ((self.gamma_zero, c),), None)

    def var(self, name: str) -> "HahnSeries":
        """The residue variable ``name`` as a valuation-0 constant series."""
        return self.const(self.field.var(name))

    def monomial(self, coeff, gamma: GammaElement) -> "HahnSeries":
        if not isinstance(coeff, ResElement):
            coeff = self.field.const(coeff)
        if not coeff:
            return self.zero()
        return HahnSeries._make(self, ((gamma, coeff),), None)

    def t(self, name: str | None = None, power=1) -> "HahnSeries":
        """The axis monomial t_name^power."""
        name = name if name is not None else self.axes[0]
        return self.monomial(1, self.axis_gamma(name) * Fraction(power))

    def big_o(self, cutoff: GammaElement) -> "HahnSeries":
        return HahnSeries._make(self, (), cutoff)

    def series(self, terms: Mapping | Iterable, cutoff: GammaElement | None = None) -> "HahnSeries":
        return HahnSeries(self, terms, cutoff)

    def parse(self, text: str) -> "HahnSeries":
        from ._series_parser import parse_series

        return parse_series(self, text)

    # -- serialization --

    def to_json(self) -> dict:
        out = {"axes": list(self.axes), "variables": list(self.variables)}
        if self.inf_axes:
            out["inf_axes"] = list(self.inf_axes)
        if self._precision is not None:
            out["precision"] = self._precision
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "Universe":
        prec = data.get("precision")
        return cls(
            tuple(data.get("axes", ("t",))),
            tuple(data.get("variables", ())),
            tuple(data.get("inf_axes", ())),
            int(prec) if prec is not None else None,
        )


def _merge(a: tuple, b: tuple, cutoff, sign: int = 1) -> tuple:
    acc: dict = dict(a)
    for g, c in b:
        v = acc.get(g)
        if v is None:
            acc[g] = c if sign > 0 else -c
        else:
            s = v + c if sign > 0 else v - c
            if s:
                acc[g] = s
            else:
                del acc[g]
    items = sorted(acc.items(), key=lambda kv: kv[0].key)
    if cutoff is not None:
        items = [kv for kv in items if kv[0] < cutoff]
    return tuple(items)


def _min_cut(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a if a <= b else b


class HahnSeries:
    """Immutable truncated series: sorted ``terms`` and ``cutoff`` (None = exact)."""

    __slots__ = ("U", "terms", "cutoff")

    def __init__(self, U: Universe, terms: Mapping | Iterable = (), cutoff: GammaElement | None = None):
        if isinstance(terms, Mapping):
            terms = terms.items()
        acc: dict = {}
        F = U.field
        for g, c in terms:
            if not isinstance(c, ResElement):
                c = F.parse(c) if isinstance(c, str) else F.const(c)
            if g.rank != U.rank:
                raise ValueError(f"exponent {g} does not fit {U}")
            acc[g] = acc[g] + c if g in acc else c
        items = sorted(((g, c) for g, c in acc.items() if c), key=lambda kv: kv[0].key)
        if cutoff is not None:
            items = [kv for kv in items if kv[0] < cutoff]
        self.U = U
        self.terms = tuple(items)
        self.cutoff = cutoff

    @classmethod
    def _make(cls, U: Universe, terms: tuple, cutoff) -> "HahnSeries":
        s = object.__new__(cls)
        s.U = U
        s.terms = terms
        s.cutoff = cutoff
        return s

    def _same(self, other: "HahnSeries") -> None:
        if other.U is not self.U:
            raise ValueError(f"series from different universes: {self.U} vs {other.U}")

    def _coerce(self, other) -> "HahnSeries":
        if isinstance(other, HahnSeries):
            self._same(other)
            return other
        if isinstance(other, (int, Fraction, ResElement)):
            return self.U.const(other)
        return NotImplemented

    # -- predicates --

    @property
    def is_exact(self) -> bool:
        return self.cutoff is None

    def is_exact_zero(self) -> bool:
        return self.cutoff is None and not self.terms

    def is_determinable(self) -> bool:
        """Nonzero with a known leading term."""
        return bool(self.terms)

    def is_monomial(self) -> bool:
        return self.cutoff is None and len(self.terms) == 1

    # -- arithmetic --

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        cut = _min_cut(self.cutoff, other.cutoff)
        return HahnSeries._make(self.U, _merge(self.terms, other.terms, cut), cut)

    __radd__ = __add__

    def __neg__(self) -> "HahnSeries":
        return HahnSeries._make(self.U, tuple((g, -c) for g, c in self.terms), self.cutoff)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        cut = _min_cut(self.cutoff, other.cutoff)
        return HahnSeries._make(self.U, _merge(self.terms, other.terms, cut, sign=-1), cut)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return hs_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_monomial():
            g, c = other.terms[0]
            return self.shift(-g).scale(c.inverse())
        return hs_mul(self, hs_inv(other))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, n: int) -> "HahnSeries":
        if n < 0:
            base = hs_inv(self)
            n = -n
        else:
            base = self
        out = self.U.one()
        while n:
            if n & 1:
                out = hs_mul(out, base)
            n >>= 1
            if n:
                base = hs_mul(base, base)
        return out

    def shift(self, gamma: GammaElement) -> "HahnSeries":
        """Multiply by the monomial t^gamma."""
        cut = None if self.cutoff is None else self.cutoff + gamma
        return HahnSeries._make(self.U, tuple((g + gamma, c) for g, c in self.terms), cut)

    def scale(self, c: ResElement) -> "HahnSeries":
        if not c:
            if self.cutoff is None:
                return self.U.zero()
            return HahnSeries._make(self.U, (), self.cutoff)
        return HahnSeries._make(self.U, tuple((g, v * c) for g, v in self.terms), self.cutoff)

    def truncate(self, cutoff: GammaElement) -> "HahnSeries":
        cut = _min_cut(self.cutoff, cutoff)
        return HahnSeries._make(self.U, tuple(kv for kv in self.terms if kv[0] < cut), cut)

    def inverse(self, target: GammaElement | None = None) -> "HahnSeries":
        return hs_inv(self, target)

    # -- valuation data --

    def valuation(self):
        if self.terms:
            return self.terms[0][0]
        if self.cutoff is None:
            return INFINITY
        raise PrecisionExhausted(f"valuation undetermined: series is O({self.U.gamma_str(self.cutoff)})")

    def leading(self) -> tuple[GammaElement, ResElement]:
        if not self.terms:
            self.valuation()  # raises for truncated zeros
            raise ValueError("the zero series has no leading term")
        return self.terms[0]

    def residue(self) -> ResElement:
        F = self.U.field
        if self.terms:
            g, c = self.terms[0]
            if g.sign() < 0:
                raise NotInValuationRing(f"valuation {g} < 0")
            return c if g.is_zero() else F.zero()
        if self.cutoff is None or self.cutoff.sign() > 0:
            return F.zero()
        raise PrecisionExhausted("residue undetermined: precision does not reach exponent 0")

    def rv(self) -> RvElement:
        g, c = self.leading()
        return RvElement(g, c)

    def coefficient(self, gamma: GammaElement) -> ResElement:
        if self.cutoff is not None and gamma >= self.cutoff:
            raise PrecisionExhausted(f"coefficient at {gamma} beyond precision")
        for g, c in self.terms:
            if g == gamma:
                return c
        return self.U.field.zero()

    def support(self) -> list[GammaElement]:
        return [g for g, _ in self.terms]

    # -- comparison and printing --

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, ResElement)):
            other = self.U.const(other)
        if not isinstance(other, HahnSeries):
            return NotImplemented
        return self.U is other.U and self.terms == other.terms and self.cutoff == other.cutoff

    def __hash__(self) -> int:
        return hash((self.terms, self.cutoff))

    def __str__(self) -> str:
        parts = []
        for g, c in self.terms:
            mono = self.U.gamma_str(g)
            cs = str(c)
            if mono == "1":
                body = cs
            elif cs == "1":
                body = mono
            elif cs == "-1":
                body = "-" + mono
            else:
                if len(c.num) > 1 or not c.is_polynomial():
                    cs = f"({cs})"
                body = f"{cs}*{mono}"
            parts.append(body)
        if self.cutoff is not None:
            parts.append(f"O({self.U.gamma_str(self.cutoff)})")
        if not parts:
            return "0"
        s = parts[0]
        for p in parts[1:]:
            s += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return s

    def __repr__(self) -> str:
        return f"HahnSeries({self})"

    def to_json(self) -> dict:
        return {
            "terms": [{"exp": g.to_json(), "coeff": str(c)} for g, c in self.terms],
            "precision": "exact" if self.cutoff is None else self.cutoff.to_json(),
        }

    @classmethod
    def from_json(cls, U: Universe, data) -> "HahnSeries":
        if isinstance(data, str):
            return U.parse(data)
        terms = [(GammaElement.from_json(t["exp"]), U.field.parse(t["coeff"])) for t in data.get("terms", ())]
        prec = data.get("precision", "exact")
        cutoff = None if prec == "exact" else GammaElement.from_json(prec)
        return cls(U, terms, cutoff)


def _gamma_str(U: Universe, g: GammaElement) -> str:
    factors = []
    for name, e in zip(U.axes + U.inf_axes, g.key):
        if e == 1:
            factors.append(name)
        elif e:
            factors.append(f"{name}**{e}" if e.denominator == 1 and e > 0 else f"{name}**({e})")
    return "*".join(factors) if factors else "1"


Universe.gamma_str = _gamma_str


def hs_mul(a: HahnSeries, b: HahnSeries) -> HahnSeries:
    """Product with precision min(cut(a) + v(b), cut(b) + v(a))."""
    a._same(b)
    U = a.U
    if a.cutoff is not None and b.cutoff is not None and not a.terms and not b.terms:
        raise PrecisionExhausted("product of two truncated zeros")
    if (a.cutoff is None and not a.terms) or (b.cutoff is None and not b.terms):
        return U.zero()
    if b.is_monomial():
        a, b = b, a
    if a.is_monomial():
        g, c = a.terms[0]
        cut = None if b.cutoff is None else b.cutoff + g
        return HahnSeries._make(U, tuple((h + g, c * e) for h, e in b.terms), cut)
    cut = None
    if a.cutoff is not None:
        cut = a.cutoff + (b.terms[0][0] if b.terms else b.cutoff)
    if b.cutoff is not None:
        cand = b.cutoff + (a.terms[0][0] if a.terms else a.cutoff)
        cut = _min_cut(cut, cand)
    acc: dict = {}
    for ga, ca in a.terms:
        for gb, cb in b.terms:
            g = ga + gb
            if cut is not None and not g < cut:
                continue
            v = acc.get(g)
            acc[g] = ca * cb if v is None else v + ca * cb
    items = sorted(((g, c) for g, c in acc.items() if c), key=lambda kv: kv[0].key)
    return HahnSeries._make(U, tuple(items), cut)


def _steps_to_reach(eps: GammaElement, target: GammaElement, limit: int = 100000) -> int | None:
    """Least K >= 0 with K * eps >= target (eps > 0), or None if unreachable."""
    if target.sign() <= 0:
        return 0
    # unreachable when target's leading axis is more significant than eps's
    lead_t = next(i for i, c in enumerate(target.key) if c)
    lead_e = next(i for i, c in enumerate(eps.key) if c)
    if lead_t < lead_e:
        return None
    if lead_t > lead_e:
        return 1
    k = max(1, int(target.key[lead_t] / eps.key[lead_e]))
    while k * eps < target:
        k += 1
        if k > limit:
            return None
    while k > 1 and (k - 1) * eps >= target:
        k -= 1
    return k


def hs_inv(a: HahnSeries, target: GammaElement | None = None) -> HahnSeries:
    """Inverse of a series.

    ``target`` is the precision of ``a * inv(a) - 1``: the product agrees
    with 1 below it.  Default: the universe precision cap times the gap
    between the leading exponent and the next one.  Monomials invert exactly.
    """
    U = a.U
    if not a.terms:
        if a.cutoff is None:
            raise ZeroDivisionError("inverse of the zero series")
        raise PrecisionExhausted("inverse of a series with undetermined leading term")
    g0, c0 = a.terms[0]
    c0inv = c0.inverse()
    rest = tuple((g - g0, c * c0inv) for g, c in a.terms[1:])
    if not rest and a.cutoff is None:
        return HahnSeries._make(U, ((-g0, c0inv),), None)
    rel_cut = None if a.cutoff is None else a.cutoff - g0
    if target is None:
        eps = rest[0][0] if rest else rel_cut
        rel_target = eps * U.precision
    else:
        rel_target = target
    rel_target = _min_cut(rel_target, rel_cut)
    if not rest:
        # a = c0 t^g0 (1 + O(rel_cut))
        return HahnSeries._make(U, ((-g0, c0inv),), rel_target - g0)
    u = HahnSeries._make(U, rest, None)
    steps = _steps_to_reach(rest[0][0], rel_target)
    if steps is None:
        raise PrecisionExhausted(
            f"inverse: target {U.gamma_str(rel_target)} unreachable from leading gap {U.gamma_str(rest[0][0])}"
        )
    one = U.one()
    s = one.truncate(rel_target)
    for _ in range(steps):
        s = (one - hs_mul(u, s)).truncate(rel_target)
    return s.shift(-g0).scale(c0inv)


def valuation(a: HahnSeries):
    return a.valuation()


def residue(a: HahnSeries) -> ResElement:
    return a.residue()


def rv_of(a: HahnSeries) -> RvElement:
    return a.rv()


def random_series(
    U: Universe,
    rng: random.Random,
    max_terms: int = 3,
    exp_range: tuple[int, int] = (-2, 3),
    exp_den: int = 1,
    coeff_bound: int = 5,
    var_prob: float = 0.0,
    nonzero: bool = True,
) -> HahnSeries:
    """Exact random series with small rational exponents and coefficients."""
    F = U.field
    while True:
        n = rng.randint(1 if nonzero else 0, max_terms)
        terms = {}
        for _ in range(n):
            g = GammaElement(
                [Fraction(rng.randint(exp_range[0] * exp_den, exp_range[1] * exp_den), exp_den) for _ in range(U.n_main)],
                [Fraction(rng.randint(exp_range[0], exp_range[1])) for _ in range(U.n_inf)],
            )
            c = F.const(Fraction(rng.choice([-1, 1]) * rng.randint(1, coeff_bound), rng.randint(1, 3)))
            if U.variables and rng.random() < var_prob:
                c = c * F.var(rng.choice(U.variables))
            terms[g] = terms[g] + c if g in terms else c
        s = HahnSeries(U, terms)
        if s.terms or not nonzero:
            return s
