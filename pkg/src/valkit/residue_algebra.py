"""Residue-field arithmetic in k = Q(x1, ..., xm) and independence tests.

Elements are reduced fractions of sparse polynomials with ``Fraction``
coefficients.  Canonical form: numerator and denominator coprime,
denominator monic with respect to lex order on the declared variables.
Polynomials (denominator 1) never touch the gcd machinery, which keeps
series arithmetic with polynomial coefficients cheap; multivariate gcds
are delegated to sympy's sparse polynomial rings.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

__all__ = [
    "ResidueField",
    "ResElement",
    "ResSubfield",
    "res_arith",
    "linearly_independent_over",
    "algebraically_independent_over",
    "transcendence_degree",
    "rank_over_field",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)


# -- sparse polynomial helpers; a polynomial is a dict monomial -> Fraction --


def _padd(a: Mapping, b: Mapping, sign: int = 1) -> dict:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, _ZERO) + (c if sign > 0 else -c)
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pmul(a: Mapping, b: Mapping) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            v = out.get(m, _ZERO) + ca * cb
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def _pscale(a: Mapping, c: Fraction) -> dict:
    if not c:
        return {}
    return {m: v * c for m, v in a.items()}


def _freeze(p: Mapping) -> tuple:
    return tuple(sorted(p.items(), reverse=True))


class ResidueField:
    """The rational function field Q(names).  Instances are cached by name tuple."""

    _cache: dict = {}

    def __new__(cls, names: Sequence[str]):
        names = tuple(names)
        hit = cls._cache.get(names)
        if hit is not None:
            return hit
        self = super().__new__(cls)
        self.names = names
        self.n = len(names)
        self.index = {nm: i for i, nm in enumerate(names)}
        self._zero_monom = (0,) * self.n
        self._one_poly = ((self._zero_monom, _ONE),)
        cls._cache[names] = self
        return self

    def __getnewargs__(self):
        return (self.names,)

    def __repr__(self) -> str:
        return f"ResidueField({', '.join(self.names)})"

    # -- sympy bridge (gcd, parsing) --

    @cached_property
    def _ring(self):
        from sympy import QQ
        from sympy.polys.rings import ring

        if not self.names:
            # sympy needs at least one generator; use a dummy that never appears
            return ring("_valkit_dummy", QQ)[0]
        return ring(",".join(self.names), QQ)[0]

    def _to_sympy(self, p: Mapping):
        from sympy import QQ

        R = self._ring
        if not self.names:
            return R.from_dict({(0,): QQ(c.numerator, c.denominator) for _, c in p.items()})
        return R.from_dict({m: QQ(c.numerator, c.denominator) for m, c in p.items()})

    def _from_sympy(self, f) -> dict:
        out = {}
        for m, c in f.items():
            key = m if self.names else ()
            out[key] = Fraction(int(c.numerator), int(c.denominator))
        return out

    def _gcd_cofactors(self, a: Mapping, b: Mapping) -> tuple[dict, dict]:
        fa, fb = self._to_sympy(a), self._to_sympy(b)
        _, ca, cb = fa.cofactors(fb)
        return self._from_sympy(ca), self._from_sympy(cb)

    # -- constructors --

    def _build(self, num: Mapping, den: Mapping | None = None) -> "ResElement":
        """Canonicalize num/den into a ResElement."""
        if not num:
            return ResElement._raw(self, (), self._one_poly)
        if den is None or (len(den) == 1 and self._zero_monom in den):
            c = den[self._zero_monom] if den else _ONE
            if c != _ONE:
                num = _pscale(num, 1 / c)
            return ResElement._raw(self, _freeze(num), self._one_poly)
        if not den:
            raise ZeroDivisionError("zero denominator")
        num, den = self._gcd_cofactors(num, den)
        if len(den) == 1 and self._zero_monom in den:
            return self._build(num, den)
        lead = max(den)
        lc = den[lead]
        if lc != _ONE:
            inv = 1 / lc
            num = _pscale(num, inv)
            den = _pscale(den, inv)
        return ResElement._raw(self, _freeze(num), _freeze(den))

    def const(self, q) -> "ResElement":
        q = Fraction(q)
        if not q:
            return self.zero()
        return ResElement._raw(self, ((self._zero_monom, q),), self._one_poly)

    def zero(self) -> "ResElement":
        return ResElement._raw(self, (), self._one_poly)

    def one(self) -> "ResElement":
        return self.const(1)

    def var(self, name: str) -> "ResElement":
        i = self.index[name]
        m = tuple(int(j == i) for j in range(self.n))
        return ResElement._raw(self, ((m, _ONE),), self._one_poly)

    def from_poly(self, terms: Mapping) -> "ResElement":
        return self._build({tuple(m): Fraction(c) for m, c in terms.items() if c})

    def parse(self, text: str) -> "ResElement":
        """Parse an arithmetic expression such as ``"(x1+2*x2)/(1-x1)"``."""
        import sympy
        from sympy.parsing.sympy_parser import (
            convert_xor,
            parse_expr,
            standard_transformations,
        )

        syms = {nm: sympy.Symbol(nm) for nm in self.names}
        try:
            expr = parse_expr(
                str(text),
                local_dict=syms,
                transformations=standard_transformations + (convert_xor,),
                evaluate=True,
            )
        except Exception as exc:  # sympy raises a zoo of types
            raise ValueError(f"cannot parse residue expression {text!r}: {exc}") from exc
        return self.from_sympy(expr, source=text)

    def from_sympy(self, expr, source=None) -> "ResElement":
        import sympy

        extra = {s.name for s in expr.free_symbols} - set(self.names)
        if extra:
            raise ValueError(f"unknown variables {sorted(extra)} in {source or expr!r}")
        n, d = sympy.fraction(sympy.together(expr))
        gens = [sympy.Symbol(nm) for nm in self.names]
        try:
            if gens:
                pn = sympy.Poly(n, *gens, domain="QQ").as_dict()
                pd = sympy.Poly(d, *gens, domain="QQ").as_dict()
            else:
                pn = {(): sympy.Rational(n)}
                pd = {(): sympy.Rational(d)}
        except (sympy.PolynomialError, TypeError, ValueError) as exc:
            raise ValueError(f"not a rational function over Q: {source or expr!r}") from exc

        def conv(p):
            return {tuple(m): Fraction(int(sympy.Rational(c).p), int(sympy.Rational(c).q)) for m, c in p.items() if c}

        num, den = conv(pn), conv(pd)
        if not den:
            raise ZeroDivisionError(f"division by zero in {source or expr!r}")
        return self._build(num, den)


class ResElement:
    """Reduced rational function in a :class:`ResidueField`."""

    __slots__ = ("field", "num", "den")

    @classmethod
    def _raw(cls, field: ResidueField, num: tuple, den: tuple) -> "ResElement":
        e = object.__new__(cls)
        e.field = field
        e.num = num
        e.den = den
        return e

    def _coerce(self, other) -> "ResElement":
        if isinstance(other, ResElement):
            if other.field is not self.field:
                raise ValueError(f"mixing {self.field} and {other.field}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.const(other)
        return NotImplemented

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self) -> bool:
        return bool(self.num)

    def is_polynomial(self) -> bool:
        return self.den is self.field._one_poly or self.den == self.field._one_poly

    def is_constant(self) -> bool:
        if not self.is_polynomial():
            return False
        return not self.num or (len(self.num) == 1 and self.num[0][0] == self.field._zero_monom)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not a rational constant")
        return self.num[0][1] if self.num else _ZERO

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        F = self.field
        if not other.num:
            return self
        if not self.num:
            return other
        if self.is_polynomial() and other.is_polynomial():
            return F._build(_padd(dict(self.num), dict(other.num)))
        if self.den == other.den:
            return F._build(_padd(dict(self.num), dict(other.num)), dict(self.den))
        a, b, c, d = dict(self.num), dict(self.den), dict(other.num), dict(other.den)
        return F._build(_padd(_pmul(a, d), _pmul(c, b)), _pmul(b, d))

    __radd__ = __add__

    def __neg__(self) -> "ResElement":
        return ResElement._raw(self.field, tuple((m, -c) for m, c in self.num), self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        F = self.field
        if not self.num or not other.num:
            return F.zero()
        if other.is_constant():
            c = other.num[0][1]
            return ResElement._raw(F, tuple((m, v * c) for m, v in self.num), self.den)
        if self.is_constant():
            c = self.num[0][1]
            return ResElement._raw(F, tuple((m, v * c) for m, v in other.num), other.den)
        if self.is_polynomial() and other.is_polynomial():
            return F._build(_pmul(dict(self.num), dict(other.num)))
        return F._build(
            _pmul(dict(self.num), dict(other.num)), _pmul(dict(self.den), dict(other.den))
        )

    __rmul__ = __mul__

    def inverse(self) -> "ResElement":
        if not self.num:
            raise ZeroDivisionError("inverse of zero residue")
        if self.is_constant():
            return self.field.const(1 / self.num[0][1])
        return self.field._build(dict(self.den), dict(self.num))

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.num:
            raise ZeroDivisionError("division by zero residue")
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, n: int) -> "ResElement":
        if n < 0:
            return self.inverse() ** (-n)
        out = self.field.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.field.const(other)
        if not isinstance(other, ResElement):
            return NotImplemented
        return self.field is other.field and self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    # -- structure --

    def variables(self) -> frozenset[str]:
        used = set()
        for poly in (self.num, self.den):
            for m, _ in poly:
                used.update(i for i, e in enumerate(m) if e)
        return frozenset(self.field.names[i] for i in used)

    def diff(self, name: str) -> "ResElement":
        i = self.field.index[name]

        def d(poly: tuple) -> dict:
            out = {}
            for m, c in poly:
                if m[i]:
                    mm = m[:i] + (m[i] - 1,) + m[i + 1 :]
                    out[mm] = c * m[i]
            return out

        F = self.field
        if self.is_polynomial():
            return F._build(d(self.num))
        n, dn = dict(self.num), dict(self.den)
        top = _padd(_pmul(d(self.num), dn), _pmul(n, d(self.den)), sign=-1)
        return F._build(top, _pmul(dn, dn))

    def leading_sign(self) -> int:
        """Sign under the ordering where the declared variables are positive
        infinitely large, earlier ones dominating (lex leading coefficients)."""
        if not self.num:
            return 0
        s = 1 if self.num[0][1] > 0 else -1
        return s if self.den[0][1] > 0 else -s

    def evaluate(self, point: Mapping[str, Fraction]) -> Fraction | None:
        """Value at a rational point; None where the denominator vanishes."""
        vals = [Fraction(point.get(nm, 0)) for nm in self.field.names]

        def ev(poly):
            total = _ZERO
            for m, c in poly:
                t = c
                for v, e in zip(vals, m):
                    if e:
                        t *= v**e
                total += t
            return total

        den = ev(self.den)
        if not den:
            return None
        return ev(self.num) / den

    def split_by(self, names: Iterable[str]):
        """Group numerator and denominator by exponents of the given variables.

        Returns two dicts ``exponent-tuple -> ResElement`` (polynomials free of
        those variables) for numerator and denominator.
        """
        idx = [self.field.index[n] for n in names]
        F = self.field

        def split(poly):
            groups: dict = {}
            for m, c in poly:
                key = tuple(m[i] for i in idx)
                rest = list(m)
                for i in idx:
                    rest[i] = 0
                groups.setdefault(key, {})[tuple(rest)] = c
            return {k: F._build(v) for k, v in groups.items()}

        return split(self.num), split(self.den)

    # -- printing --

    @staticmethod
    def _fmt_poly(field: ResidueField, poly: tuple) -> str:
        if not poly:
            return "0"
        parts = []
        for m, c in poly:
            factors = []
            for nm, e in zip(field.names, m):
                if e == 1:
                    factors.append(nm)
                elif e:
                    factors.append(f"{nm}**{e}")
            mono = "*".join(factors)
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            parts.append(("-" if c < 0 else "+", body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __str__(self) -> str:
        top = self._fmt_poly(self.field, self.num)
        if self.is_polynomial():
            return top
        bottom = self._fmt_poly(self.field, self.den)
        if len(self.num) > 1 or "/" in top:
            top = f"({top})"
        return f"{top}/({bottom})"

    def __repr__(self) -> str:
        return f"ResElement({self})"


class ResSubfield:
    """Subfield Q(x_S) of the residue field generated by a set of variables."""

    def __init__(self, variables: Iterable[str] = ()):
        self.variables = frozenset(variables)

    def contains(self, e: ResElement) -> bool:
        return e.variables() <= self.variables

    __contains__ = contains

    def __repr__(self) -> str:
        return "Q(" + ", ".join(sorted(self.variables)) + ")"

    def __eq__(self, other) -> bool:
        return isinstance(other, ResSubfield) and self.variables == other.variables

    def __hash__(self) -> int:
        return hash(self.variables)


def res_arith(a: ResElement, b: ResElement, op: str) -> ResElement:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


# -- linear algebra over subfields of k --


def rank_over_field(rows: Sequence[Sequence[ResElement]]) -> tuple[int, list[list[ResElement]]]:
    """Rank of a matrix with entries in a field of ResElements and a basis of its left kernel.

    Entries must all lie in the field over which rank is wanted; elimination
    never leaves it since it is closed under the field operations.
    """
    m = len(rows)
    if not m:
        return 0, []
    F = rows[0][0].field if rows[0] else None
    ncols = len(rows[0])
    A = [list(r) for r in rows]
    T = [[F.one() if i == j else F.zero() for j in range(m)] for i in range(m)] if F else [[] for _ in range(m)]
    rank = 0
    for col in range(ncols):
        piv = next((i for i in range(rank, m) if A[i][col]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        T[rank], T[piv] = T[piv], T[rank]
        pv = A[rank][col]
        for i in range(rank + 1, m):
            if A[i][col]:
                f = A[i][col] / pv
                A[i] = [a - f * b for a, b in zip(A[i], A[rank])]
                T[i] = [a - f * b for a, b in zip(T[i], T[rank])]
        rank += 1
    return rank, T[rank:]


def _normalize_witness(vec: list[ResElement]) -> list[ResElement]:
    last = next(c for c in reversed(vec) if c)
    scale = -last.inverse()
    return [c * scale for c in vec]


def linearly_independent_over(
    elems: Sequence[ResElement], S: ResSubfield
) -> tuple[bool, list[ResElement] | None]:
    """Decide linear independence over Q(x_S).

    Clears denominators, reads each element as a polynomial in the variables
    outside S with coefficients in Q[x_S], and computes the exact rank of the
    coefficient matrix.  On dependence the witness ``w`` (entries in Q(x_S))
    satisfies ``sum(w_i * elems_i) == 0`` and has last nonzero entry -1.
    """
    elems = list(elems)
    if not elems:
        return True, None
    F = elems[0].field
    if any(not e for e in elems):
        i = next(i for i, e in enumerate(elems) if not e)
        w = [F.zero()] * len(elems)
        w[i] = F.const(-1)
        return False, w
    common = F.one()
    for e in elems:
        if not e.is_polynomial():
            d = F._build(dict(e.den))
            if not (common / d).is_polynomial():
                common = common * d
    outside = [i for i, nm in enumerate(F.names) if nm not in S.variables]
    cols: dict = {}
    polys = []
    for e in elems:
        p = e * common
        assert p.is_polynomial()
        groups: dict = {}
        for m, c in p.num:
            key = tuple(m[i] for i in outside)
            rest = list(m)
            for i in outside:
                rest[i] = 0
            groups.setdefault(key, {})[tuple(rest)] = c
            cols.setdefault(key, None)
        polys.append(groups)
    keys = sorted(cols, reverse=True)
    rows = [[F._build(g[k]) if k in g else F.zero() for k in keys] for g in polys]
    rank, kernel = rank_over_field(rows)
    if rank == len(elems):
        return True, None
    return False, _normalize_witness(kernel[0])


def _jacobian_rank(elems: Sequence[ResElement], S: ResSubfield) -> int:
    # The rows d(x_s) for s in S are unit vectors; eliminating them leaves the
    # Jacobian of elems restricted to the variables outside S.
    if not elems:
        return len(S.variables)
    F = elems[0].field
    outside = [nm for nm in F.names if nm not in S.variables]
    if not outside:
        return len(S.variables)
    rows = [[e.diff(nm) for nm in outside] for e in elems]
    rank, _ = rank_over_field(rows)
    return len(S.variables) + rank


def algebraically_independent_over(elems: Sequence[ResElement], S: ResSubfield) -> bool:
    """Characteristic-0 Jacobian criterion over Q(x_S)."""
    elems = list(elems)
    return _jacobian_rank(elems, S) == len(S.variables) + len(elems)


def transcendence_degree(elems: Sequence[ResElement], S: ResSubfield) -> int:
    """Transcendence degree of Q(x_S)(elems) over Q(x_S)."""
    elems = list(elems)
    return _jacobian_rank(elems, S) - len(S.variables)
