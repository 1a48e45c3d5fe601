"""Series expressions such as ``"x1*t1**(1/2) + (1+x2)/(1-t1) + O(t1**4)"``.

sympy parses the text; the resulting tree is evaluated with series
arithmetic so rational functions of the axes expand at the universe's
default precision.  ``O(m)`` for a monomial m marks the truncation point.
"""

from __future__ import annotations

from fractions import Fraction

import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

_BigO = sympy.Function("BigO")


def _rat(x) -> Fraction:
    r = sympy.Rational(x)
    return Fraction(int(r.p), int(r.q))


def parse_series(U, text: str):
    names = {nm: sympy.Symbol(nm) for nm in U.axes + U.variables + U.inf_axes}
    local = dict(names)
    local["O"] = _BigO
    try:
        expr = parse_expr(
            str(text), local_dict=local, transformations=standard_transformations + (convert_xor,)
        )
    except Exception as exc:
        raise ValueError(f"cannot parse series {text!r}: {exc}") from exc
    return _Evaluator(U, text).run(expr)


class _Evaluator:
    def __init__(self, U, text):
        self.U = U
        self.text = text
        self.axis_names = set(U.axes) | set(U.inf_axes)
        self.var_names = set(U.variables)

    def fail(self, why: str):
        raise ValueError(f"unsupported series expression {self.text!r}: {why}")

    def run(self, e):
        U = self.U
        if isinstance(e, sympy.Symbol):
            if e.name in self.axis_names:
                return U.t(e.name)
            if e.name in self.var_names:
                return U.var(e.name)
            self.fail(f"unknown name {e.name}")
        if isinstance(e, sympy.Rational):
            return U.const(_rat(e))
        if isinstance(e, sympy.Number):
            self.fail(f"non-rational number {e}")
        if isinstance(e, sympy.Add):
            out = U.zero()
            for arg in e.args:
                out = out + self.run(arg)
            return out
        if isinstance(e, sympy.Mul):
            out = U.one()
            for arg in e.args:
                out = out * self.run(arg)
            return out
        if isinstance(e, sympy.Pow):
            base, ex = e.args
            if not isinstance(ex, sympy.Rational):
                self.fail(f"exponent {ex} is not rational")
            q = _rat(ex)
            b = self.run(base)
            if q.denominator == 1:
                return b ** int(q)
            if b.is_monomial() and b.terms[0][1] == 1:
                return U.monomial(1, b.terms[0][0] * q)
            self.fail(f"fractional power of non-monomial {base}")
        if isinstance(e, _BigO):
            m = self.run(e.args[0])
            if not m.is_monomial():
                self.fail("O(...) takes a monomial")
            return U.big_o(m.terms[0][0])
        self.fail(f"unsupported construct {type(e).__name__}")
