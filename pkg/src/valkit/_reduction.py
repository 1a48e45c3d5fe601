"""Ultrametric Gram-Schmidt over a coefficient field C.

A :class:`CoefficientField` packages what the reducer needs to know about C:
its value group (shadow), its residue variables, and a way to produce an
element of C with any prescribed valuation in that group.  Leading terms are
cancelled by solving a linear system over k_C in the residues; the residual
that cannot be cancelled is the new basis vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NotIndependent, PrecisionExhausted
from .hahn_series import HahnSeries, Universe
from .ordered_groups import GammaElement, GammaSubgroup
from .residue_algebra import ResElement, ResSubfield, linearly_independent_over


class CoefficientField:
    """Computational view of a base field C inside a universe."""

    def __init__(
        self,
        U: Universe,
        witnesses: list[HahnSeries] = (),
        residue_vars=frozenset(),
        name: str = "Q",
    ):
        self.U = U
        self.name = name
        self.subfield = ResSubfield(residue_vars)
        chosen: list[HahnSeries] = []
        lattice = GammaSubgroup.trivial(*U.rank)
        # monomial witnesses first: their powers stay exact
        for w in sorted(witnesses, key=lambda s: (not s.is_monomial(), len(s.terms))):
            g = w.valuation()
            if not lattice.contains(g):
                chosen.append(w)
                lattice = GammaSubgroup([x.valuation() for x in chosen], rank=U.rank)
        self.witnesses = chosen
        self.gamma = lattice
        self._cache: dict = {}

    @classmethod
    def prime(cls, U: Universe) -> "CoefficientField":
        return cls(U)

    @property
    def trivially_valued(self) -> bool:
        return self.gamma.is_trivial()

    def same_class(self, g1: GammaElement, g2: GammaElement) -> bool:
        return self.gamma.contains(g1 - g2)

    def multiplier(self, gamma: GammaElement) -> HahnSeries:
        """An element of C with valuation ``gamma``; raises if gamma is outside the shadow."""
        hit = self._cache.get(gamma)
        if hit is not None:
            return hit
        coeffs = self.gamma.coefficients(gamma)
        if coeffs is None:
            raise ValueError(f"{gamma} is not in the value group of {self.name}")
        out = self.U.one()
        for w, n in zip(self.witnesses, coeffs):
            if n:
                out = out * (w**n)
        self._cache[gamma] = out
        return out

    def lift(self, c: ResElement) -> HahnSeries:
        """Lift a residue in k_C to C as a constant series."""
        return self.U.const(c)


def _nonzero(s: HahnSeries) -> bool:
    return not s.is_exact_zero()


@dataclass
class ReductionResult:
    basis: list[HahnSeries]
    change: list[list[HahnSeries]]  # basis_i = sum_j change[i][j] * input_j
    inverse: list[list[HahnSeries]]  # input_i = sum_j inverse[i][j] * basis_j
    steps: list[int] = field(default_factory=list)


def cancel_leading(
    basis: list[HahnSeries], r: HahnSeries, K: CoefficientField
) -> tuple[list[tuple[int, HahnSeries]], bool]:
    """One cancellation step: coefficients (index, C-element) killing r's leading term.

    Returns ``([], False)`` when the leading term is uncancellable: its
    valuation class is fresh or its residue is k_C-independent of the
    normalized residues of the class.
    """
    g, c = r.leading()
    members = [j for j, b in enumerate(basis) if K.same_class(b.valuation(), g)]
    if not members:
        return [], False
    mults = [K.multiplier(g - basis[j].valuation()) for j in members]
    rhos = [m.leading()[1] * basis[j].leading()[1] for m, j in zip(mults, members)]
    indep, w = linearly_independent_over(rhos + [c], K.subfield)
    if indep or not w[-1]:
        return [], False
    # w normalized so that w[-1] == -1: c = sum w_i rho_i
    out = []
    for wi, m, j in zip(w, mults, members):
        if wi:
            out.append((j, K.lift(wi) * m))
    return out, True


class Reducer:
    """Incremental Gram-Schmidt; ``push`` either extends the basis or raises
    and leaves the state untouched.

    Change data is kept sparsely: ``change[i]`` maps input indices to the
    C-coefficients expressing basis vector i, ``inverse[i]`` maps basis
    indices to those expressing input i.
    """

    def __init__(
        self,
        K: CoefficientField,
        max_steps: int | None = None,
        target: GammaElement | None = None,
        goodify: bool = True,
        track: bool = True,
    ):
        self.K = K
        U = K.U
        self.max_steps = 4 * U.precision if max_steps is None else max_steps
        self.target = target
        self.goodify = goodify
        self.track = track
        self.basis: list[HahnSeries] = []
        self.change: list[dict] = []
        self.inverse: list[dict] = []
        self.steps: list[int] = []
        self._one = U.one()

    def push(self, ell: HahnSeries) -> HahnSeries:
        k = len(self.basis)
        one = self._one
        if ell.is_exact_zero():
            raise NotIndependent(f"input {k} is zero", relation={k: one})
        basis = self.basis
        r = ell
        a: dict = {}  # ell = r + sum a_j basis_j
        steps = 0
        while True:
            if r.is_exact_zero():
                rel = {k: one}
                if self.track:
                    for j, aj in a.items():
                        for i, tji in self.change[j].items():
                            rel[i] = rel.get(i, ell.U.zero()) - aj * tji
                raise NotIndependent(f"input {k} lies in the span of the previous inputs", relation=rel)
            if not r.terms:
                raise PrecisionExhausted(f"residual of input {k} vanished to precision: {r}")
            if self.target is not None and r.valuation() >= self.target:
                raise PrecisionExhausted(f"residual of input {k} reached the target precision")
            coeffs, ok = cancel_leading(basis, r, self.K)
            if not ok:
                break
            steps += 1
            if steps > self.max_steps:
                raise PrecisionExhausted(
                    f"cancellation for input {k} did not terminate in {self.max_steps} steps"
                )
            for j, cj in coeffs:
                r = r - cj * basis[j]
                a[j] = a[j] + cj if j in a else cj
        scale = one
        if steps and r.leading()[1].leading_sign() < 0:
            scale = -one
        if self.goodify:
            g = r.valuation()
            for b in basis:
                if self.K.same_class(b.valuation(), g):
                    if b.valuation() != g:
                        scale = scale * self.K.multiplier(b.valuation() - g)
                    break
        if scale != one:
            r = r * scale
        if self.track:
            # basis_k = scale * (ell - sum a_j basis_j)
            row = {k: scale}
            for j, aj in a.items():
                if _nonzero(aj):
                    f = scale * aj
                    for i, tji in self.change[j].items():
                        row[i] = row[i] - f * tji if i in row else -(f * tji)
            inv = {j: aj for j, aj in a.items() if _nonzero(aj)}
            inv[k] = _inverse(scale)
            self.change.append(row)
            self.inverse.append(inv)
        basis.append(r)
        self.steps.append(steps)
        return r

    def result(self) -> ReductionResult:
        n = len(self.basis)
        U = self.K.U
        zero = U.zero()

        def dense(rows):
            return [[row.get(i, zero) for i in range(n)] for row in rows]

        return ReductionResult(list(self.basis), dense(self.change), dense(self.inverse), list(self.steps))


def _inverse(s: HahnSeries) -> HahnSeries:
    if s.is_monomial():
        g, c = s.terms[0]
        return s.U.monomial(c.inverse(), -g)
    return s.inverse()


def gram_schmidt(
    vectors: list[HahnSeries],
    K: CoefficientField,
    max_steps: int | None = None,
    target: GammaElement | None = None,
    goodify: bool = True,
) -> ReductionResult:
    """Separated (and, with ``goodify``, good) basis of the C-span of ``vectors``."""
    red = Reducer(K, max_steps, target, goodify)
    for v in vectors:
        red.push(v)
    return red.result()


def determinant(M: list[list[HahnSeries]]) -> HahnSeries:
    """Laplace expansion; fine for the small matrices used here."""
    n = len(M)
    if n == 0:
        raise ValueError("empty matrix")
    U = M[0][0].U
    if n == 1:
        return M[0][0]
    total = U.zero()
    for j in range(n):
        if not M[0][j].terms:
            continue
        minor = [row[:j] + row[j + 1 :] for row in M[1:]]
        term = M[0][j] * determinant(minor)
        total = total - term if j % 2 else total + term
    return total


def decompose(
    basis: list[HahnSeries], x: HahnSeries, K: CoefficientField, max_steps: int | None = None
) -> dict[int, HahnSeries] | None:
    """C-coefficients expressing x in a separated basis, or None if x is outside its span.

    Only succeeds when cancellation reaches the exact zero series.
    """
    U = x.U
    max_steps = 4 * U.precision if max_steps is None else max_steps
    out: dict[int, HahnSeries] = {}
    r = x
    for _ in range(max_steps + 1):
        if r.is_exact_zero():
            return out
        if not r.terms:
            return None
        coeffs, ok = cancel_leading(basis, r, K)
        if not ok:
            return None
        for j, cj in coeffs:
            r = r - cj * basis[j]
            out[j] = out[j] + cj if j in out else cj
    return None
