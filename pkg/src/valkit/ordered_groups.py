"""Value groups: finite-rank subgroups of Q^n under lexicographic order.

A :class:`GammaElement` carries a *main* block (one coordinate per series
axis, first axis most significant) and an *infinitesimal* block whose axes
sit strictly below every main axis.  Comparison is plain lexicographic order
on the concatenation, which puts every nonzero pure-infinitesimal element
below every positive element with a nonzero main block.

Subgroups are integer spans of explicit generators.  All decisions
(membership, intersection, torsion of quotients) reduce to Hermite / Smith
normal forms of integer matrices obtained by clearing denominators.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, Sequence

from .errors import RankMismatch

__all__ = [
    "GammaElement",
    "GammaSubgroup",
    "lex_compare",
    "subgroup_contains",
    "q_basis_mod",
    "torsion_free_quotient",
    "subgroup_intersection",
    "hnf_with_transform",
    "invariant_factors",
]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def _coord(x):
    """Exact coordinate: an int when integral (fast path), else a Fraction."""
    if type(x) is int:
        return x
    x = _frac(x)
    return x.numerator if x.denominator == 1 else x


def _norm(x):
    if type(x) is int or x.denominator != 1:
        return x
    return x.numerator


class GammaElement:
    """Immutable element of Q^main x Q^inf with lexicographic order."""

    __slots__ = ("main", "inf", "key", "_h")

    def __init__(self, main: Iterable = (), inf: Iterable = ()):
        self.main = tuple(_coord(c) for c in main)
        self.inf = tuple(_coord(c) for c in inf)
        self.key = self.main + self.inf
        self._h = None

    @classmethod
    def _raw(cls, main: tuple, inf: tuple) -> "GammaElement":
        g = object.__new__(cls)
        g.main = main
        g.inf = inf
        g.key = main + inf
        g._h = None
        return g

    @classmethod
    def zero(cls, n_main: int, n_inf: int = 0) -> "GammaElement":
        z = 0
        return cls._raw((z,) * n_main, (z,) * n_inf)

    @classmethod
    def unit(cls, n_main: int, n_inf: int, index: int, infinitesimal: bool = False) -> "GammaElement":
        main = [0] * n_main
        inf = [0] * n_inf
        (inf if infinitesimal else main)[index] = 1
        return cls(main, inf)

    @property
    def rank(self) -> tuple[int, int]:
        return (len(self.main), len(self.inf))

    def _check(self, other: "GammaElement") -> None:
        if len(self.main) != len(other.main) or len(self.inf) != len(other.inf):
            raise RankMismatch(f"rank {self.rank} vs {other.rank}")

    def is_zero(self) -> bool:
        return not any(self.key)

    def __add__(self, other: "GammaElement") -> "GammaElement":
        self._check(other)
        return GammaElement._raw(
            tuple([_norm(a + b) for a, b in zip(self.main, other.main)]),
            tuple([_norm(a + b) for a, b in zip(self.inf, other.inf)]) if self.inf else (),
        )

    def __sub__(self, other: "GammaElement") -> "GammaElement":
        self._check(other)
        return GammaElement._raw(
            tuple([_norm(a - b) for a, b in zip(self.main, other.main)]),
            tuple([_norm(a - b) for a, b in zip(self.inf, other.inf)]) if self.inf else (),
        )

    def __neg__(self) -> "GammaElement":
        return GammaElement._raw(tuple(-a for a in self.main), tuple(-a for a in self.inf))

    def __mul__(self, n) -> "GammaElement":
        n = _coord(n)
        return GammaElement._raw(
            tuple(_norm(a * n) for a in self.main), tuple(_norm(a * n) for a in self.inf)
        )

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, GammaElement):
            return NotImplemented
        return self.key == other.key and len(self.main) == len(other.main)

    def __hash__(self) -> int:
        h = self._h
        if h is None:
            h = self._h = hash(self.key)
        return h

    def __lt__(self, other: "GammaElement") -> bool:
        self._check(other)
        return self.key < other.key

    def __le__(self, other: "GammaElement") -> bool:
        self._check(other)
        return self.key <= other.key

    def __gt__(self, other: "GammaElement") -> bool:
        self._check(other)
        return self.key > other.key

    def __ge__(self, other: "GammaElement") -> bool:
        self._check(other)
        return self.key >= other.key

    def sign(self) -> int:
        for c in self.key:
            if c:
                return 1 if c > 0 else -1
        return 0

    def __repr__(self) -> str:
        main = ", ".join(str(c) for c in self.main)
        if self.inf:
            inf = ", ".join(str(c) for c in self.inf)
            return f"Gamma({main}; {inf})"
        return f"Gamma({main})"

    def to_json(self) -> dict:
        return {"main": [str(c) for c in self.main], "inf": [str(c) for c in self.inf]}

    @classmethod
    def from_json(cls, data) -> "GammaElement":
        if isinstance(data, dict):
            return cls(data.get("main", ()), data.get("inf", ()))
        # bare list: main block only
        return cls(data, ())


def lex_compare(a: GammaElement, b: GammaElement) -> int:
    """Return -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    a._check(b)
    if a.key < b.key:
        return -1
    return 1 if a.key > b.key else 0


# --------------------------------------------------------------------------
# integer lattice machinery


def _scaled(vectors: Sequence[Sequence[Fraction]]) -> tuple[int, list[list[int]]]:
    """Clear denominators: return (D, integer rows) with rows = D * vectors."""
    den = 1
    for v in vectors:
        for c in v:
            den = lcm(den, c.denominator)
    return den, [[int(c * den) for c in v] for v in vectors]


def hnf_with_transform(rows: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Row-style Hermite normal form.

    Returns ``(H, U)`` with ``U`` unimodular and ``U * rows == H``.  The
    nonzero rows of ``H`` come first, are in echelon form with positive
    pivots, and entries above each pivot are reduced into ``[0, pivot)``.
    Zero rows of ``H`` correspond to rows of ``U`` spanning the left kernel.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    H = [list(r) for r in rows]
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    pr = 0
    for col in range(n):
        if pr == m:
            break
        # euclid on column `col` among rows pr..m-1
        while True:
            nz = [i for i in range(pr, m) if H[i][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(H[i][col]))
            if piv != pr:
                H[pr], H[piv] = H[piv], H[pr]
                U[pr], U[piv] = U[piv], U[pr]
            done = True
            for i in range(pr + 1, m):
                if H[i][col]:
                    q = H[i][col] // H[pr][col]
                    H[i] = [a - q * b for a, b in zip(H[i], H[pr])]
                    U[i] = [a - q * b for a, b in zip(U[i], U[pr])]
                    if H[i][col]:
                        done = False
            if done:
                break
        if pr < m and H[pr][col] != 0:
            if H[pr][col] < 0:
                H[pr] = [-a for a in H[pr]]
                U[pr] = [-a for a in U[pr]]
            p = H[pr][col]
            for i in range(pr):
                q = H[i][col] // p
                if q:
                    H[i] = [a - q * b for a, b in zip(H[i], H[pr])]
                    U[i] = [a - q * b for a, b in zip(U[i], U[pr])]
            pr += 1
    return H, U


def invariant_factors(matrix: Sequence[Sequence[int]]) -> list[int]:
    """Nonzero diagonal entries of the Smith normal form of an integer matrix."""
    A = [list(r) for r in matrix if any(r)]
    if not A:
        return []
    out = []
    while A and any(any(r) for r in A):
        m, n = len(A), len(A[0])
        # bring a smallest nonzero entry to (0, 0)
        _, i0, j0 = min((abs(A[i][j]), i, j) for i in range(m) for j in range(n) if A[i][j])
        A[0], A[i0] = A[i0], A[0]
        for r in A:
            r[0], r[j0] = r[j0], r[0]
        while True:
            p = A[0][0]
            changed = False
            for i in range(1, m):
                if A[i][0]:
                    q = A[i][0] // p
                    A[i] = [a - q * b for a, b in zip(A[i], A[0])]
                    if A[i][0]:
                        changed = True
            for j in range(1, n):
                if A[0][j]:
                    q = A[0][j] // p
                    for r in A:
                        r[j] -= q * r[0]
                    if A[0][j]:
                        changed = True
            if changed:
                _, i0, j0 = min(
                    (abs(A[i][j]), i, j)
                    for i in range(m)
                    for j in range(n)
                    if A[i][j] and (i == 0 or j == 0)
                )
                A[0], A[i0] = A[i0], A[0]
                for r in A:
                    r[0], r[j0] = r[j0], r[0]
                continue
            # pivot must divide the rest of the matrix
            bad = next(
                ((i, j) for i in range(1, m) for j in range(1, n) if A[i][j] % p),
                None,
            )
            if bad is None:
                break
            A[0] = [a + b for a, b in zip(A[0], A[bad[0]])]
        out.append(abs(A[0][0]))
        A = [r[1:] for r in A[1:]]
        A = [r for r in A if any(r)]
        if A and not A[0]:
            break
    return out


class GammaSubgroup:
    """Integer span of a finite list of :class:`GammaElement` generators."""

    def __init__(self, generators: Iterable[GammaElement], rank: tuple[int, int] | None = None):
        self.generators = tuple(generators)
        if rank is None:
            if not self.generators:
                raise ValueError("empty subgroup needs an explicit rank")
            rank = self.generators[0].rank
        self.rank = tuple(rank)
        for g in self.generators:
            if g.rank != self.rank:
                raise RankMismatch(f"generator rank {g.rank} vs {self.rank}")

    @classmethod
    def trivial(cls, n_main: int, n_inf: int = 0) -> "GammaSubgroup":
        return cls((), (n_main, n_inf))

    def _check(self, g: GammaElement) -> None:
        if g.rank != self.rank:
            raise RankMismatch(f"element rank {g.rank} vs subgroup rank {self.rank}")

    @cached_property
    def _echelon(self):
        """(denominator, pivot rows, transform rows) for the generator lattice."""
        if not self.generators:
            return 1, [], []
        den, rows = _scaled([g.key for g in self.generators])
        H, U = hnf_with_transform(rows)
        nonzero = [(h, u) for h, u in zip(H, U) if any(h)]
        return den, [h for h, _ in nonzero], [u for _, u in nonzero]

    def coefficients(self, g: GammaElement) -> tuple[int, ...] | None:
        """Integer vector c with sum c_i * generator_i == g, or None if g is not in the span."""
        self._check(g)
        den, H, U = self._echelon
        scaled = [c * den for c in g.key]
        if any(c.denominator != 1 for c in scaled):
            return None
        res = [int(c) for c in scaled]
        combo = [0] * len(self.generators)
        for h, u in zip(H, U):
            col = next(j for j, a in enumerate(h) if a)
            if any(res[:col]):
                return None
            q, r = divmod(res[col], h[col])
            if r:
                return None
            if q:
                res = [a - q * b for a, b in zip(res, h)]
                combo = [a + q * b for a, b in zip(combo, u)]
        if any(res):
            return None
        return tuple(combo)

    def contains(self, g: GammaElement) -> bool:
        return self.coefficients(g) is not None

    __contains__ = contains

    def basis(self) -> list[GammaElement]:
        """A Z-basis (Hermite normal form rows scaled back)."""
        den, H, _ = self._echelon
        n_main = self.rank[0]
        return [
            GammaElement([Fraction(a, den) for a in h[:n_main]], [Fraction(a, den) for a in h[n_main:]])
            for h in H
        ]

    def is_trivial(self) -> bool:
        return not self._echelon[1]

    def contains_subgroup(self, other: "GammaSubgroup") -> bool:
        return all(self.contains(g) for g in other.generators)

    def same_as(self, other: "GammaSubgroup") -> bool:
        return self.contains_subgroup(other) and other.contains_subgroup(self)

    def q_rank(self) -> int:
        return len(self._echelon[1])

    def __repr__(self) -> str:
        return "span{" + ", ".join(repr(g) for g in self.basis()) + "}"

    def to_json(self) -> list:
        return [g.to_json() for g in self.basis()]


def subgroup_contains(G: GammaSubgroup, g: GammaElement) -> bool:
    """True iff g lies in the integer span of G's generators."""
    return G.contains(g)


def _q_rank(vectors: list[tuple[Fraction, ...]]) -> int:
    rows = [list(v) for v in vectors]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col]:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def q_basis_mod(gens_L: Sequence[GammaElement], G_C: GammaSubgroup) -> list[GammaElement]:
    """Greedy maximal sublist of gens_L that is Q-independent modulo Q*G_C."""
    current = [g.key for g in G_C.generators]
    base_rank = _q_rank(current) if current else 0
    chosen = []
    for g in gens_L:
        G_C._check(g)
        trial = current + [g.key]
        r = _q_rank(trial)
        if r > base_rank:
            chosen.append(g)
            current = trial
            base_rank = r
    return chosen


def torsion_free_quotient(gens_L: Sequence[GammaElement], G_C: GammaSubgroup) -> bool:
    """Is (span(gens_L) + G_C) / G_C torsion-free?

    G_C is saturated in A = span(gens_L) + G_C exactly when the coordinate
    matrix of G_C's generators in a Z-basis of A has all invariant factors 1.
    """
    for g in gens_L:
        G_C._check(g)
    A = GammaSubgroup(list(gens_L) + list(G_C.generators), G_C.rank)
    basis = A.basis()
    if not basis or not G_C.generators:
        return True
    B = GammaSubgroup(basis, G_C.rank)
    coords = []
    for g in G_C.generators:
        c = B.coefficients(g)
        assert c is not None, "G_C must lie inside A"
        coords.append(list(c))
    return all(f == 1 for f in invariant_factors(coords))


def subgroup_intersection(A: GammaSubgroup, B: GammaSubgroup) -> GammaSubgroup:
    """Lattice intersection of two integer spans."""
    if A.rank != B.rank:
        raise RankMismatch(f"{A.rank} vs {B.rank}")
    if not A.generators or not B.generators:
        return GammaSubgroup.trivial(*A.rank)
    ga, gb = list(A.generators), list(B.generators)
    den, rows = _scaled([g.key for g in ga] + [g.key for g in gb])
    na = len(ga)
    stacked = rows[:na] + [[-c for c in r] for r in rows[na:]]
    H, U = hnf_with_transform(stacked)
    out = []
    for h, u in zip(H, U):
        if any(h):
            continue
        # u[:na] . A == u[na:] . B
        acc = GammaElement.zero(*A.rank)
        for c, g in zip(u[:na], ga):
            if c:
                acc = acc + g * c
        if not acc.is_zero():
            out.append(acc)
    return GammaSubgroup(out, A.rank)

