"""Exact computations in valued fields of equicharacteristic zero.

Value groups are finite-rank lexicographic subgroups of Q^n, residue fields
are rational function fields over Q, and the ambient field is a truncated
Hahn series universe.  On top of that the package decides separatedness of
bases, builds separated bases, checks compositum formulas, extends
isomorphisms and refines valuations, always on a degree-bounded shadow.
"""

from .errors import (
    HypothesisViolation,
    InternalInconsistency,
    NotIndependent,
    NotInValuationRing,
    PrecisionExhausted,
    RankMismatch,
    UnsupportedModel,
    UnsupportedRefinement,
    ValkitError,
)
from .hahn_series import HahnSeries, Universe, hs_inv, hs_mul, residue, rv_of, valuation
from .morphisms import FieldIso, RefinedUniverse, extend_iso, refine_valuation, verify_refinement
from .ordered_groups import (
    GammaElement,
    GammaSubgroup,
    lex_compare,
    q_basis_mod,
    subgroup_contains,
    torsion_free_quotient,
)
from .presentations import Presentation, check_hypotheses, enumerate_elements, value_group_shadow
from .residue_algebra import (
    ResElement,
    ResidueField,
    ResSubfield,
    algebraically_independent_over,
    linearly_independent_over,
    res_arith,
    transcendence_degree,
)
from .rv_sort import PowerModel, RvElement, power_coset_of, rv_independent, rv_try_add
from .separated import (
    check_lift,
    check_separated,
    compositum_check,
    make_separated,
    make_separated_trivial,
    rv_of_combination,
)

__all__ = [
    "HypothesisViolation",
    "InternalInconsistency",
    "NotIndependent",
    "NotInValuationRing",
    "PrecisionExhausted",
    "RankMismatch",
    "UnsupportedModel",
    "UnsupportedRefinement",
    "ValkitError",
    "HahnSeries",
    "Universe",
    "hs_inv",
    "hs_mul",
    "residue",
    "rv_of",
    "valuation",
    "FieldIso",
    "RefinedUniverse",
    "extend_iso",
    "refine_valuation",
    "verify_refinement",
    "GammaElement",
    "GammaSubgroup",
    "lex_compare",
    "q_basis_mod",
    "subgroup_contains",
    "torsion_free_quotient",
    "Presentation",
    "check_hypotheses",
    "enumerate_elements",
    "value_group_shadow",
    "ResElement",
    "ResidueField",
    "ResSubfield",
    "algebraically_independent_over",
    "linearly_independent_over",
    "res_arith",
    "transcendence_degree",
    "PowerModel",
    "RvElement",
    "power_coset_of",
    "rv_independent",
    "rv_try_add",
    "check_lift",
    "check_separated",
    "compositum_check",
    "make_separated",
    "make_separated_trivial",
    "rv_of_combination",
]

__version__ = "0.1.0"
