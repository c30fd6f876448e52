"""Moduli spaces of homomorphism sheaves on finite-dimensional von Neumann algebras.

Block algebras are given by their block sizes; every projection, partial
isometry and homomorphism is kept in standard position so all arithmetic is
exact integer bookkeeping.
"""

from .cone import (
    DyadicScalar,
    ScalingTable,
    TraceMonoid,
    canonical_cone,
    check_cone_axioms,
    check_uniqueness,
    dyadic_scale,
    glb_dyadic_check,
    half,
    is_divisible,
    mutation_sweep,
)
from .fd_algebra import (
    BlockAlgebra,
    PartialPermIsometry,
    RankTuple,
    StandardProjection,
    StandardSubalgebra,
)
from .hom_sheaf import MultiplicityMatrix, StandardHom, as_presheaf, enumerate_homs, restrict
from .moduli import (
    ModuliElement,
    ModuliMonoid,
    TableMonoid,
    build_moduli,
    check_dedekind,
    check_join_formula,
    check_monoid,
    check_poset,
    check_wedge_vee,
    compare_moduli,
)
from .report import Report
from .sketch import build_truncated_sketch, check_sheaf

__version__ = "0.1.0"

__all__ = [
    "BlockAlgebra",
    "DyadicScalar",
    "ModuliElement",
    "ModuliMonoid",
    "MultiplicityMatrix",
    "PartialPermIsometry",
    "RankTuple",
    "Report",
    "ScalingTable",
    "StandardHom",
    "StandardProjection",
    "StandardSubalgebra",
    "TableMonoid",
    "TraceMonoid",
    "as_presheaf",
    "build_moduli",
    "build_truncated_sketch",
    "canonical_cone",
    "check_cone_axioms",
    "check_dedekind",
    "check_join_formula",
    "check_monoid",
    "check_poset",
    "check_sheaf",
    "check_uniqueness",
    "check_wedge_vee",
    "compare_moduli",
    "dyadic_scale",
    "enumerate_homs",
    "glb_dyadic_check",
    "half",
    "is_divisible",
    "mutation_sweep",
    "restrict",
]
