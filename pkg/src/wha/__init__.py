"""Finite quantum groupoids (weak Hopf C*-algebras), their corepresentations and coactions."""
from types import ModuleType as _Module

from .algebra import FiniteCStarAlgebra, StateData, gns, matrix_algebra
from .builtins import (
    BUILTINS,
    Groupoid,
    InvalidGroupoid,
    cyclic_group,
    fp2,
    fpn,
    function_algebra,
    gp2,
    groupoid_algebra,
    kz2,
    pair_groupoid,
)
from .coaction import (
    Coaction,
    EquivariantModule,
    coideal_coaction,
    regular_coaction,
    source_coaction,
    trivial_coaction,
)
from .corep import (
    Corep,
    conjugate,
    decompose,
    peter_weyl,
    registry,
    regular_corep,
    rigidity,
    tensor,
    trivial_corep,
)
from .hayashi import (
    BUILTIN_FUSION,
    FusionData,
    build_dual_algebra,
    build_weak_hopf,
    fusion_roundtrip,
    hayashi_functor,
    pointed_fusion,
    vecz2,
)
from .linalg import DEFAULT_TOL, Tolerance
from .reconstruction import (
    build_g_algebra,
    functor_from_module_category,
    roundtrip_spec_weak,
    spectral_functor,
)
from .suite import run_suite
from .weakhopf import WeakHopf

__version__ = "0.1.0"

__all__ = [n for n, v in dict(globals()).items() if not n.startswith("_") and not isinstance(v, _Module)]
