"""Quantum supermaps: transformations of quantum operations.

Operations are stored as Choi operators, supermaps as Kraus operators acting
on them.  The package provides Choi/Kraus interconversion, determinism
characterization via the dual map, factorization of deterministic and
probabilistic supermaps into two-isometry circuits with measured ancillas,
process testers (POVMs on operations), and constructions for channel
programming and tomography.
"""

from .linalg import (
    EQ_TOL,
    HERM_TOL,
    POS_TOL,
    complete_isometry,
    eigh_sorted,
    kron,
    partial_trace,
    partial_transpose,
    permutation_matrix,
    permute_systems,
    random_density,
    random_isometry,
)
from .operations import (
    KrausSet,
    QuantumOperation,
    apply_operation,
    choi_to_kraus,
    compose,
    effect_of,
    identity_operation,
    is_channel,
    kraus_to_choi,
    random_channel,
    random_operation,
    tensor,
)
from .supermap import (
    EffectMap,
    NotDeterministicError,
    Supermap,
    action_distance,
    apply_supermap,
    dual_supermap,
    effect_map_of,
    identity_supermap,
    is_deterministic,
    is_deterministic_effectwise,
    is_normalization_functional,
    is_probability_preserving,
    sum_supermaps,
    tensor_supermaps,
)
from .realization import (
    CircuitRealization,
    circuit_to_supermap,
    delayed_reading_check,
    realize,
    realize_probabilistic,
    run_circuit,
)
from .testers import (
    OutcomeDistribution,
    Tester,
    as_supermap_parts,
    discrimination_probability,
    evaluate,
    is_informationally_complete,
    make_tester,
    prepare_measure_tester,
    tester_from_circuit,
)
from .applications import (
    ProgrammableDevice,
    TomographySetup,
    informationally_complete_tester_for,
    is_faithful,
    povm_as_channel,
    programmable_channel,
    programmable_povm,
    sandwich_supermap,
    tomography_supermap,
)

__version__ = "0.1.0"

__all__ = [
    "EQ_TOL",
    "HERM_TOL",
    "POS_TOL",
    "CircuitRealization",
    "EffectMap",
    "KrausSet",
    "NotDeterministicError",
    "OutcomeDistribution",
    "ProgrammableDevice",
    "QuantumOperation",
    "Supermap",
    "Tester",
    "TomographySetup",
    "action_distance",
    "apply_operation",
    "apply_supermap",
    "as_supermap_parts",
    "choi_to_kraus",
    "circuit_to_supermap",
    "complete_isometry",
    "compose",
    "delayed_reading_check",
    "discrimination_probability",
    "dual_supermap",
    "effect_map_of",
    "effect_of",
    "eigh_sorted",
    "evaluate",
    "identity_operation",
    "identity_supermap",
    "informationally_complete_tester_for",
    "is_channel",
    "is_deterministic",
    "is_deterministic_effectwise",
    "is_faithful",
    "is_informationally_complete",
    "is_normalization_functional",
    "is_probability_preserving",
    "kraus_to_choi",
    "kron",
    "make_tester",
    "partial_trace",
    "partial_transpose",
    "permutation_matrix",
    "permute_systems",
    "povm_as_channel",
    "prepare_measure_tester",
    "programmable_channel",
    "programmable_povm",
    "random_channel",
    "random_density",
    "random_isometry",
    "random_operation",
    "realize",
    "realize_probabilistic",
    "run_circuit",
    "sandwich_supermap",
    "sum_supermaps",
    "tensor",
    "tensor_supermaps",
    "tester_from_circuit",
    "tomography_supermap",
]
