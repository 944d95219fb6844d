"""Driven Dicke model simulator.

Unitary and open-system evolution under a linearly ramped light-matter
coupling, entanglement measures, phase-space tomography, and extraction of
the enhanced-entanglement dynamical phase diagram.
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    DickeSimError,
    SnapshotError,
    StiffnessError,
    TruncationError,
)
from .hilbert import (
    BasisIndex,
    SparseOperator,
    SystemParams,
    build_boson,
    build_collective_spin,
    embed_product,
    parity_operator,
)
from .hamiltonian import (
    CatAnsatz,
    GroundStateResult,
    RampSchedule,
    broken_symmetry_state,
    dicke_hamiltonian,
    displaced_frame_hamiltonian,
    ground_state,
    make_ramp,
    strong_coupling_spectrum,
)
from .state import QuantumState, initial_state
from .observables import (
    ObservableRecord,
    expectation,
    negativity,
    negativity_from_schmidt,
    reduce_field,
    reduce_matter,
    schmidt_spectrum,
    truncation_monitor,
    von_neumann_entropy,
)
from .unitary import (
    ConvergenceReport,
    Trajectory,
    convergence_check,
    evolve_pure,
    propagate_constant,
)
from .lindblad import OpenSystemParams, evolve_open, lindblad_rhs, thermal_initial_state

__version__ = "0.1.0"
