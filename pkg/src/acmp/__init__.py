"""Anti-commutation matrix pair (ACMP) parametrization of the two-body
reduced density matrix, with a full-CI oracle and a constrained-Lagrangian
Newton-Krylov ground-state solver."""

from .core import (
    Acmp,
    AcmpSet,
    ColemanReport,
    GramPair,
    SetResiduals,
    acmp_residuals,
    coleman_check,
    compact,
    compact_set,
    convex_mix,
    energy_of,
    gram_pair,
    load_acmp_set,
    pair_product,
    rdm1_from,
    rdm2_from,
    save_acmp_set,
    set_residuals,
)
from .fock import (
    Determinant,
    DeterminantBasis,
    Wavefunction,
    acmp_from_wavefunction,
    acmp_set_from_wavefunction,
    apply_annihilation,
    apply_creation,
    build_hamiltonian_matrix,
    ground_state,
    rdm1_of,
    rdm2_of,
)
from .hamiltonians import (
    Hamiltonian,
    embed_one_body,
    load_hamiltonian,
    random_hamiltonian,
    save_hamiltonian,
    validate_hamiltonian,
)
from .lagrangian import (
    FlatLayout,
    Multipliers,
    SolveState,
    grad_check,
    lagrangian_gradient,
    lagrangian_value,
    symmetrized_gradient,
    symmetrized_value,
)
from .psd import NotRepresentableError, pivoted_cholesky, psd_factor
from .representability import (
    q_matrix,
    q_negativity,
    t2_matrix,
    t2_negativity,
)
from .solver import (
    SolveReport,
    SolverOptions,
    initial_guess,
    load_checkpoint,
    multiplier_fit,
    newton_krylov,
    save_checkpoint,
    solve,
)

__version__ = "0.1.0"
