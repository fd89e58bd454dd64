"""Critical lengths, unreachable direction and controllability sign test for
the Dirichlet boundary-controlled KdV equation."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceFailure,
    DegenerateDenominator,
    DegenerateRoots,
    InstabilityError,
    KdvCritError,
    QuadratureFailure,
    SingularStep,
)
from .roots import CubicRoots, asymptotic_roots, solve_depressed_cubic
from .lengths import (
    CriticalLengthParams,
    aux_b,
    branch_residual,
    is_critical,
    scan_branch,
    solve_branch,
)
from .profile import (
    EtaTriplet,
    eta_triplet,
    eval_Phi,
    eval_profile,
    eval_varphi,
    project_onto_MD,
    verify_profile,
)
from .omega import (
    EXACT_CONTROLLABLE,
    Controllability,
    NOT_NULL_CONTROLLABLE,
    OmegaResult,
    OmegaSample,
    omega_scan,
    TransferQuantities,
    asymptotic_E,
    asymptotic_E_from_eta,
    b_integral,
    check_detQ_nonzero,
    minimize_omega,
    numerator_G,
    omega_at,
    transfer_quantities,
)
from .kdv import (
    BoundarySpec,
    Trajectory,
    eigenmode_check,
    kdvb_modal_propagator,
    manufactured_boundary,
    manufactured_solution,
    projection_invariant_check,
    simulate_linear_kdv,
)
