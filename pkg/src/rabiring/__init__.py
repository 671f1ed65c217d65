"""Mean-field phase diagrams and excitation spectra of the chiral quantum Rabi ring.

The classical-oscillator limit of a ring of Rabi cavities with complex
(phase ``theta``) photon hopping, and the ring of Lipkin-Meshkov-Glick
systems it maps onto, are minimized numerically and compared with the
closed-form critical lines.
"""
from .errors import (
    BracketError,
    ConvergenceError,
    DomainError,
    FitQualityError,
    PairingError,
    RabiRingError,
    UnclassifiedPhaseError,
)
from .kernels import BACKEND
from .model import (
    Functional,
    MeanFieldState,
    ModelParams,
    PhaseKind,
    PhaseLabel,
    canonicalize_theta,
    momentum_grid,
    symmetry_orbit,
)
from .meanfield import (
    SeedSpec,
    classify_phase,
    energy,
    energy_lmgr,
    energy_qrr,
    first_order_boundary,
    gradient,
    minimize,
    scan_grid,
    second_order_boundary_numeric,
)
from .analytic import (
    critical_g1,
    critical_line,
    second_order_boundary,
    triple_points,
)
from .spectrum import (
    build_bogoliubov_matrix,
    dispersion_normal,
    dispersion_superradiant,
    effective_coefficients,
    excitation_energies,
)
from .scaling import fit_exponent, scan_exponents, triple_point_exponents

__version__ = "0.1.0"
