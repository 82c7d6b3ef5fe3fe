"""Phase-space (Weyl symbol) self-consistent harmonic approximation.

Quadratic normal forms, normal/Weyl symbol conversion, a generic SCHA
engine and two antiferromagnet applications: the bulk spin-flop field and
the finite odd chain.
"""

from .errors import (
    ConstraintViolated,
    DivergentCorrelator,
    GapClosed,
    NoConvergence,
    NoStableWindow,
    NotPositiveDefinite,
    TruncationWarning,
    UnstableMode,
    UnstableSpectrum,
    WeylSchaError,
)
from .quadratic import (
    CorrelatorSet,
    NormalModeBasis,
    QuadraticHamiltonian,
    correlators,
    normal_form,
    psd_sqrt,
    single_mode_bogoliubov,
    thermal_factors,
)
from .weyl import (
    HolomorphicPolynomial,
    Ordering,
    ThermalHOWeyl,
    fn_times_a_weyl,
    fock_oracle_weyl,
    gaussian_smoothing_weyl,
    normal_to_weyl,
    thermal_ho_weyl,
    weyl_to_normal,
)
from .scha import (
    RenormalizableModel,
    SchaConfig,
    SchaState,
    scha_1d,
    scha_iterate,
    wick_average,
    wick_average_quartic,
)
from .bulk import (
    BulkLattice,
    BulkState,
    bare_spectrum,
    correlators_DDprime,
    gamma_k,
    h_sf,
    scha_bulk,
    staggered_magnetization,
)
from .chain import (
    ChainMatrices,
    ChainModel,
    ChainSpectrum,
    build_matrices,
    correlators_chain,
    critical_fields_HA,
    magnetization,
    scha_chain,
    scha_second_derivatives,
    spectrum_AHA,
)
from .boundary import (
    BoundaryParams,
    determinant_closed,
    determinant_direct,
    n_critical,
    solve_h_pm,
)

__version__ = "0.1.0"
