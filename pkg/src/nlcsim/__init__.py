"""Pseudo-spectral simulation of nematic liquid-crystal flow on the torus.

Incompressible velocity coupled to a unit-sphere director field, with a
dyadic frequency-analysis layer: homogeneous Besov and Sobolev norms, a
scale-critical regularity monitor, energy-law diagnostics, and empirical
audits of the interpolation and product estimates behind the monitor.
"""

from .config import (
    AuditConfig,
    ConfigError,
    RunConfig,
    parse_audit_config,
    parse_config,
)
from .diagnostics import (
    DiagnosticsRecord,
    IdentityReport,
    Monitor,
    audit_commutator_product,
    audit_gn_inequalities,
    criterion_quantities,
    dissipation,
    dyadic_rescale_field,
    dyadic_rescale_state,
    energy,
    identity_checks,
    momentum_residual,
    pressure_recover,
)
from .initial_data import (
    constant_director,
    equatorial_director,
    near_harmonic,
    random_divfree,
    random_scalar,
    sinusoidal_profile,
    taylor_green,
)
from .littlewood_paley import (
    BesovIndex,
    DyadicCutoffBank,
    audit_interpolation,
    besov_norm,
    build_cutoff_bank,
    fractional_laplacian,
    lp_block,
    low_freq_block,
    sobolev_norm,
)
from .solver import (
    BlowupError,
    ConstraintLossError,
    RunResult,
    SolverConfig,
    State,
    UnstableTimestepError,
    director_rhs,
    renormalize_director,
    run,
    step,
    stress_divergence,
    velocity_rhs,
)
from .spectral import (
    CorruptFieldError,
    Grid,
    GridError,
    SpectralField,
    VectorField,
    curl,
    dealias,
    derivative,
    divergence,
    from_spectral,
    gradient,
    laplacian,
    leray_project,
    lp_norm,
    to_spectral,
    vector_field,
)

__version__ = "0.1.0"
