"""Certify k-positivity of linear systems and k-cooperativity of nonlinear ones."""
from .signvar import (
    ZERO_EPS,
    ConeLabel,
    SignStats,
    alternate,
    classify_cone,
    enumerate_cones,
    in_Pk,
    in_V,
    s_minus,
    s_plus,
    sigma,
    sign_stats,
)
from .compound import add_compound, add_compound_fd, index_sets, minor, mult_compound
from .certify import (
    CertReport,
    certify_system,
    eigen_structure,
    gaussian_tp,
    in_class_M,
    is_irreducible,
    is_metzler,
    is_oscillatory,
    is_SR,
    is_TN,
    is_TP,
    metzler_equiv_check,
)
from .dynamics import (
    LinearSystem,
    NonlinearSystem,
    Trajectory,
    certify_k_cooperative,
    classify_omega_limit,
    compound_flow,
    invariance_check,
    monotone_chain_check,
    project_to_plane,
    secant_gain,
    signvar_trace,
    simulate,
    transition_matrix,
    variational_matrix,
)

__version__ = "0.1.0"
