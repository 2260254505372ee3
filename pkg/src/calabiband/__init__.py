"""Momentum profiles, per-band Bergman integrals and balanced-embedding
diagnostics for complete negative-CSCK metrics on projectivized ample line
bundles, at desk scale."""

from ._kernels import BACKEND, HAVE_NUMBA
from .numerics import (BracketError, LogQuadratureResult, NumericsError,
                       QuadratureError, QuadratureResult, RootResult,
                       find_root, finite_diff, integrate, integrate_logdomain,
                       sup_search)
from .profile import (MomentumProfile, ProfileParams, closed_form_c0_n1,
                      closed_form_tau0_n1, eval_phi, eval_phi_derivative,
                      factor_check, factor_min, solve_c0)
from .records import VerificationRecord
from .riemann_roch import (DimensionReport, GeometryData, band_multiplicities,
                           chi_coefficients, dimension_report,
                           geometry_from_curve, sigma, sigma_identity,
                           smcurvature, volumes)
from .transforms import (CoordinateChart, build_chart, g_of_tau,
                         poincare_check, t_of_tau, tau_of_t)
from .fiber_integrals import (FiberBand, NeckCoefficients, band_sweep,
                              compute_band, critical_point, e_and_derivs,
                              gaussian_table_check, ia_exact, ia_laplace,
                              neck_coefficients, ratio_lemma_check,
                              regime_of, tail_bound)
from .center_of_mass import (BandSum, BergmanSurrogate, CenterOfMassReport,
                             MuEntry, assemble_energy, band_sum,
                             h_profile_check, make_surrogate, mu_d_band1,
                             mu_fiber, mu_outside, mu_report,
                             three_term_integral, three_term_mass,
                             two_term_integral)

__version__ = "0.1.0"
