"""Reduction of generalized Langevin dynamics to coordinate-only stochastic models."""

__version__ = "0.1.0"

from .errors import (DomainError, EmbeddingError, FDTConstructionError, FitDegeneracyError,
                     Gle2bdError, InversionError, MomentPrecisionError, NoBDLimitError,
                     NumericalError, SimulationError, StabilityError, TimeStepError,
                     ValidationError)
from .kernels import (ForceField, KernelSpec, ad_kernel, bessel_j1, block_diag_kernel,
                      chi_closed_form, kernel_from_name, kernel_moments, langevin_kernel,
                      linear_field, morse_field, morse_force, morse_potential,
                      tabulated_kernel, theta_laplace_ad, theta_laplace_chain, theta_time,
                      zero_field)
from .laplace import (InversionConfig, KernelCurve, bromwich_chi, chi_infinity, chi_laplace,
                      closed_form_chi_curve, exact_chi_curve, invert_laplace)
from .reduction import (ExtendedSystem, RationalApproximation, approx_kernel_curve,
                        approx_kernel_eval, build_extended_system, delta_kernel_curve,
                        fit_order, verify_fdt)
from .simulators import (ChainConfig, SimConfig, TrajectoryEnsemble, sample_stationary_gaussian,
                         simulate_bd, simulate_chain, simulate_embedded, simulate_nonlocal)
from .analysis import (CorrelationSeries, autocorrelation, correlation_error,
                       equilibrium_stats, kernel_error, two_time_covariance)

__all__ = [name for name in dir() if not name.startswith("_")]
