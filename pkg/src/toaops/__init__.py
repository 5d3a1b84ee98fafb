"""Time-of-arrival operators for separable potentials.

Kernel factors (Weyl, supraquantized closed form, power series, quantum
corrections), the coarse-grained operator and its spectrum, and split-step
evolution of its eigenfunctions.
"""

from . import _backend
from .errors import (ConfigError, ConvergenceError, DepthError, DomainError,
                     NumericInstabilityError, SelectionError, ToaError)
from .evolution import (ArrivalMetrics, DynamicsReport, PropagatorConfig, SplitStepper, WavePacket,
                        arrival_metrics, embed, gaussian_packet, propagate)
from .kernels import (KernelEvalConfig, KernelEvaluator, NonArrival, SeriesConfig, classical_toa,
                      correction_tn, series_orders, series_tkf, series_tkf_array, supra_tkf,
                      supra_tkf_double, tke_residual, weyl_tkf)
from .operator import (EigenMode, ToaMatrix, build_matrix, classified_spectrum, classify, interpolate,
                       parity_partner_check, select_mode, spectrum)
from .potentials import (CATALOG_NAMES, Potential, catalog_lookup, catalog_params, separability_residual,
                         taylor_coefficients, theorem1_check, theorem2_test)
from .specialfn import QuadRule, barycentric_weights, gauss_legendre, hyp0f1

BACKEND = _backend.NAME
__version__ = "0.1.0"
