__version__ = "0.1.0"
__author__ = "Scatterflat Contributors"
__description__ = (
    "Scattering matrices, scattering geodesics and flats for SL(2,Z) and "
    "SL(3,Z)"
)

from chambers import (ROOT_DATUM, CartanVector, ChamberQuery, Parabolic,
                      Region, RootDatumA2, classify_point,
                      shifted_chamber_contains, tau_J)
from exactlin import (BruhatFactorization, Permutation, RationalMatrix,
                      SojournVector, UnimodularMatrix, bruhat_cell,
                      bruhat_decompose, bruhat_recompose, killing_norm,
                      sojourn_vector)
from geodesics import (EnumerationTable, GeodesicClass, enumerate_classes,
                       flat_sojourn, guillemin_sum, horoball_crossing_time,
                       sojourn_time_from_matrix)
from poisson import (PeakReport, SpectralSamples, Window, detect_peaks,
                     sample_phi, scan_spectrum, sl3_check, sl3_reduce,
                     sl3_singular_support, windowed_fft)
from scatmat import (ScatteringValue, SpectralParameter3, c_rank1, c_rank2,
                     c_rank2_via_rank1, cocycle_residual,
                     eisenstein_constant_term_check)
from specfun import (EvalOptions, PoleError, f_factor, gamma, log_gamma,
                     omega, zeta)
from verify import VerificationSuite, build_suite

__all__ = [
    "Permutation",
    "RationalMatrix",
    "UnimodularMatrix",
    "BruhatFactorization",
    "SojournVector",
    "bruhat_decompose",
    "bruhat_recompose",
    "bruhat_cell",
    "sojourn_vector",
    "killing_norm",
    "EvalOptions",
    "PoleError",
    "gamma",
    "log_gamma",
    "zeta",
    "omega",
    "f_factor",
    "SpectralParameter3",
    "ScatteringValue",
    "c_rank1",
    "c_rank2",
    "c_rank2_via_rank1",
    "cocycle_residual",
    "eisenstein_constant_term_check",
    "GeodesicClass",
    "EnumerationTable",
    "enumerate_classes",
    "sojourn_time_from_matrix",
    "horoball_crossing_time",
    "guillemin_sum",
    "flat_sojourn",
    "Window",
    "SpectralSamples",
    "PeakReport",
    "sample_phi",
    "windowed_fft",
    "detect_peaks",
    "scan_spectrum",
    "sl3_reduce",
    "sl3_check",
    "sl3_singular_support",
    "CartanVector",
    "RootDatumA2",
    "ROOT_DATUM",
    "Parabolic",
    "Region",
    "ChamberQuery",
    "tau_J",
    "shifted_chamber_contains",
    "classify_point",
    "VerificationSuite",
    "build_suite",
    "__version__",
]
