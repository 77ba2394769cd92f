"""Numerical toolkit for the noncommutative unit ball: Fock space models, free power
series, row contractions, ball automorphisms, Poisson kernels and characteristic functions."""

from .charfun import (CharFunction, CurvatureReport, arveson_curvature, char_boundary, char_eval,
                      curvature_report, defect_kernel_identity, factorization_defect, inner_defect)
from .errors import (ConfigInvalid, ContractViolation, DomainViolation, IllConditioned, InputInvalid, NCBallError,
                     NegativeSpectrum, NoConvergence, NotCommuting, NotHermitian, NotRowIsometry, RangeViolation,
                     ShapeMismatch, UnknownSuite)
from .fock import RationalVector, TruncatedFock, rational_gram
from .mobius import (BallAutomorphism, compose_autos, extend_automorphism, gleason_factorization, invert,
                     recover_normal_form, schwarz_pick_defect)
from .opmodel import RowContraction, defects, minimal_isometric_dilation, wold_decomposition
from .poisson import poisson_kernel, poisson_transform_series, transform_monomial, voiculescu_check
from .series import FreeSeries, compose, extract_coefficients, hadamard_radius, sup_norm_estimate
from .suites import SuiteConfig, SuiteReport, run_suite

__version__ = "0.1.0"
