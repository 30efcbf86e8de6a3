"""Discretization fluctuations of the empirical correlation of Brownian and
fractional Brownian paths: functionals, limit constants, test statistics and
a Monte Carlo harness."""

from .core import (DegeneratePath, GridError, ModelKind, ModelSpec,
                   NonDivisibleDecimation, PathCorrError, SampledPath,
                   SampledPathPair, UniformGrid, decimate, dump_pair, load_pair,
                   read_pair, save_pair)
from .functionals import (BiasVector, FunctionalTriple, NegativeDiscriminant,
                          bias_vector_continuous, bias_vector_discrete,
                          correlation, discrete_triple, fine_triple, grad_F,
                          sigma_continuous, sigma_discrete)
from .constants import (LimitConstants, QuadratureConfig, QuadratureError,
                        bm_constants, limit_constants, lower_bound, r2_remainder,
                        sigma_h_d, sigma_h_d_sq, sigma_h_sq_via_lemma,
                        sigma_h_sq_via_simplified)
from .simulate import (EmbeddingFailure, GeneratorConfig, InvalidR, Method,
                       fgn_autocov, sample_pair, simulate, split_stream,
                       standard_normals)
from .inference import (Mode, TestConfig, TestReport, p_value, run_test,
                        z_continuous_bm, z_continuous_fbm, z_discrete_bm,
                        z_discrete_fbm)
from .montecarlo import (McConfig, McSummary, chi_square_normal, export_summary,
                         parse_summary_csv, rate_study, run_mc)

__version__ = "0.1.0"
