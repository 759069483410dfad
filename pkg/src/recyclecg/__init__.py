"""Recycled-subspace acceleration of PCG for sequences of SPD systems sharing one matrix."""

from .condest import CondEstimate, pcg_with_condest
from .cost_model import CostParams, compare_measured, gamma_sciccg, t_cg, t_iccg, t_sciccg
from .dense import chol_factor, chol_solve, mgs_orthonormalize, sym_eig, tall_apply, tall_t_apply
from .driver import RunConfig, SequenceReport, emit_reports, make_rhs, run_sequence
from .errors import ICBreakdown, MatrixMarketError, NotSPDError, SolverBreakdown
from .krylov import SolveReport, SolverConfig, deflated_pcg_solve, pcg_solve
from .precond import IcFactor, ScOperator, ic0_factorize, ic_apply, make_sc_operator, sc_apply
from .recycling import (DeflationOperator, RitzSpectrum, SamplerA, SamplerB, build_aux_matrix,
                        build_deflation_operator, harvest_errors, harvest_residuals,
                        make_sampler, rayleigh_ritz)
from .sparse import (CsrMatrix, diagonal_scale, gen_laplacian_2d, parse_matrix_market,
                     read_matrix_market, spmv, spmv_dual, write_matrix_market)

__version__ = "0.1.0"
