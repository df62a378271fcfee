"""Robust matrix completion with the hybrid ordinary-Welsch (HOW) regularizer."""

__version__ = "0.1.0"

from .matrix import (  # noqa: E402
    NumericError, ShapeError, SvdFactors, fro_inner, fro_norm, project_mask, thin_svd,
)
from .prox import (  # noqa: E402
    HowParams, f_gap, how_loss, phi_numeric, prox_how, prox_l1, prox_welsch, welsch_loss,
)
from .solver import (  # noqa: E402
    KktResiduals, SolveResult, SolveState, SolverConfig, kkt_residuals, nnsr_solve, step,
)
from .svt import ShrinkSpec, matrix_phi_norm, sv_shrink  # noqa: E402
