"""
Penalized solvers for the coefficient and inverse covariance steps
"""

from mcvar.solvers.admm import AdmmOptions, AdmmResult, admm_fgl
from mcvar.solvers.prox import eigen_theta_update, fused_prox_k, soft_threshold
from mcvar.solvers.spg import SpgOptions, SpgResult, spg_fit

__all__ = [
    "AdmmOptions",
    "AdmmResult",
    "SpgOptions",
    "SpgResult",
    "admm_fgl",
    "eigen_theta_update",
    "fused_prox_k",
    "soft_threshold",
    "spg_fit",
]
