"""famakit: outage and multiplexing-gain analysis for fluid-antenna multiple access.

Slow, fast and opportunistic FAMA over Nakagami-m fading with a
block-correlated port model: closed-form/quadrature outage evaluators, a
seeded Monte Carlo oracle, and a CLI that reproduces the standard
performance figures as data files.
"""

__version__ = "0.1.0"

from .analytic import (ConvergenceError, FastParams, OutageEstimate,
                       SystemConfig, db_to_linear, fast_params, g_kernel,
                       linear_to_db, mux_gain, ofama_gain, ofama_gain_approx,
                       op_fast, op_slow_exact, op_slow_quadrature,
                       op_upper_bound)
from .correlation import (BlockStructure, CorrelationSpec, block_partition,
                          constant_structure, jakes_blocks, jakes_matrix,
                          symmetric_eigenvalues)
from .montecarlo import (GainEstimate, McSettings, TrialBatch, estimate_gains,
                         estimate_op, estimate_op_sweep, gains_from_p,
                         sample_trial)
from .specfun import (QuadratureRule, bessel_i_scaled, bessel_j0,
                      gauss_laguerre_rule, laguerre_poly, log_gamma,
                      marcum_q, pochhammer, reg_inc_beta)

__all__ = [
    "__version__",
    "SystemConfig", "FastParams", "OutageEstimate", "ConvergenceError",
    "db_to_linear", "linear_to_db", "g_kernel",
    "op_slow_exact", "op_slow_quadrature", "op_upper_bound", "op_fast",
    "fast_params", "mux_gain", "ofama_gain", "ofama_gain_approx",
    "CorrelationSpec", "BlockStructure", "jakes_matrix", "jakes_blocks",
    "symmetric_eigenvalues", "block_partition", "constant_structure",
    "McSettings", "TrialBatch", "GainEstimate", "sample_trial",
    "estimate_op", "estimate_op_sweep", "estimate_gains", "gains_from_p",
    "QuadratureRule", "bessel_j0", "bessel_i_scaled", "marcum_q",
    "gauss_laguerre_rule", "laguerre_poly", "log_gamma", "pochhammer",
    "reg_inc_beta",
]
