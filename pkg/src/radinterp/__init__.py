"""Rearrangements, r.i. norms and K-functionals for Rademacher sums."""

from .core import (
    HALF_LINE,
    UNIT,
    ConcaveFn,
    StepFunction,
    dyadic_average,
    head_integral,
    rearrange_sequence,
    rearrange_step,
    seq_dilation,
    unit_average,
)
from .experiments import EquivalenceReport, ExperimentConfig, emit_report, run_experiment
from .interp import dilation_function, dilation_indices, gen_marcinkiewicz_norm, kmethod_norm, phi_rho, realize_kfunctional
from .kfunc import (
    KCurve,
    k_l1_l2_fun,
    k_l1_l2_seq,
    k_l1_linf_fun,
    k_linf_G,
    k_linf_lq,
    k_marcinkiewicz_pair,
    k_oracle,
)
from .norms import (
    LatticeParam,
    lattice_norm,
    lorentz_norm,
    lp_norm,
    marcinkiewicz_norm,
    orlicz_luxemburg_norm,
    seq_l1log_norm,
    seq_lorentz_rp_norm,
)
from .rademacher import (
    Distribution,
    MontgomeryReport,
    RademacherSum,
    holmstedt_phi,
    montgomery_smith_min_A,
    sample_monte_carlo,
    synthesize_exact,
    tail_probability,
)

__version__ = "0.1.0"
