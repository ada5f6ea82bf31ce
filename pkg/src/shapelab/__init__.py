"""Geometric and probabilistic shaping toolkit for 2-D constellations."""

from .constellation import (Constellation, ConstructionError, FigureReport, fundamental_set,
                            from_json, gray_label_star, is_rotation_invariant, make_cqam_greedy,
                            make_cqam_hybrid, make_cqam_star, make_cqam_two_dist, make_pam,
                            make_square_qam, measure, rotate, stretch, to_json)
from .rates import bcm_mi, capacity, cm_mi_mc, cm_mi_quad, rate_curve, scm_mi, snr_gap
from .shaping import lambda_for_entropy, mb_weights, optimize_lambda_for_mi, optimize_stretch

__all__ = [
    "Constellation", "ConstructionError", "FigureReport", "fundamental_set", "from_json",
    "gray_label_star", "is_rotation_invariant", "make_cqam_greedy", "make_cqam_hybrid",
    "make_cqam_star", "make_cqam_two_dist", "make_pam", "make_square_qam", "measure", "rotate",
    "stretch", "to_json", "bcm_mi", "capacity", "cm_mi_mc", "cm_mi_quad", "rate_curve", "scm_mi",
    "snr_gap", "lambda_for_entropy", "mb_weights", "optimize_lambda_for_mi", "optimize_stretch",
]
__version__ = "0.1.0"
