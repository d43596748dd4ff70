"""Numerical checks of the gradient estimates, Bochner formula, evolution lemmas and cutoff."""

from .bochner import bochner_residual, bochner_terms, interior_mask
from .constants import EstimateConstants, constants
from .cutoff import CutoffCheck, CutoffProfile, cutoff_build, cutoff_verify
from .gradient import (EstimateReport, hamilton_rhs_bracket, souplet_zhang_rhs_bracket,
                       souplet_zhang_tail, verify_hamilton, verify_souplet_zhang)
from .lemmas import (baseest_ratio, lemma1_residual, lemma2_residual, min_residual,
                     residual_tolerance)

__all__ = [
    "EstimateConstants", "EstimateReport", "CutoffCheck", "CutoffProfile",
    "baseest_ratio", "bochner_residual", "bochner_terms", "constants", "cutoff_build",
    "cutoff_verify", "hamilton_rhs_bracket", "interior_mask", "lemma1_residual",
    "lemma2_residual", "min_residual", "residual_tolerance", "souplet_zhang_rhs_bracket",
    "souplet_zhang_tail", "verify_hamilton", "verify_souplet_zhang",
]
