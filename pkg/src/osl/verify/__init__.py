"""Numerical instantiation of the mixed weak-type bounds and of the auxiliary lemmas."""
from .constants import (ConstantsConfig, WeightProfile, bteth_formula, proof_gamma, teth_formula,
                        thm1_constant, thm1_formula, thm2_constant, thm2_formula, thm3_constant,
                        thm3_formula, thm_homogeneous_constant, weight_profile)
from .lemmas import (bmo_reduction_check, crr_lemma2_check, crr_lemma3_check, crr_lemma4_check, cuenta_check,
                     lemma1_sweep, lemma_sum_bound, prom_a_check, reabsorption_check,
                     rhs_rho_check, run_lemma_suite, stopping_split)
from .mixed import (MixedWeakReport, TheoremSetup, calibration_corpus, check_mixed_inequality,
                    fit_budget, heldout_corpus, heldout_ratios, mixed_weak_lhs,
                    parse_lambda_grid, phi_rho, sup_ratio_exact, theorem_setup)
