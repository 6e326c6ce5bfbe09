// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Error-rate distributions, the purification recursion, phase-correction
//! bounds, thresholds and the grouped-qubit attack calculus.

mod attack;
mod bounds;
mod distribution;

pub use attack::{
    attack_calculus, grouped_attack_ber, grouped_attack_interval, per_qubit_q_prime,
    six_state_ber_threshold, AttackReport,
};
pub use bounds::{
    intercept_resend_ceiling, min_repetition_for_phase, pec_bounds, pec_phase_bound, repetition_estimate,
    phase_bound_from_marginal, phase_correctability_margin, qer_estimator, qer_threshold,
    sbmer_qer_ratio_bounds, thresholds, PecBounds, ThresholdTable,
};
pub use distribution::{
    dominance_check, dominance_precondition, DOMINANCE_RESOLUTION, NORMALIZATION_TOLERANCE,
    SYMMETRY_TOLERANCE, ep_closed_form, ep_step, Dominance,
    DistributionKind, ErrorDistribution,
};
