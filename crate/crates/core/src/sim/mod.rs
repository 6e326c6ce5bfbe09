// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded Monte-Carlo runs of the prepare-and-measure scheme over a
//! Pauli-frame ledger.

mod channel;
mod ledger;
mod protocol;

pub use channel::{
    apply_channel, expected_measurement_ber, expected_measurement_sbmer, prepare_particles,
    ChannelModel, ChannelSampler, Particle,
};
pub use ledger::{
    bit_error_rate, class_symmetry_test, disagreement_rate, estimate_qer, label_counts,
    locc2_ep_round, pec_majority, plurality, sift, EpRoundStats, PecOutcome, QerEstimate,
    Register, SymmetryTest,
};
pub use protocol::{
    fit_class_rates, run_protocol, run_trial, run_trials, transmit_and_sift, trial_rng, Certificate,
    CertificateChoice, Outcome, PecSummary, ProtocolConfig, SimReport, Stage, TestSizeFlags,
};
