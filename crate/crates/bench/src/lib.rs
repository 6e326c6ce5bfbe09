// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use qudit_qkd_core::sim::{transmit_and_sift, trial_rng, ChannelModel, Register};
use qudit_qkd_core::t_operator::{choose_m, find_char_poly, m_powers};
use qudit_qkd_core::Field;

/// `(p, n)` of every field the operator benchmarks cover.
pub const SIZES: [(u32, u32); 4] = [(2, 2), (3, 2), (2, 3), (2, 4)];

pub fn field(p: u32, n: u32) -> Field {
    Field::new(p, n).expect("valid field")
}

/// Sifted registers of all sets pooled, for `particles` sent through a
/// depolarizing channel with rate `qer`.
pub fn sifted_registers(field: &Field, particles: u64, qer: f64, seed: u64) -> Vec<Register> {
    let params = choose_m(field, find_char_poly(field).expect("char poly")).expect("M");
    let powers = m_powers(field, &params);
    let channel = ChannelModel::depolarizing(field, qer).expect("channel");
    let mut rng = trial_rng(seed, 0);
    transmit_and_sift(field, &powers, particles, &channel, &mut rng)
        .expect("sift")
        .into_iter()
        .flatten()
        .collect()
}
