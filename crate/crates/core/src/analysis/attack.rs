// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::analysis::{intercept_resend_ceiling, thresholds};
use crate::error::{Error, Result};

/// Tolerable BER of the best known qubit prepare-and-measure schemes,
/// `(5 - √5)/10`.
pub fn six_state_ber_threshold() -> f64 {
    (5.0 - 5f64.sqrt()) / 10.0
}

/// Interval of `q` for which the grouped attack breaks every qubit scheme
/// but is tolerated at `N = 16`: `((3/10)(5-√5), (68/1335)(19-√5))`.
pub fn grouped_attack_interval() -> (f64, f64) {
    let s5 = 5f64.sqrt();
    (0.3 * (5.0 - s5), 68.0 / 1335.0 * (19.0 - s5))
}

/// Per-qubit measurement probability `q' = 1 - ((43 + 68√5)/1335)^{1/4}`.
pub fn per_qubit_q_prime() -> f64 {
    1.0 - ((43.0 + 68.0 * 5f64.sqrt()) / 1335.0).powf(0.25)
}

/// `q(N-1)(Nn+2) / (2Nn(N+1))` for `N = 2^n`.
pub fn grouped_attack_ber(n_dim: u32, q: f64) -> f64 {
    let n = n_dim as f64;
    let bits = n_dim.trailing_zeros() as f64;
    q * (n - 1.0) * (n * bits + 2.0) / (2.0 * n * bits * (n + 1.0))
}

/// Closed-form consequences of measuring whole groups of `n` qubits with
/// probability `q`, and of the per-qubit variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub n_dim: u32,
    pub bits: u32,
    pub q: f64,
    /// Induced BER at this `N`.
    pub ber_eve: f64,
    pub ber_eve_2: f64,
    pub ber_eve_16: f64,
    /// Induced SBMER `q(N-1)/(N+1)`.
    pub sbmer_eve: f64,
    pub q_interval: (f64, f64),
    pub q_in_interval: bool,
    /// SBMER of measuring every particle, `(N-1)/(N+1)`.
    pub intercept_resend_ceiling: f64,
    pub per_qubit_q_prime: f64,
    pub per_qubit_six_state_ber: f64,
    pub per_qubit_ber_16: f64,
    pub six_state_threshold: f64,
    pub ber_threshold_16: f64,
    /// `ber_eve_2 > (5 - √5)/10`.
    pub defeats_qubit_schemes: bool,
    /// `ber_eve_16 < e_BER(16)`.
    pub tolerated_at_16: bool,
    /// The per-qubit attack reaches `e_BER(16)`.
    pub per_qubit_defeats_16: bool,
}

pub fn attack_calculus(n_dim: u32, q: f64) -> Result<AttackReport> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::OutOfRange(format!("attack probability q = {q}")));
    }
    if !(n_dim >= 2 && n_dim.is_power_of_two()) {
        return Err(Error::Unsupported(format!(
            "grouped attack requires characteristic 2 (N = {n_dim})"
        )));
    }
    let interval = grouped_attack_interval();
    let qp = per_qubit_q_prime();
    let e16 = thresholds(16)?.e_ber;
    let six = six_state_ber_threshold();
    let ber_eve_2 = grouped_attack_ber(2, q);
    let ber_eve_16 = grouped_attack_ber(16, q);
    let per_qubit_ber_16 = grouped_attack_ber(16, 1.0 - (1.0 - qp).powi(4));
    let nf = n_dim as f64;
    Ok(AttackReport {
        n_dim,
        bits: n_dim.trailing_zeros(),
        q,
        ber_eve: grouped_attack_ber(n_dim, q),
        ber_eve_2,
        ber_eve_16,
        sbmer_eve: q * (nf - 1.0) / (nf + 1.0),
        q_interval: interval,
        q_in_interval: interval.0 < q && q < interval.1,
        intercept_resend_ceiling: intercept_resend_ceiling(2, n_dim),
        per_qubit_q_prime: qp,
        per_qubit_six_state_ber: qp / 3.0,
        per_qubit_ber_16,
        six_state_threshold: six,
        ber_threshold_16: e16,
        defeats_qubit_schemes: ber_eve_2 > six,
        tolerated_at_16: ber_eve_16 < e16,
        per_qubit_defeats_16: per_qubit_ber_16 >= e16 - 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let (lo, hi) = grouped_attack_interval();
        assert!((lo - 0.8292).abs() < 1e-4);
        assert!((hi - 0.8539).abs() < 1e-4);
        assert!((per_qubit_q_prime() - 0.3817).abs() < 1e-4);
        assert!((six_state_ber_threshold() - 0.2764).abs() < 1e-4);
    }

    #[test]
    fn inside_the_interval() {
        let r = attack_calculus(16, 0.84).unwrap();
        assert!(r.q_in_interval);
        assert!((r.ber_eve_2 - 0.28).abs() < 1e-12);
        assert!(r.defeats_qubit_schemes);
        assert!(r.ber_eve_16 < 0.3885);
        assert!(r.tolerated_at_16);
        assert!((r.per_qubit_six_state_ber - 0.1272).abs() < 1e-4);
        let exact = 33.0 * (19.0 - 5f64.sqrt()) / 1424.0;
        assert!((r.per_qubit_ber_16 - exact).abs() < 1e-12);
        assert!(r.per_qubit_defeats_16);
        // the interval endpoints are exactly where the two verdicts flip
        let lo = attack_calculus(2, r.q_interval.0).unwrap();
        assert!((lo.ber_eve_2 - lo.six_state_threshold).abs() < 1e-12);
        let hi = attack_calculus(2, r.q_interval.1).unwrap();
        assert!((hi.ber_eve_16 - hi.ber_threshold_16).abs() < 1e-12);
    }

    #[test]
    fn trivial_and_invalid() {
        let r = attack_calculus(4, 0.0).unwrap();
        assert_eq!((r.ber_eve, r.ber_eve_2, r.ber_eve_16, r.sbmer_eve), (0.0, 0.0, 0.0, 0.0));
        let r = attack_calculus(4, 1.0).unwrap();
        assert!((r.intercept_resend_ceiling - 0.6).abs() < 1e-15);
        assert!((r.sbmer_eve - 0.6).abs() < 1e-15);
        assert!(attack_calculus(4, 1.5).is_err());
        assert!(attack_calculus(3, 0.5).is_err());
    }
}
