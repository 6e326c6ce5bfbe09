// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::pauli::{roots_of_unity, ErrorLabel};
use crate::t_operator::EquivClassPartition;

/// Slack allowed on the total mass before construction fails.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Tolerance for the class symmetry of a fresh distribution.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Which invariants a distribution is known to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DistributionKind {
    /// Constant on every equivalence class.
    Fresh,
    /// The result of `rounds` purification steps applied to a fresh
    /// distribution. Only `e_ab = e_{-a,-b}` survives.
    Evolved { rounds: u32 },
    /// No symmetry assumed, e.g. a raw channel before sifting.
    General,
}

/// Rates `e_ab` of the error `X_a Z_b`, stored row-major by `(a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorDistribution {
    field: Field,
    rates: Vec<f64>,
    kind: DistributionKind,
}

fn normalize(mut rates: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(bad) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("rate {bad} is not a nonnegative number")));
    }
    let total: f64 = rates.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("rates sum to {total}, not 1")));
    }
    rates.iter_mut().for_each(|r| *r /= total);
    Ok(rates)
}

impl ErrorDistribution {
    /// Expands one rate per class to all labels. `class_rates[k]` is the
    /// rate of each label in class `k`, not the class total.
    pub fn from_class_rates(
        field: &Field,
        partition: &EquivClassPartition,
        class_rates: &[f64],
    ) -> Result<Self> {
        if partition.field_size() != field.size() {
            return Err(Error::FieldMismatch {
                left: partition.field_size(),
                right: field.size(),
            });
        }
        if class_rates.len() != partition.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} class rates for {} classes",
                class_rates.len(),
                partition.len()
            )));
        }
        let rates = partition
            .class_table()
            .iter()
            .map(|&k| class_rates[k])
            .collect();
        Ok(ErrorDistribution {
            field: field.clone(),
            rates: normalize(rates)?,
            kind: DistributionKind::Fresh,
        })
    }

    /// The extremal shape: `e_00` on the identity and `(1 - e_00)/(N + 1)` on
    /// each label equivalent to `(0, 1)`.
    pub fn worst_case(field: &Field, partition: &EquivClassPartition, e00: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&e00) {
            return Err(Error::OutOfRange(format!("e00 = {e00}")));
        }
        let target = partition.class_of(ErrorLabel::new(field.zero(), field.one()));
        let mut class_rates = vec![0.0; partition.len()];
        class_rates[0] = e00;
        class_rates[target] = (1.0 - e00) / (field.size() + 1) as f64;
        Self::from_class_rates(field, partition, &class_rates)
    }

    /// Rates with no symmetry requirement.
    pub fn general(field: &Field, rates: Vec<f64>) -> Result<Self> {
        let n = field.size() as usize;
        if rates.len() != n * n {
            return Err(Error::InvalidDistribution(format!(
                "{} rates for {} labels",
                rates.len(),
                n * n
            )));
        }
        Ok(ErrorDistribution {
            field: field.clone(),
            rates: normalize(rates)?,
            kind: DistributionKind::General,
        })
    }

    /// Like [`ErrorDistribution::general`] but additionally checks the class
    /// symmetry and marks the result fresh.
    pub fn symmetric(field: &Field, partition: &EquivClassPartition, rates: Vec<f64>) -> Result<Self> {
        let mut d = Self::general(field, rates)?;
        for class in partition.classes() {
            let first = d.rate(class[0]);
            for &l in class {
                if (d.rate(l) - first).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidDistribution(format!(
                        "rates of {} and {} differ",
                        class[0], l
                    )));
                }
            }
        }
        d.kind = DistributionKind::Fresh;
        Ok(d)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate(&self, l: ErrorLabel) -> f64 {
        self.rates[l.index(self.field.size())]
    }

    pub fn e00(&self) -> f64 {
        self.rates[0]
    }

    /// Total error rate `1 - e_00`.
    pub fn qer(&self) -> f64 {
        1.0 - self.e00()
    }

    /// `Σ_j e_aj`.
    pub fn row_sum(&self, a: usize) -> f64 {
        let n = self.field.size() as usize;
        self.rates[a * n..(a + 1) * n].iter().sum()
    }

    /// Probability that the standard-basis values disagree, `Σ_{a≠0} Σ_j e_aj`.
    pub fn spin_rate(&self) -> f64 {
        1.0 - self.row_sum(0)
    }

    /// `e_{Z_b} = Σ_i e_ib`.
    pub fn phase_marginal(&self) -> Vec<f64> {
        let n = self.field.size() as usize;
        (0..n)
            .map(|b| (0..n).map(|a| self.rates[a * n + b]).sum())
            .collect()
    }

    /// Probability of a nonzero phase component.
    pub fn phase_rate(&self) -> f64 {
        1.0 - self.phase_marginal()[0]
    }

    /// Survival probability of one purification round, `Σ_i (Σ_j e_ij)²`.
    pub fn ep_survival(&self) -> f64 {
        (0..self.field.size() as usize)
            .map(|a| self.row_sum(a).powi(2))
            .sum()
    }

    /// Largest `|e_ab - e_{-a,-b}|`.
    pub fn central_asymmetry(&self) -> f64 {
        let f = &self.field;
        let n = f.size();
        let mut worst: f64 = 0.0;
        for i in 0..(n * n) as usize {
            let l = ErrorLabel::from_index(f, i);
            let m = ErrorLabel::new(f.neg(l.a), f.neg(l.b));
            worst = worst.max((self.rates[i] - self.rates[m.index(n)]).abs());
        }
        worst
    }

    /// Largest spread of rates inside one class.
    pub fn class_asymmetry(&self, partition: &EquivClassPartition) -> f64 {
        partition
            .classes()
            .iter()
            .map(|c| {
                let v: Vec<f64> = c.iter().map(|&l| self.rate(l)).collect();
                let hi = v.iter().copied().fold(f64::MIN, f64::max);
                let lo = v.iter().copied().fold(f64::MAX, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    fn evolved(&self, rates: Vec<f64>, rounds: u32) -> ErrorDistribution {
        let kind = match self.kind {
            DistributionKind::General => DistributionKind::General,
            DistributionKind::Fresh => DistributionKind::Evolved { rounds },
            DistributionKind::Evolved { rounds: r } => DistributionKind::Evolved { rounds: r + rounds },
        };
        ErrorDistribution {
            field: self.field.clone(),
            rates,
            kind,
        }
    }
}

/// One round of two-way purification:
/// `e'_ab = Σ_c e_ac e_{a,b-c} / Σ_i (Σ_j e_ij)²`.
pub fn ep_step(d: &ErrorDistribution) -> Result<ErrorDistribution> {
    let f = d.field();
    let n = f.size() as usize;
    let denom = d.ep_survival();
    if !(denom > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        let row = &d.rates[a * n..(a + 1) * n];
        for c in f.elements() {
            let x = row[c.index() as usize];
            if x == 0.0 {
                continue;
            }
            for e in f.elements() {
                // b = c + e
                out[a * n + f.add(c, e).index() as usize] += x * row[e.index() as usize];
            }
        }
    }
    out.iter_mut().for_each(|x| *x /= denom);
    Ok(d.evolved(out, 1))
}

/// `k` rounds of [`ep_step`] in closed form.
///
/// With `F_a(m) = Σ_j e_aj χ_m(j)` for the additive characters
/// `χ_m(j) = ω_p^{Σ_i m_i j_i}` of GF(p)^n,
/// `e^k_ab = Re Σ_m conj(χ_m(b)) F_a(m)^{2^k} / (N Σ_i F_i(0)^{2^k})`.
pub fn ep_closed_form(d: &ErrorDistribution, k: u32) -> Result<ErrorDistribution> {
    if k == 0 {
        return Ok(d.clone());
    }
    let f = d.field();
    let n = f.size() as usize;
    let roots = roots_of_unity(f.p());
    let chi = |m: usize, j: usize| roots[f.coeff_dot(f.element(m as u32).unwrap(), f.element(j as u32).unwrap()) as usize];
    // A common scale keeps the 2^k-th powers representable.
    let scale = (0..n).map(|a| d.row_sum(a)).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    let char_table: Vec<Complex64> = (0..n * n).map(|i| chi(i / n, i % n)).collect();
    let mut powered = vec![Complex64::new(0.0, 0.0); n * n];
    let mut denom = 0.0;
    for a in 0..n {
        let row = &d.rates[a * n..(a + 1) * n];
        for m in 0..n {
            let mut z: Complex64 = row
                .iter()
                .enumerate()
                .map(|(j, &e)| char_table[m * n + j] * (e / scale))
                .sum();
            for _ in 0..k {
                z = z * z;
            }
            powered[a * n + m] = z;
        }
        denom += powered[a * n].re;
    }
    if !(denom > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let s: Complex64 = (0..n)
                .map(|m| char_table[m * n + b].conj() * powered[a * n + m])
                .sum();
            out[a * n + b] = (s.re / (n as f64 * denom)).max(0.0);
        }
    }
    Ok(d.evolved(out, k))
}

/// Outcome of [`dominance_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum Dominance {
    /// `e_00 > e_0b` for every `b ≠ 0` after each of the checked rounds.
    Holds { rounds_checked: u32 },
    /// The comparison failed after `round` rounds at phase label `b`.
    Fails { round: u32, b: u32 },
    /// The sufficient condition on `e_00` is not met, so nothing is claimed.
    Indeterminate { reason: String },
}

impl Dominance {
    pub fn holds(&self) -> bool {
        matches!(self, Dominance::Holds { .. })
    }
}

/// The sufficient condition on `e_00`: `e_00 > 1/(N+2)` for `p = 2`,
/// `e_00 > 2/(N+3)` otherwise.
pub fn dominance_precondition(field: &Field, e00: f64) -> bool {
    let n = field.size() as f64;
    if field.p() == 2 {
        e00 > 1.0 / (n + 2.0)
    } else {
        e00 > 2.0 / (n + 3.0)
    }
}

pub const DOMINANCE_RESOLUTION: f64 = 1e-12;

/// Iterates [`ep_step`] up to `max_rounds` times and checks that `e_00`
/// stays strictly above every `e_0b`, `b ≠ 0`. Once the two agree to within
/// [`DOMINANCE_RESOLUTION`] (relative) the check stops with
/// [`Dominance::Indeterminate`], since f64 can no longer order them.
pub fn dominance_check(d: &ErrorDistribution, max_rounds: u32) -> Result<Dominance> {
    let f = d.field();
    if !dominance_precondition(f, d.e00()) {
        let bound = if f.p() == 2 { "1/(N+2)" } else { "2/(N+3)" };
        return Ok(Dominance::Indeterminate {
            reason: format!("e00 = {} does not exceed {bound}", d.e00()),
        });
    }
    let n = f.size() as usize;
    let mut cur = d.clone();
    for round in 1..=max_rounds {
        cur = ep_step(&cur)?;
        let e00 = cur.rates[0];
        let tol = DOMINANCE_RESOLUTION * e00;
        if let Some(b) = (1..n).find(|&b| cur.rates[b] > e00 + tol) {
            return Ok(Dominance::Fails {
                round,
                b: b as u32,
            });
        }
        if let Some(b) = (1..n).find(|&b| e00 - cur.rates[b] <= tol) {
            return Ok(Dominance::Indeterminate {
                reason: format!("e00 and e0{b} agree to machine precision after round {round}"),
            });
        }
    }
    Ok(Dominance::Holds {
        rounds_checked: max_rounds,
    })
}
