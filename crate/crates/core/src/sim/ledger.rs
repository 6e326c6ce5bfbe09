// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Classical Pauli-frame ledger: every retained register carries Alice's
//! value, Bob's value and the hidden error label that explains their
//! difference.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analysis::qer_estimator;
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::pauli::ErrorLabel;
use crate::t_operator::{apply_m, EquivClassPartition};

use super::channel::Particle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub alice: FieldElement,
    pub bob: FieldElement,
    pub label: ErrorLabel,
    /// Index `i` of the set `S_i`, i.e. the shared power of `T`.
    pub set: u32,
}

impl Register {
    /// Bob's value equals Alice's value plus the spin part of the label.
    pub fn is_consistent(&self, field: &Field) -> bool {
        self.bob == field.add(self.alice, self.label.a)
    }
}

fn debug_check(field: &Field, regs: &[Register]) {
    debug_assert!(regs.iter().all(|r| r.is_consistent(field)), "ledger out of sync");
}

/// Keeps the particles whose powers match. The surviving label is the raw
/// label conjugated by `T^{-i}`, i.e. `M^{-i}·raw`, taken from the table
/// `powers[k] = M^k`.
pub fn sift(
    field: &Field,
    powers: &[[FieldElement; 4]],
    particles: &[Particle],
    raw: &[ErrorLabel],
) -> Result<Vec<Vec<Register>>> {
    let sets = field.size() as usize + 1;
    if powers.len() != sets {
        return Err(Error::Precondition(format!(
            "expected {sets} powers of M, got {}",
            powers.len()
        )));
    }
    if particles.len() != raw.len() {
        return Err(Error::Precondition("one raw label per particle".into()));
    }
    let mut out = vec![Vec::new(); sets];
    for (pt, &l) in particles.iter().zip(raw) {
        if pt.alice_power != pt.bob_power {
            continue;
        }
        let i = pt.alice_power as usize;
        let label = apply_m(field, &powers[(sets - i) % sets], l);
        out[i].push(Register {
            alice: pt.value,
            bob: field.add(pt.value, label.a),
            label,
            set: i as u32,
        });
    }
    Ok(out)
}

/// Result of the public comparison of test registers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QerEstimate {
    pub tested: Vec<u64>,
    pub disagreements: Vec<u64>,
    pub e_hat: Vec<f64>,
    pub qer: f64,
    pub abort_threshold: f64,
    pub abort: bool,
    /// Pooled counts of the revealed differences `bob - alice`, indexed by
    /// field element.
    pub difference_counts: Vec<u64>,
}

/// Reveals `test_count` random registers from every set and removes them.
/// Aborts when `Σ ê_i / N` exceeds `abort_threshold`.
pub fn estimate_qer<R: Rng + ?Sized>(
    field: &Field,
    sets: &mut [Vec<Register>],
    test_count: usize,
    abort_threshold: f64,
    rng: &mut R,
) -> Result<QerEstimate> {
    if let Some((i, s)) = sets.iter().enumerate().find(|(_, s)| s.len() < test_count) {
        return Err(Error::InsufficientParticles {
            set: i,
            available: s.len(),
            requested: test_count,
        });
    }
    let n = field.size() as usize;
    let mut diffs = vec![0u64; n];
    let mut tested = Vec::with_capacity(sets.len());
    let mut disagreements = Vec::with_capacity(sets.len());
    for set in sets.iter_mut() {
        let keep = set.len() - test_count;
        // partial_shuffle moves a uniform sample to the tail
        set.partial_shuffle(rng, test_count);
        let mut bad = 0;
        for r in set.drain(keep..) {
            let d = field.sub(r.bob, r.alice);
            diffs[d.index() as usize] += 1;
            if !d.is_zero() {
                bad += 1;
            }
        }
        tested.push(test_count as u64);
        disagreements.push(bad);
    }
    let e_hat: Vec<f64> = if test_count == 0 {
        vec![0.0; sets.len()]
    } else {
        disagreements.iter().map(|&b| b as f64 / test_count as f64).collect()
    };
    let qer = qer_estimator(&e_hat)?;
    Ok(QerEstimate {
        tested,
        disagreements,
        e_hat,
        qer,
        abort_threshold,
        abort: qer > abort_threshold,
        difference_counts: diffs,
    })
}

/// Statistics of one purification round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpRoundStats {
    pub pairs: u64,
    pub survivors: u64,
    /// Label counts of the survivors, indexed by [`ErrorLabel::index`].
    pub label_counts: Vec<u64>,
}

/// One round of two-way purification on the ledger. Registers are paired
/// at random; the pair is kept when the announced differences
/// `s1 - s2` of Alice and Bob agree, which happens exactly when both spin
/// errors are equal. The control survives with label `(a, b + b')`. An odd
/// leftover register is dropped.
pub fn locc2_ep_round<R: Rng + ?Sized>(
    field: &Field,
    mut registers: Vec<Register>,
    rng: &mut R,
) -> Result<(Vec<Register>, EpRoundStats)> {
    if registers.len() < 2 {
        return Err(Error::InsufficientRegisters {
            r: 2,
            available: registers.len(),
        });
    }
    debug_check(field, &registers);
    registers.shuffle(rng);
    let n = field.size();
    let mut counts = vec![0u64; (n * n) as usize];
    let mut out = Vec::with_capacity(registers.len() / 4);
    for pair in registers.chunks_exact(2) {
        let (c, t) = (pair[0], pair[1]);
        let alice = field.sub(c.alice, t.alice);
        let bob = field.sub(c.bob, t.bob);
        debug_assert_eq!(alice == bob, c.label.a == t.label.a);
        if alice != bob {
            continue;
        }
        let label = ErrorLabel::new(c.label.a, field.add(c.label.b, t.label.b));
        counts[label.index(n)] += 1;
        out.push(Register { label, ..c });
    }
    let stats = EpRoundStats {
        pairs: (registers.len() / 2) as u64,
        survivors: out.len() as u64,
        label_counts: counts,
    };
    Ok((out, stats))
}

/// Plurality of `values`, ties broken toward 0 and then toward the smallest
/// index.
pub fn plurality(field: &Field, values: impl IntoIterator<Item = FieldElement>) -> FieldElement {
    let mut counts = vec![0u32; field.size() as usize];
    for v in values {
        counts[v.index() as usize] += 1;
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    let idx = counts.iter().position(|&c| c == max).unwrap_or(0);
    field.element(idx as u32).expect("in range")
}

/// Output of the majority-vote phase correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PecOutcome {
    pub r: u32,
    pub alice_key: Vec<FieldElement>,
    pub bob_key: Vec<FieldElement>,
    /// `(Σ a_i, plurality of b_i)` per group.
    pub residual: Vec<ErrorLabel>,
    /// Fraction of the grouped registers with a spin error.
    pub pre_spin_rate: f64,
    pub spin_residual_rate: f64,
    pub phase_residual_rate: f64,
    pub mismatches: u64,
}

impl PecOutcome {
    pub fn key_length(&self) -> usize {
        self.alice_key.len()
    }
}

/// Sums consecutive groups of `r` registers into key digits. Registers past
/// the last full group are dropped.
pub fn pec_majority(field: &Field, registers: &[Register], r: u32) -> Result<PecOutcome> {
    if r == 0 || r.is_multiple_of(2) {
        return Err(Error::Precondition(format!("repetition length {r} must be odd")));
    }
    if (r as usize) > registers.len() {
        return Err(Error::InsufficientRegisters {
            r: r as usize,
            available: registers.len(),
        });
    }
    debug_check(field, registers);
    let groups = registers.len() / r as usize;
    let used = &registers[..groups * r as usize];
    let mut alice_key = Vec::with_capacity(groups);
    let mut bob_key = Vec::with_capacity(groups);
    let mut residual = Vec::with_capacity(groups);
    for g in used.chunks_exact(r as usize) {
        let sum = |f: &dyn Fn(&Register) -> FieldElement| {
            g.iter().fold(FieldElement::ZERO, |acc, x| field.add(acc, f(x)))
        };
        let a = sum(&|x| x.label.a);
        alice_key.push(sum(&|x| x.alice));
        bob_key.push(sum(&|x| x.bob));
        residual.push(ErrorLabel::new(a, plurality(field, g.iter().map(|x| x.label.b))));
    }
    let mismatches = alice_key.iter().zip(&bob_key).filter(|(x, y)| x != y).count() as u64;
    let spin = residual.iter().filter(|l| !l.a.is_zero()).count();
    debug_assert_eq!(spin as u64, mismatches);
    let phase = residual.iter().filter(|l| !l.b.is_zero()).count();
    let pre = used.iter().filter(|x| !x.label.a.is_zero()).count();
    Ok(PecOutcome {
        r,
        alice_key,
        bob_key,
        residual,
        pre_spin_rate: pre as f64 / used.len() as f64,
        spin_residual_rate: spin as f64 / groups as f64,
        phase_residual_rate: phase as f64 / groups as f64,
        mismatches,
    })
}

/// Label counts indexed by [`ErrorLabel::index`].
pub fn label_counts<'a>(field: &Field, regs: impl IntoIterator<Item = &'a Register>) -> Vec<u64> {
    let n = field.size();
    let mut out = vec![0u64; (n * n) as usize];
    for r in regs {
        out[r.label.index(n)] += 1;
    }
    out
}

/// Fraction of registers whose two values differ.
pub fn disagreement_rate<'a>(regs: impl IntoIterator<Item = &'a Register>) -> f64 {
    let (mut bad, mut total) = (0usize, 0usize);
    for r in regs {
        total += 1;
        if r.alice != r.bob {
            bad += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        bad as f64 / total as f64
    }
}

/// Bit error rate for `p = 2`: mean fraction of the `n` bits of a value that
/// differ.
pub fn bit_error_rate<'a>(field: &Field, regs: impl IntoIterator<Item = &'a Register>) -> f64 {
    let (mut bits, mut total) = (0u64, 0u64);
    for r in regs {
        total += 1;
        bits += field.sub(r.bob, r.alice).index().count_ones() as u64;
    }
    if total == 0 {
        0.0
    } else {
        bits as f64 / (total as f64 * field.degree() as f64)
    }
}

/// Chi-square test that labels in the same class are equally frequent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTest {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
}

impl SymmetryTest {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Classes without any observation contribute nothing.
pub fn class_symmetry_test(partition: &EquivClassPartition, counts: &[u64]) -> Result<SymmetryTest> {
    let n = partition.field_size();
    if counts.len() != (n * n) as usize {
        return Err(Error::Precondition(format!(
            "expected {} label counts, got {}",
            n * n,
            counts.len()
        )));
    }
    let (mut stat, mut dof) = (0.0, 0u32);
    for class in partition.classes() {
        let total: u64 = class.iter().map(|l| counts[l.index(n)]).sum();
        if total == 0 || class.len() < 2 {
            continue;
        }
        let expect = total as f64 / class.len() as f64;
        stat += class
            .iter()
            .map(|l| (counts[l.index(n)] as f64 - expect).powi(2) / expect)
            .sum::<f64>();
        dof += class.len() as u32 - 1;
    }
    let p_value = if dof == 0 {
        1.0
    } else {
        let chi = ChiSquared::new(dof as f64).map_err(|e| Error::Precondition(e.to_string()))?;
        chi.sf(stat)
    };
    Ok(SymmetryTest {
        statistic: stat,
        dof,
        p_value,
    })
}
