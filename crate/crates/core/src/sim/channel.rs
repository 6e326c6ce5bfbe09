// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::pauli::ErrorLabel;

/// Noise or attack acting on every transmitted particle.
///
/// The measuring attacks are modelled as complete dephasing in the standard
/// basis, i.e. the raw label `(0, b)` with `b` uniform over GF(N).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelModel {
    Noiseless,
    /// Independent Pauli errors; `probs[a·N + b]` is the rate of `X_a Z_b`.
    PauliIid { probs: Vec<f64> },
    /// Each particle is measured in the standard basis with probability `q`.
    InterceptResend { q: f64 },
    /// Each block of `group_size` qubits (one particle of dimension
    /// `2^group_size`) is measured with probability `q`.
    GroupedQubit { group_size: u32, q: f64 },
    /// Each qubit is measured with probability `q`; a particle with at least
    /// one measured qubit counts as measured.
    PerQubit { q: f64 },
}

fn check_probability(name: &str, q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::ChannelMismatch(format!("{name} = {q} is not a probability")))
    }
}

impl ChannelModel {
    /// Raw rate `1 - e00` on the single label `(0, 1)`. After sifting this
    /// becomes the extremal class-symmetric distribution.
    pub fn single_label(field: &Field, e00: f64) -> Result<Self> {
        check_probability("e00", e00)?;
        let n = field.size() as usize;
        let mut probs = vec![0.0; n * n];
        probs[0] = e00;
        probs[1] += 1.0 - e00;
        Ok(ChannelModel::PauliIid { probs })
    }

    /// Rate `qer` spread evenly over the nonidentity labels.
    pub fn depolarizing(field: &Field, qer: f64) -> Result<Self> {
        check_probability("qer", qer)?;
        let n = field.size() as usize;
        let mut probs = vec![qer / (n * n - 1) as f64; n * n];
        probs[0] = 1.0 - qer;
        Ok(ChannelModel::PauliIid { probs })
    }

    pub fn validate(&self, field: &Field) -> Result<()> {
        match self {
            ChannelModel::Noiseless => Ok(()),
            ChannelModel::PauliIid { probs } => {
                let n = field.size() as usize;
                if probs.len() != n * n {
                    return Err(Error::ChannelMismatch(format!(
                        "pauli-iid needs {} label probabilities, got {}",
                        n * n,
                        probs.len()
                    )));
                }
                if let Some(x) = probs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                    return Err(Error::ChannelMismatch(format!("label probability {x}")));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::ChannelMismatch(format!(
                        "label probabilities sum to {total}"
                    )));
                }
                Ok(())
            }
            ChannelModel::InterceptResend { q } => check_probability("q", *q),
            ChannelModel::GroupedQubit { group_size, q } => {
                check_probability("q", *q)?;
                if field.p() != 2 {
                    return Err(Error::ChannelMismatch(
                        "grouped attack requires characteristic 2".into(),
                    ));
                }
                if *group_size != field.degree() {
                    return Err(Error::ChannelMismatch(format!(
                        "group size {group_size} does not match N = 2^{}",
                        field.degree()
                    )));
                }
                Ok(())
            }
            ChannelModel::PerQubit { q } => {
                check_probability("q", *q)?;
                if field.p() != 2 {
                    return Err(Error::ChannelMismatch(
                        "per-qubit attack requires characteristic 2".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Probability that a particle is measured by Eve.
    pub fn measurement_probability(&self, field: &Field) -> f64 {
        match self {
            ChannelModel::InterceptResend { q } | ChannelModel::GroupedQubit { q, .. } => *q,
            ChannelModel::PerQubit { q } => 1.0 - (1.0 - q).powi(field.degree() as i32),
            _ => 0.0,
        }
    }
}

/// A validated channel ready to draw raw labels.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    field: Field,
    kind: SamplerKind,
}

#[derive(Clone, Debug)]
enum SamplerKind {
    Identity,
    Table(WeightedIndex<f64>),
    Dephase(f64),
}

impl ChannelSampler {
    pub fn new(model: &ChannelModel, field: &Field) -> Result<Self> {
        model.validate(field)?;
        let kind = match model {
            ChannelModel::Noiseless => SamplerKind::Identity,
            ChannelModel::PauliIid { probs } => SamplerKind::Table(
                WeightedIndex::new(probs).map_err(|e| Error::ChannelMismatch(e.to_string()))?,
            ),
            _ => SamplerKind::Dephase(model.measurement_probability(field)),
        };
        Ok(ChannelSampler {
            field: field.clone(),
            kind,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ErrorLabel {
        match &self.kind {
            SamplerKind::Identity => ErrorLabel::IDENTITY,
            SamplerKind::Table(w) => ErrorLabel::from_index(&self.field, w.sample(rng)),
            SamplerKind::Dephase(q) => {
                if rng.random::<f64>() < *q {
                    let b = rng.random_range(0..self.field.size());
                    ErrorLabel::new(FieldElement::ZERO, self.field.element(b).expect("in range"))
                } else {
                    ErrorLabel::IDENTITY
                }
            }
        }
    }
}

/// A transmitted particle: Alice's value and the powers of `T` applied by
/// Alice and by Bob.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Particle {
    pub value: FieldElement,
    pub alice_power: u32,
    pub bob_power: u32,
}

/// `count` particles with uniform values and uniform powers in `0..=N`.
pub fn prepare_particles<R: Rng + ?Sized>(field: &Field, count: usize, rng: &mut R) -> Vec<Particle> {
    let n = field.size();
    (0..count)
        .map(|_| Particle {
            value: field.element(rng.random_range(0..n)).expect("in range"),
            alice_power: rng.random_range(0..=n),
            bob_power: rng.random_range(0..=n),
        })
        .collect()
}

/// Raw channel label for every particle, in transmission order.
pub fn apply_channel<R: Rng + ?Sized>(
    model: &ChannelModel,
    field: &Field,
    particles: &[Particle],
    rng: &mut R,
) -> Result<Vec<ErrorLabel>> {
    let sampler = ChannelSampler::new(model, field)?;
    Ok(particles.iter().map(|_| sampler.sample(rng)).collect())
}

/// Expected SBMER of a standard-basis measuring attack applied with
/// probability `q`: `q(N-1)/(N+1)` for `p = 2`, `q(N-1)²/(N(N+1))` otherwise.
pub fn expected_measurement_sbmer(field: &Field, q: f64) -> f64 {
    q * crate::analysis::intercept_resend_ceiling(field.p(), field.size())
}

/// Expected BER of the same attack for `p = 2`: a detected error is a
/// uniform nonzero shift with mean Hamming weight `2^{n-1}/(2^n - 1)` per
/// bit, giving `qN/(2(N+1))`.
pub fn expected_measurement_ber(field: &Field, q: f64) -> f64 {
    let n = field.size() as f64;
    q * n / (2.0 * (n + 1.0))
}
