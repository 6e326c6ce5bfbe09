// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    ep_closed_form, ep_step, pec_phase_bound, phase_bound_from_marginal, thresholds,
    ErrorDistribution,
};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::pauli::ErrorLabel;
use crate::t_operator::{choose_m, equiv_classes, find_char_poly, m_powers, EquivClassPartition};

use super::channel::{prepare_particles, ChannelModel, ChannelSampler};
use super::ledger::{
    bit_error_rate, disagreement_rate, estimate_qer, label_counts, locc2_ep_round, pec_majority,
    sift, EpRoundStats, QerEstimate, Register,
};

/// Particles are generated, sent and sifted in chunks of this size.
const CHUNK: usize = 1 << 16;

/// How the distillation step decides that enough purification was done.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    /// Fit class rates to the revealed differences, evolve them through the
    /// purification recursion and bound each phase value separately.
    #[default]
    Estimated,
    /// Assume the extremal distribution with `e00 = 1 - QER_est - δ`.
    /// Characteristic 2 only.
    WorstCase,
}

fn default_delta() -> f64 {
    0.01
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_epsilon_i() -> f64 {
    0.1
}
fn default_ep_rounds_max() -> u32 {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub p: u32,
    pub n: u32,
    /// Number of transmitted particles `L`.
    #[serde(alias = "L")]
    pub particles: u64,
    /// Registers revealed from every set `S_i`.
    pub test_count: u64,
    /// Defaults to `e_QER(N) - δ`; required when `p > 2`.
    #[serde(default)]
    pub abort_threshold: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_ep_rounds_max")]
    pub ep_rounds_max: u32,
    /// Target `ε_I`; the residual error per key digit must fall below `ε_I/ℓ²`.
    #[serde(default = "default_epsilon_i")]
    pub epsilon_i: f64,
    #[serde(default)]
    pub certificate: Certificate,
    #[serde(default)]
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(p: u32, n: u32, particles: u64, test_count: u64) -> Self {
        ProtocolConfig {
            p,
            n,
            particles,
            test_count,
            abort_threshold: None,
            delta: default_delta(),
            epsilon: default_epsilon(),
            ep_rounds_max: default_ep_rounds_max(),
            epsilon_i: default_epsilon_i(),
            certificate: Certificate::default(),
            seed: 0,
        }
    }

    pub fn field(&self) -> Result<Field> {
        Field::new(self.p, self.n)
    }

    pub fn validate(&self) -> Result<Field> {
        let field = self.field()?;
        let sets = field.size() as u64 + 1;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.test_count == 0 {
            return bad("test_count must be positive".into());
        }
        if self.particles < sets * self.test_count {
            return bad(format!(
                "L = {} is below (N+1)·test_count = {}",
                self.particles,
                sets * self.test_count
            ));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return bad(format!("delta = {} must lie in [0, 1)", self.delta));
        }
        for (name, x) in [("epsilon", self.epsilon), ("epsilon_i", self.epsilon_i)] {
            if !(x > 0.0 && x < 1.0) {
                return bad(format!("{name} = {x} must lie in (0, 1)"));
            }
        }
        if let Some(t) = self.abort_threshold {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("abort_threshold = {t} must lie in (0, 1)"));
            }
        } else if self.p != 2 {
            return bad("abort_threshold is required when p > 2".into());
        }
        if self.certificate == Certificate::WorstCase && self.p != 2 {
            return bad("the worst-case certificate requires characteristic 2".into());
        }
        if self.ep_rounds_max > 30 {
            return bad(format!("ep_rounds_max = {} exceeds 30", self.ep_rounds_max));
        }
        Ok(field)
    }

    pub fn resolved_abort_threshold(&self) -> Result<f64> {
        match self.abort_threshold {
            Some(t) => Ok(t),
            None => {
                let t = thresholds(self.field()?.size())?.e_qer - self.delta;
                if t > 0.0 {
                    Ok(t)
                } else {
                    Err(Error::InvalidConfig(format!("default abort threshold {t} is not positive")))
                }
            }
        }
    }

    /// `⌈ln(2/ε) / (2δ²)⌉`, the test size for which one `ê_i` is within `δ`
    /// with probability `1 - ε`.
    pub fn hoeffding_test_count(&self) -> Option<u64> {
        (self.delta > 0.0).then(|| ((2.0 / self.epsilon).ln() / (2.0 * self.delta * self.delta)).ceil() as u64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Estimation,
    Purification,
    Correction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Completed,
    Aborted { stage: Stage, reason: String },
}

impl Outcome {
    pub fn aborted(&self) -> bool {
        matches!(self, Outcome::Aborted { .. })
    }
}

/// Soft warnings about the test sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSizeFlags {
    /// Some set revealed more than 1% of its registers.
    pub above_one_percent: bool,
    pub hoeffding_test_count: Option<u64>,
    pub below_hoeffding: bool,
}

/// The repetition length picked by the certificate and its predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateChoice {
    pub kind: Certificate,
    /// `e00` assumed by the certificate before purification.
    pub e00: f64,
    pub rounds: u32,
    pub r: u32,
    pub groups: u64,
    pub spin_bound: f64,
    pub phase_bound: f64,
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PecSummary {
    pub r: u32,
    pub key_length: u64,
    pub mismatches: u64,
    pub keys_agree: bool,
    pub pre_spin_rate: f64,
    pub spin_residual_rate: f64,
    pub phase_residual_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trial: u64,
    pub seed: u64,
    pub n_dim: u32,
    pub modulus: String,
    pub particles: u64,
    pub sifted_per_set: Vec<u64>,
    /// Ground-truth label counts of all sifted registers.
    pub sifted_label_counts: Vec<u64>,
    /// Disagreement rate over all sifted registers.
    pub sifted_sbmer: f64,
    /// Bit error rate over all sifted registers, for `p = 2`.
    pub sifted_ber: Option<f64>,
    pub estimate: QerEstimate,
    pub test_size: TestSizeFlags,
    pub outcome: Outcome,
    pub ep_rounds: Vec<EpRoundStats>,
    /// Label counts just before phase correction.
    pub residual_label_counts: Vec<u64>,
    pub certificate: Option<CertificateChoice>,
    pub pec: Option<PecSummary>,
}

impl SimReport {
    pub fn rounds(&self) -> u32 {
        self.ep_rounds.len() as u32
    }

    pub fn keys_agree(&self) -> bool {
        self.pec.as_ref().is_some_and(|p| p.keys_agree)
    }
}

/// Fitted class masses below this are set to zero.
pub const EM_FLOOR: f64 = 1e-12;

/// Class rates maximizing the likelihood of the pooled revealed differences.
///
/// A difference `x` is produced by a label in class `C` with probability
/// `|{(x, b) ∈ C}| / |C|`; the class rates are found by EM. For odd `p`
/// the fit is not unique and EM returns the solution reached from uniform
/// starting rates. Masses below [`EM_FLOOR`] are dropped.
pub fn fit_class_rates(
    field: &Field,
    partition: &EquivClassPartition,
    difference_counts: &[u64],
) -> Result<ErrorDistribution> {
    let n = field.size();
    let classes = partition.classes();
    let total: u64 = difference_counts.iter().sum();
    if total == 0 || difference_counts.len() != n as usize {
        return Err(Error::Precondition("no revealed differences to fit".into()));
    }
    let emit: Vec<Vec<f64>> = classes
        .iter()
        .map(|c| {
            let mut e = vec![0.0; n as usize];
            for l in c {
                e[l.a.index() as usize] += 1.0 / c.len() as f64;
            }
            e
        })
        .collect();
    let h: Vec<f64> = difference_counts.iter().map(|&c| c as f64 / total as f64).collect();
    let mut w = vec![1.0 / classes.len() as f64; classes.len()];
    for _ in 0..10_000 {
        let mut next = vec![0.0; w.len()];
        for (x, &hx) in h.iter().enumerate() {
            if hx == 0.0 {
                continue;
            }
            let mix: f64 = w.iter().zip(&emit).map(|(wc, e)| wc * e[x]).sum();
            for (c, e) in emit.iter().enumerate() {
                next[c] += hx * w[c] * e[x] / mix;
            }
        }
        let change = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        if change < 1e-13 {
            break;
        }
    }
    // EM only approaches the boundary of the simplex geometrically
    let rates: Vec<f64> = w
        .iter()
        .zip(classes)
        .map(|(&x, c)| if x < EM_FLOOR { 0.0 } else { x / c.len() as f64 })
        .collect();
    ErrorDistribution::from_class_rates(field, partition, &rates)
}

/// Evolving prediction used to pick `r`.
enum Predictor {
    Estimated {
        current: ErrorDistribution,
    },
    WorstCase {
        e00: f64,
        initial: ErrorDistribution,
        current: ErrorDistribution,
    },
}

impl Predictor {
    fn e00(&self) -> f64 {
        match self {
            Predictor::Estimated { current } => current.e00(),
            Predictor::WorstCase { e00, .. } => *e00,
        }
    }

    fn kind(&self) -> Certificate {
        match self {
            Predictor::Estimated { .. } => Certificate::Estimated,
            Predictor::WorstCase { .. } => Certificate::WorstCase,
        }
    }

    fn current(&self) -> &ErrorDistribution {
        match self {
            Predictor::Estimated { current } | Predictor::WorstCase { current, .. } => current,
        }
    }

    fn phase_bound(&self, k: u32, r: u32) -> f64 {
        match self {
            Predictor::Estimated { current } => phase_bound_from_marginal(current, r),
            Predictor::WorstCase { e00, current, .. } => {
                pec_phase_bound(current.field().size(), *e00, k, r)
            }
        }
    }

    fn advance(&mut self, k: u32) -> Result<()> {
        match self {
            Predictor::Estimated { current } => *current = ep_step(current)?,
            Predictor::WorstCase { initial, current, .. } => *current = ep_closed_form(initial, k)?,
        }
        Ok(())
    }

    /// Smallest odd `r ≤ m` with `r·spin + phase(r) < ε_I/ℓ²`, `ℓ = ⌊m/r⌋`.
    fn choose(&self, k: u32, m: usize, epsilon_i: f64) -> Option<CertificateChoice> {
        let spin = self.current().spin_rate();
        let mut r = 1u32;
        while (r as usize) <= m {
            let spin_bound = r as f64 * spin;
            // the target never exceeds ε_I, so larger r cannot help
            if spin_bound >= epsilon_i {
                return None;
            }
            let groups = (m / r as usize) as u64;
            let target = epsilon_i / (groups as f64 * groups as f64);
            let phase_bound = self.phase_bound(k, r);
            if spin_bound + phase_bound < target {
                return Some(CertificateChoice {
                    kind: self.kind(),
                    e00: self.e00(),
                    rounds: k,
                    r,
                    groups,
                    spin_bound,
                    phase_bound,
                    target,
                });
            }
            r += 2;
        }
        None
    }
}

/// Everything a run needs that depends only on the field.
struct Setup {
    field: Field,
    powers: Vec<[crate::field::FieldElement; 4]>,
    partition: EquivClassPartition,
}

impl Setup {
    fn new(config: &ProtocolConfig) -> Result<Setup> {
        let field = config.validate()?;
        let params = choose_m(&field, find_char_poly(&field)?)?;
        Ok(Setup {
            powers: m_powers(&field, &params),
            partition: equiv_classes(&field, &params),
            field,
        })
    }
}

/// Generator for one trial: `seed` selects the key, `trial` the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs trial 0 of `config`.
pub fn run_protocol(config: &ProtocolConfig, channel: &ChannelModel) -> Result<SimReport> {
    run_trial(config, channel, 0)
}

/// Runs one trial with the random stream `trial` of `config.seed`.
pub fn run_trial(config: &ProtocolConfig, channel: &ChannelModel, trial: u64) -> Result<SimReport> {
    let setup = Setup::new(config)?;
    run_with(&setup, config, channel, trial)
}

/// Runs `trials` independent trials in parallel. The result is ordered by
/// trial index and does not depend on the thread count.
pub fn run_trials(config: &ProtocolConfig, channel: &ChannelModel, trials: u64) -> Result<Vec<SimReport>> {
    let setup = Setup::new(config)?;
    ChannelSampler::new(channel, &setup.field)?;
    (0..trials)
        .into_par_iter()
        .map(|t| run_with(&setup, config, channel, t))
        .collect()
}

/// Prepares, transmits and sifts `config.particles` particles.
pub fn transmit_and_sift(
    field: &Field,
    powers: &[[crate::field::FieldElement; 4]],
    particles: u64,
    channel: &ChannelModel,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<Register>>> {
    let sampler = ChannelSampler::new(channel, field)?;
    let mut sets = vec![Vec::new(); field.size() as usize + 1];
    let mut left = particles as usize;
    while left > 0 {
        let len = left.min(CHUNK);
        left -= len;
        let ps = prepare_particles(field, len, rng);
        let raw: Vec<ErrorLabel> = ps.iter().map(|_| sampler.sample(rng)).collect();
        for (all, part) in sets.iter_mut().zip(sift(field, powers, &ps, &raw)?) {
            all.extend(part);
        }
    }
    Ok(sets)
}

fn run_with(setup: &Setup, config: &ProtocolConfig, channel: &ChannelModel, trial: u64) -> Result<SimReport> {
    let field = &setup.field;
    let mut rng = trial_rng(config.seed, trial);
    let mut sets = transmit_and_sift(field, &setup.powers, config.particles, channel, &mut rng)?;

    let sifted_per_set: Vec<u64> = sets.iter().map(|s| s.len() as u64).collect();
    let sifted_label_counts = label_counts(field, sets.iter().flatten());
    let sifted_sbmer = disagreement_rate(sets.iter().flatten());
    let sifted_ber = (field.p() == 2).then(|| bit_error_rate(field, sets.iter().flatten()));

    let threshold = config.resolved_abort_threshold()?;
    let test_count = config.test_count as usize;
    let estimate = estimate_qer(field, &mut sets, test_count, threshold, &mut rng)?;
    let hoeffding = config.hoeffding_test_count();
    let test_size = TestSizeFlags {
        above_one_percent: sifted_per_set.iter().any(|&s| config.test_count as f64 > 0.01 * s as f64),
        hoeffding_test_count: hoeffding,
        below_hoeffding: hoeffding.is_some_and(|h| config.test_count < h),
    };
    let mut report = SimReport {
        trial,
        seed: config.seed,
        n_dim: field.size(),
        modulus: field.modulus_string(),
        particles: config.particles,
        sifted_per_set,
        sifted_label_counts,
        sifted_sbmer,
        sifted_ber,
        estimate,
        test_size,
        outcome: Outcome::Completed,
        ep_rounds: Vec::new(),
        residual_label_counts: Vec::new(),
        certificate: None,
        pec: None,
    };
    let abort = |mut report: SimReport, stage, reason: String| {
        report.outcome = Outcome::Aborted { stage, reason };
        Ok(report)
    };
    if report.estimate.abort {
        let reason = format!(
            "estimated QER {:.6} exceeds threshold {:.6}",
            report.estimate.qer, threshold
        );
        return abort(report, Stage::Estimation, reason);
    }

    let mut pool: Vec<Register> = sets.into_iter().flatten().collect();
    pool.shuffle(&mut rng);

    let mut predictor = match config.certificate {
        Certificate::Estimated => Predictor::Estimated {
            current: fit_class_rates(field, &setup.partition, &report.estimate.difference_counts)?,
        },
        Certificate::WorstCase => {
            let e00 = 1.0 - report.estimate.qer - config.delta;
            if !(e00 > 1.0 / (field.size() + 2) as f64) {
                let reason = format!("assumed e00 = {e00:.6} does not exceed 1/(N+2)");
                return abort(report, Stage::Purification, reason);
            }
            let initial = ErrorDistribution::worst_case(field, &setup.partition, e00)?;
            Predictor::WorstCase {
                e00,
                current: initial.clone(),
                initial,
            }
        }
    };

    let mut k = 0u32;
    let choice = loop {
        if let Some(c) = predictor.choose(k, pool.len(), config.epsilon_i) {
            break c;
        }
        if k == config.ep_rounds_max || pool.len() < 2 {
            let reason = format!(
                "no odd r <= {} meets the target after {k} purification rounds",
                pool.len()
            );
            return abort(report, Stage::Purification, reason);
        }
        let (next, stats) = locc2_ep_round(field, pool, &mut rng)?;
        pool = next;
        report.ep_rounds.push(stats);
        k += 1;
        if let Err(e) = predictor.advance(k) {
            return abort(report, Stage::Purification, e.to_string());
        }
    };

    report.residual_label_counts = label_counts(field, &pool);
    let pec = match pec_majority(field, &pool, choice.r) {
        Ok(p) => p,
        Err(e @ Error::InsufficientRegisters { .. }) => {
            return abort(report, Stage::Correction, e.to_string());
        }
        Err(e) => return Err(e),
    };
    report.certificate = Some(choice);
    report.pec = Some(PecSummary {
        r: pec.r,
        key_length: pec.key_length() as u64,
        mismatches: pec.mismatches,
        keys_agree: pec.mismatches == 0,
        pre_spin_rate: pec.pre_spin_rate,
        spin_residual_rate: pec.spin_residual_rate,
        phase_residual_rate: pec.phase_residual_rate,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = ProtocolConfig::new(2, 1, 1000, 10);
        assert!(c.validate().is_ok());
        c.test_count = 400;
        assert!(c.validate().is_err());
        let mut c = ProtocolConfig::new(3, 1, 1000, 10);
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        c.abort_threshold = Some(0.3);
        assert!(c.validate().is_ok());
        c.certificate = Certificate::WorstCase;
        assert!(c.validate().is_err());
        let mut c = ProtocolConfig::new(2, 2, 1000, 10);
        c.epsilon_i = 0.0;
        assert!(c.validate().is_err());
        assert!(ProtocolConfig::new(4, 1, 1000, 10).validate().is_err());
    }

    #[test]
    fn default_threshold_and_hoeffding() {
        let c = ProtocolConfig::new(2, 1, 1000, 10);
        let t = c.resolved_abort_threshold().unwrap();
        assert!((t - (thresholds(2).unwrap().e_qer - 0.01)).abs() < 1e-15);
        assert_eq!(c.hoeffding_test_count(), Some(26_492));
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let ok: ProtocolConfig =
            serde_json::from_str(r#"{"p":2,"n":2,"L":5000,"test_count":20}"#).unwrap();
        assert_eq!(ok.particles, 5000);
        assert_eq!(ok.certificate, Certificate::Estimated);
        assert!(serde_json::from_str::<ProtocolConfig>(r#"{"p":2,"n":2,"L":5000,"test_count":20,"x":1}"#).is_err());
    }

    #[test]
    fn em_recovers_class_rates() {
        let f = Field::new(2, 2).unwrap();
        let params = choose_m(&f, find_char_poly(&f).unwrap()).unwrap();
        let part = equiv_classes(&f, &params);
        let truth = ErrorDistribution::from_class_rates(&f, &part, &[0.7, 0.02, 0.03, 0.01]).unwrap();
        // exact expected histogram
        let mut counts = vec![0u64; 4];
        for (i, &r) in truth.rates().iter().enumerate() {
            counts[i / 4] += (r * 1e9).round() as u64;
        }
        let fit = fit_class_rates(&f, &part, &counts).unwrap();
        for (x, y) in fit.rates().iter().zip(truth.rates()) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn noiseless_run_agrees() {
        let mut c = ProtocolConfig::new(3, 1, 10_000, 20);
        c.abort_threshold = Some(0.3);
        let r = run_protocol(&c, &ChannelModel::Noiseless).unwrap();
        assert!(!r.outcome.aborted(), "{:?}", r.outcome);
        assert_eq!(r.rounds(), 0);
        let pec = r.pec.unwrap();
        assert_eq!(pec.r, 1);
        assert!(pec.keys_agree);
        let sifted: u64 = r.sifted_per_set.iter().sum();
        assert_eq!(pec.key_length, sifted - 4 * 20);
    }

    #[test]
    fn deterministic_reports() {
        let mut c = ProtocolConfig::new(2, 1, 20_000, 100);
        c.seed = 11;
        let ch = ChannelModel::depolarizing(&c.field().unwrap(), 0.2).unwrap();
        let a = run_trials(&c, &ch, 3).unwrap();
        let b = run_trials(&c, &ch, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_eq!(run_trial(&c, &ch, 1).unwrap(), a[1]);
    }

    #[test]
    fn high_qer_aborts() {
        let mut c = ProtocolConfig::new(2, 1, 60_000, 2000);
        c.seed = 3;
        let f = c.field().unwrap();
        let ch = ChannelModel::depolarizing(&f, 0.5).unwrap();
        let r = run_protocol(&c, &ch).unwrap();
        assert!(matches!(r.outcome, Outcome::Aborted { stage: Stage::Estimation, .. }));
    }
}
