// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Report records, their JSON and CSV renderings, and atomic file output.

use std::io::Write;
use std::path::Path;

use qudit_qkd_core::analysis::AttackReport;
use qudit_qkd_core::sim::{Outcome, SimReport};
use qudit_qkd_core::{ErrorLabel, Field, SymplecticParams, ThresholdTable, VerificationReport};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{CliConfig, Format};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "qudit-qkd";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub config: CliConfig,
    pub seed: Option<u64>,
    pub fields: Vec<FieldInfo>,
    pub result: CommandResult,
}

impl Report {
    pub fn new(config: &CliConfig, fields: Vec<FieldInfo>, result: CommandResult) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            seed: config.seed,
            fields,
            result,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldInfo {
    pub p: u32,
    pub n: u32,
    pub size: u32,
    pub modulus: String,
    /// Low-order coefficient first.
    pub modulus_coefficients: Vec<u32>,
}

impl FieldInfo {
    pub fn of(field: &Field) -> FieldInfo {
        FieldInfo {
            p: field.p(),
            n: field.degree(),
            size: field.size(),
            modulus: field.modulus_string(),
            modulus_coefficients: field.modulus().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "data", rename_all = "kebab-case")]
pub enum CommandResult {
    BuildT(BuildTResult),
    Verify(VerificationReport),
    Thresholds(Vec<ThresholdEntry>),
    Classes(ClassesResult),
    Simulate(SimulateResult),
    Attack(AttackResult),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildTResult {
    pub params: SymplecticParams,
    /// `M(T)` row-major as element indices.
    pub symplectic: [u32; 4],
    pub mub_powers: Vec<u32>,
    /// Row-major entries `[re, im]`.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    pub n: u32,
    pub values: ThresholdTable,
    pub e_sbmer_percent: String,
    pub e_ber_percent: String,
    pub e_qer_percent: String,
}

impl ThresholdEntry {
    pub fn new(n: u32, values: ThresholdTable) -> ThresholdEntry {
        let pct = |x: f64| format!("{:.2}", 100.0 * x);
        ThresholdEntry {
            n,
            e_sbmer_percent: pct(values.e_sbmer),
            e_ber_percent: pct(values.e_ber),
            e_qer_percent: pct(values.e_qer),
            values,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassesResult {
    pub count: usize,
    pub classes: Vec<Vec<ErrorLabel>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub trials: u64,
    pub aborted: u64,
    pub completed: u64,
    pub keys_agree: u64,
    pub mean_sifted_sbmer: f64,
    pub mean_key_length: f64,
}

impl SimulateSummary {
    pub fn of(reports: &[SimReport]) -> SimulateSummary {
        let t = reports.len().max(1) as f64;
        let aborted = reports.iter().filter(|r| r.outcome.aborted()).count() as u64;
        SimulateSummary {
            trials: reports.len() as u64,
            aborted,
            completed: reports.len() as u64 - aborted,
            keys_agree: reports.iter().filter(|r| r.keys_agree()).count() as u64,
            mean_sifted_sbmer: reports.iter().map(|r| r.sifted_sbmer).sum::<f64>() / t,
            mean_key_length: reports
                .iter()
                .map(|r| r.pec.as_ref().map_or(0, |p| p.key_length) as f64)
                .sum::<f64>()
                / t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateResult {
    pub summary: SimulateSummary,
    pub trials: Vec<SimReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub analysis: AttackReport,
    /// BER of the simulated channel, `qN / (2(N+1))`.
    pub channel_ber: f64,
    pub simulation: Option<SimulateResult>,
}

// CSV rows. Every CSV report starts with `#` comment lines carrying the
// metadata of the JSON envelope.

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub n: u32,
    pub n_dim: u32,
    pub e_sbmer_percent: String,
    pub e_ber_percent: String,
    pub e_qer_percent: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub p: u32,
    pub n: u32,
    pub dim: u32,
    pub unitarity_residual: f64,
    pub coefficient_residual: f64,
    pub conjugation_residual: f64,
    pub order: Option<u32>,
    pub order_residual: f64,
    pub mub_residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: usize,
    pub a: u32,
    pub b: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    pub seed: u64,
    pub status: String,
    pub reason: Option<String>,
    pub sifted: u64,
    pub sifted_sbmer: f64,
    pub sifted_ber: Option<f64>,
    pub qer_estimate: f64,
    pub abort_threshold: f64,
    pub ep_rounds: u32,
    pub r: Option<u32>,
    pub key_length: Option<u64>,
    pub mismatches: Option<u64>,
    pub keys_agree: bool,
}

impl TrialRow {
    pub fn of(r: &SimReport) -> TrialRow {
        let (status, reason) = match &r.outcome {
            Outcome::Completed => ("completed".to_string(), None),
            Outcome::Aborted { stage, reason } => (
                format!("aborted-{}", format!("{stage:?}").to_lowercase()),
                Some(reason.clone()),
            ),
        };
        TrialRow {
            trial: r.trial,
            seed: r.seed,
            status,
            reason,
            sifted: r.sifted_per_set.iter().sum(),
            sifted_sbmer: r.sifted_sbmer,
            sifted_ber: r.sifted_ber,
            qer_estimate: r.estimate.qer,
            abort_threshold: r.estimate.abort_threshold,
            ep_rounds: r.rounds(),
            r: r.pec.as_ref().map(|p| p.r),
            key_length: r.pec.as_ref().map(|p| p.key_length),
            mismatches: r.pec.as_ref().map(|p| p.mismatches),
            keys_agree: r.keys_agree(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackRow {
    pub n_dim: u32,
    pub q: f64,
    pub ber_eve: f64,
    pub ber_eve_2: f64,
    pub ber_eve_16: f64,
    pub sbmer_eve: f64,
    pub channel_ber: f64,
    pub q_low: f64,
    pub q_high: f64,
    pub q_in_interval: bool,
    pub per_qubit_q_prime: f64,
    pub defeats_qubit_schemes: bool,
    pub tolerated_at_16: bool,
    pub per_qubit_defeats_16: bool,
}

/// Renders `report` in `format`.
pub fn render(report: &Report, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).map_err(|e| CliError::invariant(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => render_csv(report),
    }
}

fn render_csv(report: &Report) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    let config = serde_json::to_string(&report.config).map_err(|e| CliError::invariant(e.to_string()))?;
    let seed = report.seed.map_or("none".to_string(), |s| s.to_string());
    writeln!(out, "# {} {} schema_version={}", report.tool, report.version, report.schema_version)
        .expect("write to Vec");
    writeln!(out, "# config={config}").expect("write to Vec");
    writeln!(out, "# seed={seed}").expect("write to Vec");
    for f in &report.fields {
        writeln!(out, "# modulus GF({}^{})={}", f.p, f.n, f.modulus).expect("write to Vec");
    }
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| CliError::invariant(e.to_string());
    match &report.result {
        CommandResult::BuildT(b) => {
            for (row, entries) in b.matrix.iter().enumerate() {
                for (col, [re, im]) in entries.iter().enumerate() {
                    w.serialize(MatrixRow { row, col, re: *re, im: *im }).map_err(err)?;
                }
            }
        }
        CommandResult::Verify(v) => w
            .serialize(VerifyRow {
                p: v.p,
                n: v.n,
                dim: v.dim,
                unitarity_residual: v.unitarity_residual,
                coefficient_residual: v.coefficient_residual,
                conjugation_residual: v.conjugation_residual,
                order: v.order,
                order_residual: v.order_residual,
                mub_residual: v.mub_residual,
                passed: v.passed(),
            })
            .map_err(err)?,
        CommandResult::Thresholds(rows) => {
            for t in rows {
                w.serialize(ThresholdRow {
                    n: t.n,
                    n_dim: t.values.n_dim,
                    e_sbmer_percent: t.e_sbmer_percent.clone(),
                    e_ber_percent: t.e_ber_percent.clone(),
                    e_qer_percent: t.e_qer_percent.clone(),
                })
                .map_err(err)?;
            }
        }
        CommandResult::Classes(c) => {
            for (class, members) in c.classes.iter().enumerate() {
                for l in members {
                    w.serialize(ClassRow {
                        class,
                        a: l.a.index(),
                        b: l.b.index(),
                    })
                    .map_err(err)?;
                }
            }
        }
        CommandResult::Simulate(s) => {
            for r in &s.trials {
                w.serialize(TrialRow::of(r)).map_err(err)?;
            }
        }
        CommandResult::Attack(a) => {
            let x = &a.analysis;
            w.serialize(AttackRow {
                n_dim: x.n_dim,
                q: x.q,
                ber_eve: x.ber_eve,
                ber_eve_2: x.ber_eve_2,
                ber_eve_16: x.ber_eve_16,
                sbmer_eve: x.sbmer_eve,
                channel_ber: a.channel_ber,
                q_low: x.q_interval.0,
                q_high: x.q_interval.1,
                q_in_interval: x.q_in_interval,
                per_qubit_q_prime: x.per_qubit_q_prime,
                defeats_qubit_schemes: x.defeats_qubit_schemes,
                tolerated_at_16: x.tolerated_at_16,
                per_qubit_defeats_16: x.per_qubit_defeats_16,
            })
            .map_err(err)?;
        }
    }
    w.into_inner().map_err(|e| CliError::invariant(e.to_string()))
}

/// Data rows of a CSV report, skipping the comment header.
pub fn read_csv_rows<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, csv::Error> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

/// The resolved configuration embedded in a CSV report's header.
pub fn read_csv_config(text: &str) -> Option<CliConfig> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# config="))
        .and_then(|json| serde_json::from_str(json).ok())
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial report.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
