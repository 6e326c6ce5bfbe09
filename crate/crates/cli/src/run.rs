// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

use std::ffi::OsString;
use std::io::Write;

use qudit_qkd_core::analysis::{attack_calculus, thresholds};
use qudit_qkd_core::sim::{expected_measurement_ber, run_trials, ChannelModel, ProtocolConfig};
use qudit_qkd_core::t_operator::{m_powers, mub_powers};
use qudit_qkd_core::{Error, Field, TOperator};

use crate::config::{parse_config, CliConfig, CommandKind};
use crate::report::{
    render, write_atomic, AttackResult, BuildTResult, ClassesResult, CommandResult, FieldInfo, Report,
    SimulateResult, SimulateSummary, ThresholdEntry,
};
use crate::CliError;

/// Core errors raised while running: bad settings are configuration
/// errors, anything else means an identity or bookkeeping check failed.
fn core_error(e: Error) -> CliError {
    match e {
        Error::InvalidConfig(_)
        | Error::ChannelMismatch(_)
        | Error::InsufficientParticles { .. }
        | Error::NotPrime(_)
        | Error::ZeroDegree
        | Error::FieldTooLarge { .. }
        | Error::OperatorTooLarge(_)
        | Error::Unsupported(_)
        | Error::OutOfRange(_) => CliError::config(e.to_string()),
        _ => CliError::invariant(e.to_string()),
    }
}

fn operator(config: &CliConfig) -> Result<(Field, TOperator), CliError> {
    let field = config.field()?;
    let t = TOperator::new(&field).map_err(core_error)?;
    Ok((field, t))
}

fn simulate(protocol: &ProtocolConfig, channel: &ChannelModel, trials: u64) -> Result<SimulateResult, CliError> {
    let reports = run_trials(protocol, channel, trials).map_err(core_error)?;
    Ok(SimulateResult {
        summary: SimulateSummary::of(&reports),
        trials: reports,
    })
}

/// Runs the command described by `config`.
pub fn execute(config: &CliConfig) -> Result<Report, CliError> {
    let (fields, result) = match config.command {
        CommandKind::BuildT => {
            let (field, t) = operator(config)?;
            let m = m_powers(&field, t.params())[1];
            let dim = field.size() as usize;
            let matrix = (0..dim)
                .map(|r| t.matrix().row(r).iter().map(|z| [z.re, z.im]).collect())
                .collect();
            let result = BuildTResult {
                params: *t.params(),
                symplectic: m.map(|x| x.index()),
                mub_powers: mub_powers(&field),
                matrix,
            };
            (vec![FieldInfo::of(&field)], CommandResult::BuildT(result))
        }
        CommandKind::Verify => {
            let (field, t) = operator(config)?;
            let report = t.verify().map_err(core_error)?;
            if !report.passed() {
                return Err(CliError::invariant(format!("verification failed: {report:?}")));
            }
            (vec![FieldInfo::of(&field)], CommandResult::Verify(report))
        }
        CommandKind::Classes => {
            let (field, t) = operator(config)?;
            let part = t.equiv_classes();
            let result = ClassesResult {
                count: part.len(),
                classes: part.classes().to_vec(),
            };
            (vec![FieldInfo::of(&field)], CommandResult::Classes(result))
        }
        CommandKind::Thresholds => {
            let mut fields = Vec::new();
            let mut rows = Vec::new();
            for n in config.n.values() {
                let field = Field::new(config.p, n).map_err(core_error)?;
                rows.push(ThresholdEntry::new(n, thresholds(field.size()).map_err(core_error)?));
                fields.push(FieldInfo::of(&field));
            }
            (fields, CommandResult::Thresholds(rows))
        }
        CommandKind::Simulate => {
            let field = config.field()?;
            let protocol = config.protocol_config().expect("resolved for simulate");
            let channel = config.channel.as_ref().expect("resolved for simulate");
            let result = simulate(&protocol, channel, config.trials.unwrap_or(1))?;
            (vec![FieldInfo::of(&field)], CommandResult::Simulate(result))
        }
        CommandKind::Attack => {
            let field = config.field()?;
            let q = config.q.expect("resolved for attack");
            let analysis = attack_calculus(field.size(), q).map_err(core_error)?;
            let simulation = match (config.protocol_config(), &config.channel) {
                (Some(protocol), Some(channel)) => Some(simulate(&protocol, channel, config.trials.unwrap_or(0))?),
                _ => None,
            };
            let result = AttackResult {
                analysis,
                channel_ber: expected_measurement_ber(&field, q),
                simulation,
            };
            (vec![FieldInfo::of(&field)], CommandResult::Attack(result))
        }
    };
    Ok(Report::new(config, fields, result))
}

fn run(argv: Vec<OsString>, env_seed: Option<&str>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (config, print_config) = parse_config(argv, env_seed)?;
    let io = |e: std::io::Error| CliError::io(format!("cannot write to standard output: {e}"));
    if print_config {
        let text = serde_json::to_string_pretty(&config).map_err(|e| CliError::invariant(e.to_string()))?;
        writeln!(stdout, "{text}").map_err(io)?;
        return Ok(());
    }
    let report = execute(&config)?;
    let bytes = render(&report, config.format)?;
    match &config.output {
        Some(path) => write_atomic(path, &bytes),
        None => stdout.write_all(&bytes).map_err(io),
    }
}

/// Entry point shared by the binary and the tests. Returns the exit code.
pub fn main_with<I, T>(argv: I, env_seed: Option<&str>, stdout: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    match run(argv, env_seed, stdout) {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
