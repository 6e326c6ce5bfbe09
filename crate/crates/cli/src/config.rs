// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line flags, config files and their merge into a [`CliConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qudit_qkd_core::sim::{Certificate, ChannelModel, ProtocolConfig};
use qudit_qkd_core::Field;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Largest field the operator-based commands accept.
const MAX_DIM: u32 = 16;

/// Environment variable consulted when no seed is given.
pub const SEED_ENV: &str = "QUDIT_QKD_SEED";

#[derive(Debug, Parser)]
#[command(name = "qudit-qkd", version, about = "Qudit QKD operators, thresholds and protocol simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Build the order-(N+1) operator T and print it.
    BuildT(CommonArgs),
    /// Check unitarity, order, conjugation and mutual unbiasedness of T.
    Verify(CommonArgs),
    /// Tolerable error rates for N = 2^n over a range of n.
    Thresholds(CommonArgs),
    /// Equivalence classes of error labels under conjugation by T.
    Classes(CommonArgs),
    /// Run the prepare-and-measure protocol under a channel model.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Grouped and per-qubit measuring attacks; optionally simulated.
    Attack {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
}

impl CommandArgs {
    pub fn kind(&self) -> CommandKind {
        match self {
            CommandArgs::BuildT(_) => CommandKind::BuildT,
            CommandArgs::Verify(_) => CommandKind::Verify,
            CommandArgs::Thresholds(_) => CommandKind::Thresholds,
            CommandArgs::Classes(_) => CommandKind::Classes,
            CommandArgs::Simulate { .. } => CommandKind::Simulate,
            CommandArgs::Attack { .. } => CommandKind::Attack,
        }
    }

    fn parts(&self) -> (&CommonArgs, Option<&SimArgs>) {
        match self {
            CommandArgs::BuildT(c)
            | CommandArgs::Verify(c)
            | CommandArgs::Thresholds(c)
            | CommandArgs::Classes(c) => (c, None),
            CommandArgs::Simulate { common, sim } | CommandArgs::Attack { common, sim } => (common, Some(sim)),
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON or TOML file with default values; flags win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Field characteristic.
    #[arg(long)]
    pub p: Option<u32>,
    /// Extension degree, or an inclusive range `a..b` for `thresholds`.
    #[arg(long)]
    pub n: Option<NSpec>,
    /// Report file, written atomically. Standard output when absent.
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Falls back to the QUDIT_QKD_SEED environment variable.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    pub print_effective_config: bool,
}

#[derive(Debug, Default, Args)]
pub struct SimArgs {
    /// Number of transmitted particles.
    #[arg(long = "L", alias = "particles", value_name = "L")]
    pub particles: Option<u64>,
    /// Registers revealed from every set.
    #[arg(long)]
    pub test_count: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_enum)]
    pub channel: Option<ChannelKind>,
    /// Error rate of the `pauli-iid` and `single-label` channels.
    #[arg(long)]
    pub qer: Option<f64>,
    /// Measurement probability of the attack channels.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub abort_threshold: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub ep_rounds_max: Option<u32>,
    #[arg(long)]
    pub epsilon_i: Option<f64>,
    #[arg(long, value_enum)]
    pub certificate: Option<CertificateArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    BuildT,
    Verify,
    Thresholds,
    Classes,
    Simulate,
    Attack,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Noiseless,
    /// Depolarizing: `qer` spread evenly over the nonidentity labels.
    PauliIid,
    /// All of `qer` on the label (0, 1).
    SingleLabel,
    InterceptResend,
    GroupedQubit,
    PerQubit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CertificateArg {
    Estimated,
    WorstCase,
}

impl From<CertificateArg> for Certificate {
    fn from(c: CertificateArg) -> Self {
        match c {
            CertificateArg::Estimated => Certificate::Estimated,
            CertificateArg::WorstCase => Certificate::WorstCase,
        }
    }
}

/// A single extension degree or an inclusive range `a..b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NSpec {
    One(u32),
    Range(u32, u32),
}

impl NSpec {
    pub fn single(self) -> Option<u32> {
        match self {
            NSpec::One(n) => Some(n),
            NSpec::Range(a, b) if a == b => Some(a),
            NSpec::Range(..) => None,
        }
    }

    pub fn values(self) -> std::ops::RangeInclusive<u32> {
        match self {
            NSpec::One(n) => n..=n,
            NSpec::Range(a, b) => a..=b,
        }
    }
}

impl FromStr for NSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad degree {t:?}: {e}"));
        match s.split_once("..") {
            None => num(s).map(NSpec::One),
            Some((a, b)) => {
                let b = b.strip_prefix('=').unwrap_or(b);
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range {s}"));
                }
                Ok(NSpec::Range(a, b))
            }
        }
    }
}

impl fmt::Display for NSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NSpec::One(n) => write!(f, "{n}"),
            NSpec::Range(a, b) => write!(f, "{a}..{b}"),
        }
    }
}

impl Serialize for NSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NSpec::One(n) => s.serialize_u32(*n),
            NSpec::Range(..) => s.collect_str(self),
        }
    }
}

impl<'de> Deserialize<'de> for NSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(NSpec::One(n)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Channel given either by kind (with `q`/`qer` alongside) or in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Kind(ChannelKind),
    Model(ChannelModel),
}

/// Protocol parameters as they appear in a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFile {
    #[serde(alias = "L", skip_serializing_if = "Option::is_none")]
    pub particles: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ep_rounds_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_i: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

/// Everything a config file may set. Unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<CommandKind>,
    pub p: Option<u32>,
    pub n: Option<NSpec>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub q: Option<f64>,
    pub qer: Option<f64>,
    pub channel: Option<ChannelSpec>,
    pub protocol: Option<ProtocolFile>,
}

impl FileConfig {
    /// Reads JSON, or TOML when the extension is `.toml`.
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        let toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let parsed = if toml {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

/// Resolved protocol parameters; `p`, `n` and the seed live one level up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    pub particles: u64,
    pub test_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_threshold: Option<f64>,
    pub delta: f64,
    pub epsilon: f64,
    pub ep_rounds_max: u32,
    pub epsilon_i: f64,
    pub certificate: Certificate,
}

impl ProtocolParams {
    pub fn to_config(&self, p: u32, n: u32, seed: u64) -> ProtocolConfig {
        ProtocolConfig {
            p,
            n,
            particles: self.particles,
            test_count: self.test_count,
            abort_threshold: self.abort_threshold,
            delta: self.delta,
            epsilon: self.epsilon,
            ep_rounds_max: self.ep_rounds_max,
            epsilon_i: self.epsilon_i,
            certificate: self.certificate,
            seed,
        }
    }
}

/// Fully resolved configuration. Also a valid config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub command: CommandKind,
    pub p: u32,
    pub n: NSpec,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolParams>,
}

impl CliConfig {
    /// Extension degree of a single-field command.
    pub fn degree(&self) -> u32 {
        self.n.single().expect("checked during resolution")
    }

    pub fn field(&self) -> Result<Field, CliError> {
        Field::new(self.p, self.degree()).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn protocol_config(&self) -> Option<ProtocolConfig> {
        let seed = self.seed.unwrap_or(0);
        self.protocol.as_ref().map(|p| p.to_config(self.p, self.degree(), seed))
    }
}

/// Parses argv, loads the optional config file and resolves the result.
/// `env_seed` is the raw value of [`SEED_ENV`], if set.
pub fn parse_config<I, T>(argv: I, env_seed: Option<&str>) -> Result<(CliConfig, bool), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let (common, _) = cli.command.parts();
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let print = common.print_effective_config;
    resolve(&cli.command, file, env_seed).map(|c| (c, print))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::usage(msg)
}

/// Flags that cannot be combined with each other or with the command.
fn check_flags(cmd: &CommandArgs) -> Result<(), CliError> {
    let Some(sim) = cmd.parts().1 else {
        return Ok(());
    };
    if sim.q.is_some() && sim.qer.is_some() {
        return Err(usage("--q and --qer are mutually exclusive"));
    }
    match sim.channel {
        Some(ChannelKind::PauliIid | ChannelKind::SingleLabel) if sim.q.is_some() => {
            Err(usage("--q applies to the measuring channels; use --qer"))
        }
        Some(ChannelKind::InterceptResend | ChannelKind::GroupedQubit | ChannelKind::PerQubit)
            if sim.qer.is_some() =>
        {
            Err(usage("--qer applies to pauli-iid and single-label; use --q"))
        }
        Some(ChannelKind::Noiseless) if sim.q.is_some() || sim.qer.is_some() => {
            Err(usage("the noiseless channel takes no rate"))
        }
        _ if cmd.kind() == CommandKind::Attack && (sim.channel.is_some() || sim.qer.is_some()) => {
            Err(usage("attack always uses the grouped measuring channel; drop --channel/--qer"))
        }
        _ => Ok(()),
    }
}

/// Merges flags over `file` and checks the result.
pub fn resolve(cmd: &CommandArgs, file: FileConfig, env_seed: Option<&str>) -> Result<CliConfig, CliError> {
    check_flags(cmd)?;
    let kind = cmd.kind();
    if let Some(k) = file.command {
        if k != kind {
            return Err(CliError::config(format!("config file is for `{k}`, not `{kind}`")));
        }
    }
    let (common, sim) = cmd.parts();
    let empty = SimArgs::default();
    let sim = sim.unwrap_or(&empty);

    let p = common.p.or(file.p).ok_or_else(|| CliError::config("missing field characteristic --p"))?;
    let n = common.n.or(file.n).ok_or_else(|| CliError::config("missing extension degree --n"))?;
    let output = common.output.clone().or(file.output.clone());
    let inferred = output
        .as_ref()
        .and_then(|o| o.extension())
        .filter(|e| e.eq_ignore_ascii_case("csv"))
        .map(|_| Format::Csv);
    let format = common.format.or(file.format).or(inferred).unwrap_or_default();
    let seed = match common.seed.or(file.seed) {
        Some(s) => Some(s),
        None => env_seed
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| CliError::config(format!("{SEED_ENV}={s:?}: {e}")))
            })
            .transpose()?,
    };

    let mut config = CliConfig {
        command: kind,
        p,
        n,
        format,
        output,
        seed,
        trials: None,
        q: None,
        channel: None,
        protocol: None,
    };

    if kind == CommandKind::Thresholds {
        if p != 2 {
            return Err(CliError::config(format!("thresholds are only known for p = 2 (got p = {p})")));
        }
        if let Some(bad) = n.values().find(|&k| k == 0 || k > 16) {
            return Err(CliError::config(format!("degree {bad} is outside 1..16")));
        }
        return Ok(config);
    }

    let degree = n
        .single()
        .ok_or_else(|| CliError::config(format!("`{kind}` needs a single degree, got {n}")))?;
    config.n = NSpec::One(degree);
    let field = Field::new(p, degree).map_err(|e| CliError::config(e.to_string()))?;
    if field.size() > MAX_DIM {
        return Err(CliError::config(format!(
            "N = {} exceeds the largest supported dimension {MAX_DIM}",
            field.size()
        )));
    }

    match kind {
        CommandKind::Simulate => {
            let channel = resolve_channel(&field, sim, &file)?;
            let trials = sim.trials.or(file.trials).unwrap_or(1);
            if trials == 0 {
                return Err(CliError::config("trials must be positive"));
            }
            let seed = config
                .seed
                .ok_or_else(|| CliError::config(format!("simulate needs --seed or {SEED_ENV}")))?;
            let params = resolve_protocol(&field, sim, file.protocol.unwrap_or_default())?;
            check_protocol(&params.to_config(p, degree, seed))?;
            config.trials = Some(trials);
            config.channel = Some(channel);
            config.protocol = Some(params);
        }
        CommandKind::Attack => {
            if p != 2 {
                return Err(CliError::config("grouped attack requires characteristic 2"));
            }
            if let Some(ChannelSpec::Kind(_) | ChannelSpec::Model(_)) = &file.channel {
                return Err(CliError::config("attack always uses the grouped measuring channel"));
            }
            let q = sim.q.or(file.q).ok_or_else(|| CliError::config("attack needs --q"))?;
            if !(0.0..=1.0).contains(&q) {
                return Err(CliError::config(format!("q = {q} is not a probability")));
            }
            config.q = Some(q);
            let trials = sim.trials.or(file.trials).unwrap_or(0);
            if trials > 0 {
                let seed = config
                    .seed
                    .ok_or_else(|| CliError::config(format!("a simulated attack needs --seed or {SEED_ENV}")))?;
                let params = resolve_protocol(&field, sim, file.protocol.unwrap_or_default())?;
                check_protocol(&params.to_config(p, degree, seed))?;
                config.trials = Some(trials);
                config.channel = Some(ChannelModel::GroupedQubit {
                    group_size: degree,
                    q,
                });
                config.protocol = Some(params);
            }
        }
        _ => {
            if sim.trials.is_some() || file.trials.is_some() || file.protocol.is_some() || file.channel.is_some() {
                return Err(CliError::config(format!("`{kind}` takes no protocol or channel settings")));
            }
        }
    }
    Ok(config)
}

fn check_protocol(config: &ProtocolConfig) -> Result<(), CliError> {
    config.validate().map_err(|e| CliError::config(e.to_string()))?;
    config
        .resolved_abort_threshold()
        .map_err(|e| CliError::config(e.to_string()))?;
    Ok(())
}

fn resolve_channel(field: &Field, sim: &SimArgs, file: &FileConfig) -> Result<ChannelModel, CliError> {
    let q = sim.q.or(file.q);
    let qer = sim.qer.or(file.qer);
    let chosen = match sim.channel {
        Some(kind) => ChannelSpec::Kind(kind),
        None => file
            .channel
            .clone()
            .ok_or_else(|| CliError::config("simulate needs --channel"))?,
    };
    let need = |x: Option<f64>, name: &str| x.ok_or_else(|| CliError::config(format!("channel needs --{name}")));
    let bad = |e: qudit_qkd_core::Error| CliError::config(e.to_string());
    let model = match chosen {
        ChannelSpec::Model(m) => {
            if q.is_some() || qer.is_some() {
                return Err(CliError::config("a fully specified channel takes no q or qer"));
            }
            m
        }
        ChannelSpec::Kind(kind) => {
            let wrong = match kind {
                ChannelKind::Noiseless => q.or(qer).map(|_| "q/qer"),
                ChannelKind::PauliIid | ChannelKind::SingleLabel => q.map(|_| "q"),
                _ => qer.map(|_| "qer"),
            };
            if let Some(name) = wrong {
                return Err(CliError::config(format!("{name} does not apply to this channel")));
            }
            match kind {
                ChannelKind::Noiseless => ChannelModel::Noiseless,
                ChannelKind::PauliIid => ChannelModel::depolarizing(field, need(qer, "qer")?).map_err(bad)?,
                ChannelKind::SingleLabel => {
                    ChannelModel::single_label(field, 1.0 - need(qer, "qer")?).map_err(bad)?
                }
                ChannelKind::InterceptResend => ChannelModel::InterceptResend { q: need(q, "q")? },
                ChannelKind::GroupedQubit => ChannelModel::GroupedQubit {
                    group_size: field.degree(),
                    q: need(q, "q")?,
                },
                ChannelKind::PerQubit => ChannelModel::PerQubit { q: need(q, "q")? },
            }
        }
    };
    model.validate(field).map_err(bad)?;
    Ok(model)
}

/// Default test size: a tenth of the expected size of one sifted set.
fn default_test_count(field: &Field, particles: u64) -> u64 {
    let sets = u64::from(field.size()) + 1;
    (particles / (10 * sets * sets)).max(1)
}

fn resolve_protocol(field: &Field, sim: &SimArgs, file: ProtocolFile) -> Result<ProtocolParams, CliError> {
    let particles = sim
        .particles
        .or(file.particles)
        .ok_or_else(|| CliError::config("missing particle count --L"))?;
    let base = ProtocolConfig::new(field.p(), field.degree(), particles, 1);
    Ok(ProtocolParams {
        particles,
        test_count: sim
            .test_count
            .or(file.test_count)
            .unwrap_or_else(|| default_test_count(field, particles)),
        abort_threshold: sim.abort_threshold.or(file.abort_threshold),
        delta: sim.delta.or(file.delta).unwrap_or(base.delta),
        epsilon: sim.epsilon.or(file.epsilon).unwrap_or(base.epsilon),
        ep_rounds_max: sim.ep_rounds_max.or(file.ep_rounds_max).unwrap_or(base.ep_rounds_max),
        epsilon_i: sim.epsilon_i.or(file.epsilon_i).unwrap_or(base.epsilon_i),
        certificate: sim
            .certificate
            .map(Certificate::from)
            .or(file.certificate)
            .unwrap_or(base.certificate),
    })
}
