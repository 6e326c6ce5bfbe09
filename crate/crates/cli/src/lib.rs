// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Batch front end for `qudit-qkd-core`.
//!
//! Exit codes: 0 success (a protocol abort is a successful run), 2 usage,
//! 3 configuration, 4 invariant failure, 5 I/O.

use std::fmt;

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, CliConfig, SEED_ENV};
pub use report::{render, Report};
pub use run::{execute, main_with};

#[derive(Debug)]
pub enum CliError {
    Clap(clap::Error),
    Usage(String),
    Config(String),
    Invariant(String),
    Io(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        CliError::Invariant(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{}", e.render()),
            CliError::Usage(m) | CliError::Config(m) | CliError::Invariant(m) | CliError::Io(m) => {
                f.write_str(m)
            }
        }
    }
}

impl std::error::Error for CliError {}
