// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the core library.
///
/// Protocol aborts are not errors; they are reported inside
/// [`SimReport`](crate::sim::SimReport).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be positive")]
    ZeroDegree,
    #[error("field size {p}^{n} exceeds the 2^16 bound")]
    FieldTooLarge { p: u32, n: u32 },
    #[error("element index {index} is not in GF({size})")]
    ForeignElement { index: u32, size: u32 },
    #[error("field mismatch: GF({left}) vs GF({right})")]
    FieldMismatch { left: u32, right: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("T operator is only built for N <= 16 (got {0})")]
    OperatorTooLarge(u32),
    #[error("invariant violated: {identity} (residual {residual:e})")]
    InvariantViolation { identity: String, residual: f64 },
    #[error("invalid error distribution: {0}")]
    InvalidDistribution(String),
    #[error("degenerate distribution: purification denominator is zero")]
    DegenerateDistribution,
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("channel model does not fit the field: {0}")]
    ChannelMismatch(String),
    #[error("set S_{set} holds {available} registers but {requested} were requested for testing")]
    InsufficientParticles {
        set: usize,
        available: usize,
        requested: usize,
    },
    #[error("repetition length {r} exceeds the {available} available registers")]
    InsufficientRegisters { r: usize, available: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
