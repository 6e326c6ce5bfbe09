// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Finite fields, generalized Pauli operators and the order-`(N+1)`
//! operator `T` for qudit prepare-and-measure QKD, together with the
//! purification recursions, tolerable error rates and a Pauli-frame
//! simulator of the key distribution protocol.
//!
//! ```
//! use qudit_qkd_core::{Field, TOperator};
//!
//! let f = Field::new(2, 2).unwrap();
//! let t = TOperator::new(&f).unwrap();
//! assert_eq!(t.report().order, Some(5));
//! assert_eq!(t.equiv_classes().len(), 4);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod field;
pub mod matrix;
pub mod pauli;
pub mod sim;
pub mod t_operator;

pub use error::{Error, Result};
pub use field::{Field, FieldElement, QuadraticExtension};
pub use matrix::{ComplexMatrix, StateVector};
pub use pauli::{ErrorLabel, PauliLabel, Phase};
pub use t_operator::{EquivClassPartition, SymplecticParams, TOperator, VerificationReport};
pub use analysis::{AttackReport, ErrorDistribution, ThresholdTable};
pub use sim::{ChannelModel, ProtocolConfig, SimReport};
