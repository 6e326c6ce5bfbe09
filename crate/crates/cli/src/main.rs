// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

use std::process::ExitCode;

fn main() -> ExitCode {
    let seed = std::env::var(qudit_qkd_cli::SEED_ENV).ok();
    let mut stdout = std::io::stdout().lock();
    ExitCode::from(qudit_qkd_cli::main_with(std::env::args_os(), seed.as_deref(), &mut stdout))
}
