//! Batch front end: experiment configs in, CSV/JSON artifacts and a run
//! manifest out.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Command, ExperimentConfig, GraphSpec, OUTPUT_DIR_ENV};
pub use error::CliError;
pub use output::{Manifest, MANIFEST};

use output::Artifacts;

/// Runs a config and writes its manifest. A failed assertion-class check is
/// recorded in the manifest rather than returned.
pub fn run_to_manifest(cfg: &ExperimentConfig) -> Result<Manifest, CliError> {
    run_inner(cfg).map(|(m, _)| m)
}

/// Runs a config; a failed check becomes [`CliError::Assertion`] after all
/// artifacts and the manifest have been written.
pub fn run(cfg: &ExperimentConfig) -> Result<Manifest, CliError> {
    match run_inner(cfg)? {
        (_, Some(err)) => Err(err),
        (m, None) => Ok(m),
    }
}

fn run_inner(cfg: &ExperimentConfig) -> Result<(Manifest, Option<CliError>), CliError> {
    cfg.validate()?;
    let mut out = Artifacts::create(&cfg.output_dir())?;
    let mut task = || -> Result<Option<CliError>, CliError> {
        match cfg.command {
            Command::Build => commands::build(cfg, &mut out),
            Command::Kernel => commands::kernel(cfg, &mut out),
            Command::Resistance => commands::resistance(cfg, &mut out),
            Command::Renorm => commands::renorm(cfg, &mut out),
            Command::Harnack => commands::harnack(cfg, &mut out),
            Command::Llt => commands::llt(cfg, &mut out),
            Command::Delta => commands::delta(cfg, &mut out),
            Command::Report => commands::report(cfg, &mut out),
        }
    };
    let check = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?
            .install(task)?,
        None => task()?,
    };
    let failed = check.as_ref().map(ToString::to_string);
    let manifest = out.finish(cfg, failed)?;
    Ok((manifest, check))
}
