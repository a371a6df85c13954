//! Command-line front end for the `iapvq` codebook design library.
//!
//! Every command that writes files also writes `<output>.manifest.json`
//! holding the resolved invocation and SHA-256 digests of its inputs and
//! outputs; `iapvq replay` re-runs such a manifest and checks the bytes.
//!
//! Exit codes: 2 bad arguments, 3 unreadable or malformed input, 4 algorithm
//! failure, 5 digest or replay mismatch.

pub mod args;
mod commands;
pub mod error;
mod input;
pub mod manifest;
pub mod report;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;

use crate::args::{Cli, Command, ReplayArgs};
use crate::commands::{decode_cmd, encode_cmd, eval_cmd, redirect_outputs, synth_cmd, train, Outcome};
use crate::error::{CliError, CliResult};
use crate::manifest::{FileDigest, Manifest};

pub use input::parse_vectors;

fn configure_threads(threads: usize) -> CliResult<()> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

/// Runs `cmd`, writing its manifest sidecar if it produced files.
fn execute(cmd: &Command) -> CliResult<Outcome> {
    let outcome = match cmd {
        Command::Train(a) => train(a)?,
        Command::Encode(a) => encode_cmd(a)?,
        Command::Decode(a) => decode_cmd(a)?,
        Command::Eval(a) => eval_cmd(a)?,
        Command::Compare(a) => report::compare(a)?,
        Command::Synth(a) => synth_cmd(a)?,
        Command::Replay(a) => replay(a)?,
    };
    if matches!(cmd, Command::Replay(_)) {
        return Ok(outcome);
    }
    if let Some(primary) = outcome.outputs.first() {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            invocation: absolute_paths(cmd.clone()),
            inputs: digests(&outcome.inputs)?,
            outputs: digests(&outcome.outputs)?,
            results: outcome.results.clone(),
        };
        manifest.write(&Manifest::sidecar_path(primary))?;
    }
    Ok(outcome)
}

fn digests(paths: &[std::path::PathBuf]) -> CliResult<Vec<FileDigest>> {
    paths.iter().map(|p| FileDigest::of(p)).collect()
}

fn absolute_paths(mut cmd: Command) -> Command {
    use manifest::absolute;
    let fix = |p: &mut std::path::PathBuf| *p = absolute(p);
    match &mut cmd {
        Command::Train(a) => {
            fix(&mut a.input);
            fix(&mut a.out);
        }
        Command::Encode(a) => {
            fix(&mut a.input);
            fix(&mut a.codebook);
            fix(&mut a.out);
        }
        Command::Decode(a) => {
            fix(&mut a.input);
            fix(&mut a.codebook);
            fix(&mut a.out);
        }
        Command::Eval(a) => {
            fix(&mut a.reference);
            fix(&mut a.reconstructed);
        }
        Command::Compare(a) => {
            a.images.iter_mut().for_each(fix);
            fix(&mut a.out);
            a.universal.iter_mut().for_each(fix);
            a.trace_dir.iter_mut().for_each(fix);
        }
        Command::Synth(a) => fix(&mut a.out),
        Command::Replay(a) => {
            fix(&mut a.manifest);
            fix(&mut a.out_dir);
        }
    }
    cmd
}

fn replay(a: &ReplayArgs) -> CliResult<Outcome> {
    let manifest = Manifest::read(&a.manifest)?;
    for input in &manifest.inputs {
        let now = FileDigest::of(&input.path)?;
        if now.sha256 != input.sha256 {
            return Err(CliError::Digest {
                expected: input.sha256.clone(),
                actual: now.sha256,
            });
        }
    }
    let mut cmd = manifest.invocation.clone();
    redirect_outputs(&mut cmd, &a.out_dir)?;
    let outcome = execute(&cmd)?;
    if outcome.outputs.len() != manifest.outputs.len() {
        return Err(CliError::Replay(format!(
            "recorded {} outputs, replay wrote {}",
            manifest.outputs.len(),
            outcome.outputs.len()
        )));
    }
    let mut out = Outcome::default();
    for (recorded, path) in manifest.outputs.iter().zip(&outcome.outputs) {
        let now = FileDigest::of(path)?;
        if now.sha256 != recorded.sha256 {
            return Err(CliError::Replay(format!(
                "{} differs from {} ({} vs {})",
                path.display(),
                recorded.path.display(),
                now.sha256,
                recorded.sha256
            )));
        }
        out.put(&path.display().to_string(), "identical");
    }
    out.outputs = outcome.outputs;
    Ok(out)
}

/// Parses `args`, runs the command, prints results as `key=value` lines and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads(cli.threads).and_then(|()| execute(&cli.command));
    match result {
        Ok(outcome) => {
            for (k, v) in &outcome.results {
                println!("{k}={v}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Path of the manifest written next to `output`.
pub fn manifest_path(output: &Path) -> std::path::PathBuf {
    Manifest::sidecar_path(output)
}
