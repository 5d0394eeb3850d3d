//! Output-directory plumbing: artifact writes, the run manifest, and
//! digit formatting conventions.
//!
//! CSV cells carry full round-trip precision (`{}` on f64); stdout
//! summaries round to four significant digits.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::Config;
use crate::error::{runtime, validation, CliResult};

/// Writes one artifact, failing with a runtime error (the config was
/// already validated; a failure here is an I/O problem mid-experiment).
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

/// Resolves the output directory: the `--out` flag wins over the
/// `out_dir` config field; one of the two must be present. The directory
/// is created here so an unusable location fails before any work runs.
pub fn resolve_out_dir(cfg: &mut Config, flag: Option<PathBuf>) -> CliResult<PathBuf> {
    let dir = match flag {
        Some(p) => {
            cfg.optional("out_dir");
            p
        }
        None => PathBuf::from(cfg.require("out_dir")?),
    };
    fs::create_dir_all(&dir)
        .map_err(|e| validation(format!("cannot create output directory {}: {e}", dir.display())))?;
    cfg.set("out_dir", dir.display().to_string());
    Ok(dir)
}

/// Records what ran and with which effective settings; the `config:`
/// block is a verbatim re-runnable config. Written after the artifacts so
/// `elapsed_seconds` covers the whole experiment.
pub fn write_manifest(dir: &Path, command: &str, cfg: &Config, started: Instant) -> CliResult<()> {
    let elapsed = started.elapsed().as_secs_f64();
    let body = format!(
        "manifest 1\ncommand {command}\nelapsed_seconds {elapsed}\nconfig:\n{}",
        cfg.echo()
    );
    write_artifact(dir, "manifest.txt", &body)
}

/// Four significant digits for human-facing summaries.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}
