//! Output-file helpers: deterministic CSV/JSON emission with the config
//! fingerprint embedded in every file.

use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::commands::CliError;
use rotodop::config::RunConfig;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

pub fn file_path(dir: &Path, stem: &str, fingerprint: &str, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_{fingerprint}.{ext}"))
}

/// CSV writer that prefixes a fingerprint comment line before the RFC-4180
/// header row.
pub fn write_csv<F>(path: &Path, fingerprint: &str, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let mut w = BufWriter::new(
        File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
    );
    (|| -> std::io::Result<()> {
        writeln!(w, "# config_fingerprint={fingerprint}")?;
        body(&mut w)?;
        w.flush()
    })()
    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(
        File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
    );
    (|| -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()
    })()
    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Sidecar carrying the fingerprint and the full configuration; rerunning
/// the same command on the embedded config reproduces the data files.
#[derive(Serialize)]
pub struct Sidecar<'a> {
    pub fingerprint: String,
    pub command: &'a str,
    pub config: &'a RunConfig,
}

pub fn write_sidecar(
    dir: &Path,
    stem: &str,
    command: &str,
    cfg: &RunConfig,
) -> Result<(), CliError> {
    let fingerprint = cfg.fingerprint();
    let path = file_path(dir, &format!("{stem}_sidecar"), &fingerprint, "json");
    write_json(
        &path,
        &Sidecar {
            fingerprint,
            command,
            config: cfg,
        },
    )
}
