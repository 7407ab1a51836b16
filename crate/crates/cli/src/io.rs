//! File helpers shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use dnsc_core::curation::ClipManifestEntry;
use dnsc_core::jsonl;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{require, CliError, ErrorKind, Result};

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    require(path)?;
    jsonl::read_jsonl(path).map_err(|e| CliError::new(ErrorKind::Processing, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    jsonl::write_jsonl(path, items).map_err(CliError::processing)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    require(path)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::processing(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::processing(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::processing)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::processing(format!("{}: {e}", path.display())))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::processing(format!("{}: {e}", path.display())))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ClipManifestEntry>> {
    read_jsonl(path)
}

/// A manifest path that must be set in the config.
pub fn configured<'a>(path: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::config(format!("corpus.{name} is not set")))
}

/// `path` relative to `root` when it lies inside it, so manifests do not
/// depend on where the output directory lives.
pub fn relative_to(path: &Path, root: &Path) -> PathBuf {
    path.strip_prefix(root).map(Path::to_path_buf).unwrap_or_else(|_| path.to_path_buf())
}

/// Expand directories into the sorted list of `.wav` files they contain.
pub fn expand_wavs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::processing(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}
