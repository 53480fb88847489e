//! Output directory handling. Files are never overwritten: when any name of a
//! run's file set is taken, the whole set gets a `-<run id>` suffix.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct OutputSet {
    dir: PathBuf,
    suffix: String,
    written: Vec<String>,
}

fn with_suffix(name: &str, suffix: &str) -> String {
    match name.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}{suffix}.{ext}"),
        None => format!("{name}{suffix}"),
    }
}

impl OutputSet {
    /// Reserves `names` (plus `manifest.json`) in `dir`, creating it if needed.
    pub fn reserve(dir: &Path, names: &[&str]) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let all: Vec<&str> = names.iter().copied().chain(["manifest.json"]).collect();
        let mut run_id = 0u32;
        loop {
            let suffix = if run_id == 0 {
                String::new()
            } else {
                format!("-{run_id}")
            };
            if all
                .iter()
                .all(|n| !dir.join(with_suffix(n, &suffix)).exists())
            {
                return Ok(OutputSet {
                    dir: dir.to_path_buf(),
                    suffix,
                    written: Vec::new(),
                });
            }
            run_id += 1;
        }
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let file = with_suffix(name, &self.suffix);
        let path = self.dir.join(&file);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(file);
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn manifest_name(&self) -> String {
        with_suffix("manifest.json", &self.suffix)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}
