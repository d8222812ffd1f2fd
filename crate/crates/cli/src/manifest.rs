use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub wall_time_s: f64,
}

pub struct Run {
    manifest: RunManifest,
    start: Instant,
}

impl Run {
    pub fn start(subcommand: &str, config: Option<&Path>, seed: u64) -> Self {
        Self {
            manifest: RunManifest {
                subcommand: subcommand.into(),
                config: config.map(Path::to_path_buf),
                seed,
                inputs: Vec::new(),
                outputs: Vec::new(),
                version: env!("CARGO_PKG_VERSION").into(),
                wall_time_s: 0.0,
            },
            start: Instant::now(),
        }
    }

    pub fn input(&mut self, p: impl Into<PathBuf>) {
        self.manifest.inputs.push(p.into());
    }

    pub fn output(&mut self, p: impl Into<PathBuf>) {
        self.manifest.outputs.push(p.into());
    }

    /// Writes `path` via a temporary sibling and a rename so readers never
    /// see a partial manifest. Fails if a listed output is missing.
    pub fn finish(mut self, path: &Path) -> Result<()> {
        for o in &self.manifest.outputs {
            if !o.exists() {
                bail!("declared output {} was not written", o.display());
            }
        }
        self.manifest.wall_time_s = self.start.elapsed().as_secs_f64();
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&tmp, text + "\n").with_context(|| format!("writing {}", tmp.display()))?;
        std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
        Ok(())
    }
}

/// Manifest path for a single-file output: `matrix.csv` gets `matrix.run.json`.
pub fn beside(file: &Path) -> PathBuf {
    file.with_extension("run.json")
}

pub const DIR_MANIFEST: &str = "run.json";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_missing_outputs() {
        let d = tempfile::tempdir().unwrap();
        let mut run = Run::start("x", None, 1);
        run.output(d.path().join("absent.csv"));
        let m = d.path().join(DIR_MANIFEST);
        assert!(run.finish(&m).is_err());
        assert!(!m.exists());
    }

    #[test]
    fn leaves_no_temporary_behind() {
        let d = tempfile::tempdir().unwrap();
        let out = d.path().join("a.csv");
        std::fs::write(&out, "x").unwrap();
        let mut run = Run::start("x", None, 7);
        run.output(&out);
        let m = beside(&out);
        run.finish(&m).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
        assert_eq!(v["seed"], 7);
        assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 2);
    }
}
