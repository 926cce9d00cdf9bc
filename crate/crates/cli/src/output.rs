//! Output files: every file starts with a comment header recording the
//! software version, config hash, seed, and model, and partially written
//! outputs are removed when a command fails.

use anyhow::{Context, Result};
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Header {
    pub config_hash: String,
    pub seed: u64,
    pub model: String,
}

impl Header {
    pub fn lines(&self) -> String {
        format!(
            "# citegauge {}\n# config_hash: {}\n# seed: {}\n# model: {}\n",
            VERSION, self.config_hash, self.seed, self.model
        )
    }
}

/// Tracks files written by a command; files not committed by the end of the
/// command are deleted, so failures leave no partial outputs behind.
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<OutputSet> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutputSet { dir: dir.to_path_buf(), written: Vec::new(), committed: false })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a file as header + body.
    pub fn write(&mut self, name: &str, header: &Header, body: &str) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, format!("{}{}", header.lines(), body))
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Write a file whose body is produced by a path-taking writer, then
    /// prepend the header.
    pub fn write_via<F>(&mut self, name: &str, header: &Header, writer: F) -> Result<PathBuf>
    where
        F: FnOnce(&Path) -> citegauge_core::Result<()>,
    {
        let path = self.path(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        writer(&tmp).with_context(|| format!("writing {}", path.display()))?;
        let body = std::fs::read_to_string(&tmp)?;
        std::fs::remove_file(&tmp).ok();
        std::fs::write(&path, format!("{}{}", header.lines(), body))
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                std::fs::remove_file(path).ok();
            }
        }
    }
}
