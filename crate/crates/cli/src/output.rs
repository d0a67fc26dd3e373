//! Output files. Every CSV starts with a provenance comment line
//! `# config_hash=<sha256> threads=<n>` followed by the header row.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub threads: usize,
}

impl Provenance {
    pub fn line(&self) -> String {
        format!("# config_hash={} threads={}", self.config_hash, self.threads)
    }
}

/// Output directory with the run's provenance.
#[derive(Debug, Clone)]
pub struct OutDir {
    pub dir: PathBuf,
    pub prov: Provenance,
}

impl OutDir {
    pub fn create(dir: &Path, prov: Provenance) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(OutDir { dir: dir.to_path_buf(), prov })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Open `name` for writing with the provenance line already in place.
    pub fn csv(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        writeln!(w, "{}", self.prov.line())?;
        Ok(w)
    }

    /// Resolved configuration, for rerunning a result.
    pub fn write_config(&self, canonical: &str) -> Result<(), CliError> {
        let mut w = BufWriter::new(File::create(self.path("config.resolved.ini"))?);
        writeln!(w, "{}", self.prov.line())?;
        w.write_all(canonical.as_bytes())?;
        w.flush()?;
        Ok(())
    }
}
