use std::path::{Path, PathBuf};

use beamkit::{Error, Result};

/// Files written by one command. Unless `commit` is called, every recorded
/// file is deleted when the guard drops, so a failed command leaves no
/// partial outputs behind.
pub struct Outputs {
    files: Vec<PathBuf>,
    done: bool,
}

impl Outputs {
    pub fn new() -> Self {
        Outputs {
            files: Vec::new(),
            done: false,
        }
    }

    pub fn dir(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        Ok(Outputs::new())
    }

    /// Records `path` and returns it for writing.
    pub fn add(&mut self, path: PathBuf) -> PathBuf {
        self.files.push(path.clone());
        path
    }

    pub fn text(&mut self, path: PathBuf, body: &str) -> Result<()> {
        let p = self.add(path);
        std::fs::write(&p, body).map_err(|e| Error::Io { path: p, source: e })
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.done = true;
        std::mem::take(&mut self.files)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.done {
            for f in &self.files {
                let _ = std::fs::remove_file(f);
                let _ = std::fs::remove_file(beamkit::dataio::sidecar_path(f));
            }
        }
    }
}
