//! File output with atomic writes and error cleanup.
//!
//! Every file lands via write-to-temp-then-rename so a crash never leaves
//! a half-written artifact, and a command that fails midway removes the
//! files it already produced rather than leaving a misleading partial
//! bundle.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Collects the files a command writes so they can be removed as a group
/// if the command fails later.
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Atomically write `name` inside the output directory.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        let tmp = self.dir.join(format!("{name}.tmp"));
        let dest = self.dir.join(name);
        fs::write(&tmp, bytes).map_err(|e| tag(&tmp, e))?;
        fs::rename(&tmp, &dest).map_err(|e| tag(&dest, e))?;
        self.written.push(dest);
        Ok(())
    }

    /// File names written so far, in order.
    pub fn names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect()
    }

    /// Remove everything written so far (used when a command fails after
    /// producing some outputs).
    pub fn discard(&mut self) {
        for path in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
    }
}

fn tag(path: &Path, e: io::Error) -> io::Error {
    io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

/// Run `body` against a fresh output set rooted at `dir`; on error, remove
/// whatever was written before passing the error on.
pub fn with_outputs<T>(
    dir: &Path,
    body: impl FnOnce(&mut OutputSet) -> Result<T, String>,
) -> Result<T, String> {
    let mut out = OutputSet::new(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    match body(&mut out) {
        Ok(v) => Ok(v),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

/// JSON value for a possibly-infinite cutoff (JSON numbers cannot encode
/// infinity, so unbounded renders as the string `"inf"`).
pub fn cutoff_value(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!("inf")
    }
}
