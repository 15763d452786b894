//! On-disk memo of command outputs, keyed by command, descriptor hash and parameters.

use std::fs;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::report::{Inputs, Outputs};

pub const CACHE_ENV: &str = "CMDEG_CACHE_DIR";

pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(enabled: bool) -> Self {
        let dir = enabled.then(|| {
            std::env::var_os(CACHE_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| std::env::temp_dir().join("cmdeg-cache"))
        });
        Self { dir }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    fn path(&self, command: &str, inputs: &Inputs) -> Option<PathBuf> {
        let dir = self.dir.as_ref()?;
        let mut hasher = Sha256::new();
        hasher.update(env!("CARGO_PKG_VERSION"));
        hasher.update([0]);
        hasher.update(command);
        hasher.update([0]);
        hasher.update(serde_json::to_vec(inputs).expect("inputs serialize"));
        Some(dir.join(format!("{}.json", hex::encode(hasher.finalize()))))
    }

    pub fn get(&self, command: &str, inputs: &Inputs) -> Option<Outputs> {
        let text = fs::read(self.path(command, inputs)?).ok()?;
        // a corrupt entry is treated as a miss and overwritten later
        serde_json::from_slice(&text).ok()
    }

    /// Best effort: a cache that cannot be written is silently skipped.
    pub fn put(&self, command: &str, inputs: &Inputs, outputs: &Outputs) {
        let Some(path) = self.path(command, inputs) else {
            return;
        };
        if let Some(parent) = path.parent() {
            let _ = fs::create_dir_all(parent);
        }
        let tmp = path.with_extension("tmp");
        if let Ok(bytes) = serde_json::to_vec(outputs) {
            if fs::write(&tmp, bytes).is_ok() {
                let _ = fs::rename(&tmp, &path);
            }
        }
    }
}
