use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// Output files buffered in memory; nothing touches the disk until the whole
/// run has succeeded, so a failing run leaves no partial artifacts.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_bytes(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_owned(), bytes));
    }

    pub fn push_text(&mut self, name: &str, text: String) {
        self.push_bytes(name, text.into_bytes());
    }

    pub fn push_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::numerical(format!("report serialization: {e}")))?;
        bytes.push(b'\n');
        self.push_bytes(name, bytes);
        Ok(())
    }

    pub fn write_all(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}
