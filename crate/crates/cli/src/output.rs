use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::exit::{CliError, CliResult};

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| {
            CliError::software(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, text)
            .map_err(|e| CliError::software(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn write_json(&self, name: &str, doc: &Value) -> CliResult<PathBuf> {
        let mut text =
            serde_json::to_string_pretty(doc).map_err(|e| CliError::software(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }
}

pub fn to_value<T: Serialize>(x: &T) -> CliResult<Value> {
    serde_json::to_value(x).map_err(|e| CliError::software(e.to_string()))
}
