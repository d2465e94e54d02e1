use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{Instance, Violation};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Schema mismatch; `path` locates the offending field.
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("instance failed validation: {}", join(.0))]
    Invalid(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub fn to_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(instance).expect("instances always serialize")
}

pub fn save(instance: &Instance, dest: impl AsRef<Path>) -> std::io::Result<()> {
    let mut text = to_json(instance);
    text.push('\n');
    fs::write(dest, text)
}

/// Parses and validates an instance document.
pub fn load_str(text: &str) -> Result<Instance, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let instance: Instance = serde_path_to_error::deserialize(de).map_err(|e| LoadError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let violations = instance.validate();
    if violations.is_empty() {
        Ok(instance)
    } else {
        Err(LoadError::Invalid(violations))
    }
}

pub fn load(source: impl AsRef<Path>) -> Result<Instance, LoadError> {
    load_str(&fs::read_to_string(source)?)
}
