//! The bundled preset catalogue.

use serde_json::Value;

use crate::error::{CliError, Result};

const CATALOGUE: &str = include_str!("../presets/presets.json");

fn catalogue() -> serde_json::Map<String, Value> {
    let doc: Value = serde_json::from_str(CATALOGUE).expect("bundled catalogue is valid JSON");
    match doc.get("presets") {
        Some(Value::Object(map)) => map.clone(),
        _ => panic!("bundled catalogue has no `presets` object"),
    }
}

/// Preset names in catalogue order.
pub fn names() -> Vec<String> {
    catalogue().keys().cloned().collect()
}

/// `(name, description)` pairs.
pub fn list() -> Vec<(String, String)> {
    catalogue()
        .into_iter()
        .map(|(k, v)| {
            let d = v
                .get("description")
                .and_then(Value::as_str)
                .unwrap_or("")
                .to_string();
            (k, d)
        })
        .collect()
}

/// The scenario document stored under `name`.
pub fn preset(name: &str) -> Result<Value> {
    catalogue()
        .remove(name)
        .ok_or_else(|| CliError::UnknownPreset {
            name: name.to_string(),
            valid: names(),
        })
}
