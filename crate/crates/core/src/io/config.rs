//! Declarative configuration files.
//!
//! One TOML file fully determines a run. Unknown keys anywhere in the file
//! are a hard error (distinct from missing-key and invalid-value errors),
//! and all defaults are materialized into the echoed config so reruns carry
//! no implicit state.

use std::path::Path;

use crate::error::ConfigCode;
use crate::model::SimConfig;
use crate::{Error, Result};

/// Reads, fully validates, and echoes a [`SimConfig`].
pub fn parse_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let value: toml::Value = toml::from_str(text)
        .map_err(|e| Error::config(ConfigCode::BadValue, format!("TOML syntax: {e}")))?;

    // serde's deny_unknown_fields covers structs but reports generic
    // messages; classify unknown/missing keys explicitly for distinct codes.
    let cfg: SimConfig = SimConfig::deserialize(value.clone()).map_err(|e| {
        let msg = e.to_string();
        if msg.contains("unknown field") || msg.contains("unknown variant") {
            Error::config(ConfigCode::UnknownKey, msg)
        } else if msg.contains("missing field") {
            Error::config(ConfigCode::MissingKey, msg)
        } else {
            Error::config(ConfigCode::BadValue, msg)
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes a config with every default materialized.
pub fn echo_config(cfg: &SimConfig) -> Result<String> {
    let mut full = cfg.clone();
    full.report_dt = Some(full.report_dt());
    toml::to_string_pretty(&full)
        .map_err(|e| Error::config(ConfigCode::BadValue, format!("serialize: {e}")))
}

use serde::Deserialize;

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
dim = 1
particles = 16
dt = 0.01
horizon = 0.5
eta = 0.0
diffusivity = 0.05
decay = 0.2
seed = 1

[kernel]
form = "zero"

[bump]
radius = 0.5
amplitude = 0.0

[initial]
kind = "product"
x = { kind = "uniform", center = 0.0, half_width = 0.5 }
v = { kind = "uniform", center = 0.0, half_width = 0.25 }

[grid]
half_width = 4.0
cells_per_axis = 64
"#;

    #[test]
    fn minimal_file_parses_with_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.replicates, 1);
        assert_eq!(cfg.report_dt(), 0.05);
        assert!(matches!(cfg.force, crate::model::ForceSpec::Zero));
    }

    #[test]
    fn unknown_key_is_named_and_coded() {
        let text = format!("{MINIMAL}\ngamm = 1\n");
        let err = parse_config_str(&text).unwrap_err();
        match err {
            Error::Config { code, message } => {
                assert_eq!(code, ConfigCode::UnknownKey);
                assert!(message.contains("gamm"), "message was: {message}");
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn missing_key_is_coded() {
        let text = MINIMAL.replace("dt = 0.01\n", "");
        let err = parse_config_str(&text).unwrap_err();
        match err {
            Error::Config { code, message } => {
                assert_eq!(code, ConfigCode::MissingKey);
                assert!(message.contains("dt"), "message was: {message}");
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn echo_round_trips() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        let echoed = echo_config(&cfg).unwrap();
        let back = parse_config_str(&echoed).unwrap();
        let mut full = cfg;
        full.report_dt = Some(full.report_dt());
        assert_eq!(full, back);
    }
}
