//! Scenario configuration: TOML files with explicit units in the key names,
//! strict unknown-key rejection, and repeatable dotted-path overrides.
//!
//! Gains are stored linear internally; `mean_gain_db` (and dB-valued sweep
//! points) are converted at parse time.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{ControllerKind, ScenarioConfig, SimError, VChoice};
use crate::stochastic::{db_to_linear, ChannelModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid override '{0}': expected key.path=value")]
    BadOverride(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scenario(#[from] SimError),
}

/// Unit for emitted rate values; internal math is always natural-log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RateUnit {
    #[default]
    Nats,
    Bits,
}

impl RateUnit {
    /// Multiplier applied to nats at emission time.
    pub fn scale(&self) -> f64 {
        match self {
            RateUnit::Nats => 1.0,
            RateUnit::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    battery: BatterySection,
    arrivals: ArrivalSection,
    channel: ChannelSection,
    run: RunSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BatterySection {
    e_min_joule: f64,
    e_max_joule: f64,
    e_c_max_joule: f64,
    p_max_watt: f64,
    dt_second: f64,
    rho_c: f64,
    rho_d: f64,
}

impl Default for BatterySection {
    fn default() -> Self {
        let b = crate::battery::BatteryConfig::default();
        BatterySection {
            e_min_joule: b.e_min,
            e_max_joule: b.e_max,
            e_c_max_joule: b.e_c_max,
            p_max_watt: b.p_max,
            dt_second: b.dt,
            rho_c: b.rho_c,
            rho_d: b.rho_d,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ArrivalSection {
    lambda_per_slot: f64,
    alpha_joule: f64,
}

impl Default for ArrivalSection {
    fn default() -> Self {
        ArrivalSection {
            lambda_per_slot: 0.5,
            alpha_joule: 0.2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ChannelSection {
    model: String,
    /// Mean per-branch gain, linear scale; exclusive with `mean_gain_db`.
    mean_gain: Option<f64>,
    mean_gain_db: Option<f64>,
    outage_eta: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            model: "rayleigh-scalar".into(),
            mean_gain: None,
            mean_gain_db: None,
            outage_eta: 0.01,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunSection {
    controller: String,
    v: VChoice,
    horizon: u64,
    replicas: u64,
    /// Initial battery level; defaults to the full capacity.
    e_b0_joule: Option<f64>,
    seed: u64,
    rate_unit: RateUnit,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            controller: "alg2".into(),
            v: VChoice::VMax,
            horizon: 20_000,
            replicas: 100,
            e_b0_joule: None,
            seed: 0,
            rate_unit: RateUnit::Nats,
        }
    }
}

impl std::str::FromStr for ChannelModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        if s == "rayleigh-scalar" {
            return Ok(ChannelModel::RayleighScalar);
        }
        if let Some(n) = s.strip_prefix("miso:") {
            let n = n
                .parse()
                .map_err(|_| format!("bad antenna count in '{s}'"))?;
            return Ok(ChannelModel::Miso { n });
        }
        if let Some(n) = s.strip_prefix("simo:") {
            let n = n
                .parse()
                .map_err(|_| format!("bad antenna count in '{s}'"))?;
            return Ok(ChannelModel::Simo { n });
        }
        if let Some(dims) = s.strip_prefix("mimo:") {
            let (nt, nr) = dims
                .split_once('x')
                .ok_or_else(|| format!("expected mimo:NTxNR, got '{s}'"))?;
            let nt = nt
                .parse()
                .map_err(|_| format!("bad antenna count in '{s}'"))?;
            let nr = nr
                .parse()
                .map_err(|_| format!("bad antenna count in '{s}'"))?;
            return Ok(ChannelModel::Mimo { nt, nr });
        }
        Err(format!(
            "unknown channel model '{s}' (expected rayleigh-scalar, miso:N, simo:N, or mimo:NTxNR)"
        ))
    }
}

/// A parsed scenario plus presentation options.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub scenario: ScenarioConfig,
    pub rate_unit: RateUnit,
}

/// Loads a scenario: the file (or built-in defaults when `path` is `None`),
/// then dotted-path overrides like `battery.e_max_joule=10`, then validation.
/// Unknown keys anywhere are errors.
pub fn parse_config(
    path: Option<&Path>,
    overrides: &[String],
) -> Result<LoadedConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
            path: p.display().to_string(),
            source,
        })?,
        None => String::new(),
    };
    let mut value: toml::Value = toml::from_str(&text)?;
    for entry in overrides {
        apply_override(&mut value, entry)?;
    }
    let file: FileConfig = value.try_into()?;
    build_scenario(file)
}

fn apply_override(root: &mut toml::Value, entry: &str) -> Result<(), ConfigError> {
    let (key_path, raw) = entry
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(entry.to_string()))?;
    let segments: Vec<&str> = key_path.trim().split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(ConfigError::BadOverride(entry.to_string()));
    }
    // parse the value as a TOML literal; bare words fall back to strings
    let leaf: toml::Value = match format!("x = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut table) => table.remove("x").expect("literal just inserted"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let mut node = root;
    for segment in &segments[..segments.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| ConfigError::BadOverride(entry.to_string()))?;
        node = table
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| ConfigError::BadOverride(entry.to_string()))?;
    table.insert(segments[segments.len() - 1].to_string(), leaf);
    Ok(())
}

fn build_scenario(file: FileConfig) -> Result<LoadedConfig, ConfigError> {
    let battery = crate::battery::BatteryConfig {
        e_min: file.battery.e_min_joule,
        e_max: file.battery.e_max_joule,
        e_c_max: file.battery.e_c_max_joule,
        p_max: file.battery.p_max_watt,
        dt: file.battery.dt_second,
        rho_c: file.battery.rho_c,
        rho_d: file.battery.rho_d,
    };
    let mean_gain = match (file.channel.mean_gain, file.channel.mean_gain_db) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid(
                "channel.mean_gain and channel.mean_gain_db are mutually exclusive".into(),
            ))
        }
        (Some(linear), None) => linear,
        (None, Some(db)) => db_to_linear(db),
        (None, None) => db_to_linear(10.0),
    };
    let model: ChannelModel = file.channel.model.parse().map_err(ConfigError::Invalid)?;
    let controller: ControllerKind = file.run.controller.parse().map_err(ConfigError::Invalid)?;
    let scenario = ScenarioConfig {
        battery,
        arrivals: crate::stochastic::ArrivalConfig {
            lambda: file.arrivals.lambda_per_slot,
            alpha: file.arrivals.alpha_joule,
        },
        channel: crate::stochastic::ChannelConfig {
            model,
            mean_gain,
            outage_eta: file.channel.outage_eta,
            seed: file.run.seed,
        },
        controller,
        v: file.run.v,
        horizon: file.run.horizon,
        replicas: file.run.replicas,
        e_b0: file.run.e_b0_joule.unwrap_or(battery.e_max),
        seed: file.run.seed,
    };
    scenario.validate()?;
    Ok(LoadedConfig {
        scenario,
        rate_unit: file.run.rate_unit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_gives_defaults() {
        let f = write_temp("");
        let loaded = parse_config(Some(f.path()), &[]).unwrap();
        let s = loaded.scenario;
        assert_eq!(s.battery.e_max, 50.0);
        assert_eq!(s.battery.e_c_max, 0.3);
        assert_eq!(s.battery.p_max, 0.5);
        assert_eq!(s.arrivals.lambda, 0.5);
        assert_eq!(s.arrivals.alpha, 0.2);
        assert_eq!(s.channel.mean_gain, 10.0);
        assert_eq!(s.channel.outage_eta, 0.01);
        assert_eq!(s.controller, ControllerKind::Alg2);
        assert_eq!(s.v, VChoice::VMax);
        assert_eq!(s.horizon, 20_000);
        assert_eq!(s.replicas, 100);
        assert_eq!(s.e_b0, 50.0);
        assert_eq!(loaded.rate_unit, RateUnit::Nats);
    }

    #[test]
    fn no_file_gives_defaults() {
        let loaded = parse_config(None, &[]).unwrap();
        assert_eq!(loaded.scenario.battery.e_max, 50.0);
    }

    #[test]
    fn override_is_applied() {
        let loaded = parse_config(None, &["battery.e_max_joule=10".to_string()]).unwrap();
        assert_eq!(loaded.scenario.battery.e_max, 10.0);
        // e_b0 follows the new capacity when unset
        assert_eq!(loaded.scenario.e_b0, 10.0);
    }

    #[test]
    fn integer_values_coerce_to_floats() {
        let f = write_temp("[run]\nv = 1\n\n[battery]\ne_max_joule = 10\n");
        let loaded = parse_config(Some(f.path()), &[]).unwrap();
        assert_eq!(loaded.scenario.v, VChoice::Value(1.0));
        assert_eq!(loaded.scenario.battery.e_max, 10.0);
    }

    #[test]
    fn override_accepts_strings_and_vmax() {
        let loaded = parse_config(
            None,
            &[
                "run.controller=greedy".to_string(),
                "run.v=vmax".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(loaded.scenario.controller, ControllerKind::Greedy);
        assert_eq!(loaded.scenario.v, VChoice::VMax);
        let loaded = parse_config(None, &["run.v=0.5".to_string()]).unwrap();
        assert_eq!(loaded.scenario.v, VChoice::Value(0.5));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = write_temp("[battery]\ne_maximum_joule = 10\n");
        assert!(matches!(
            parse_config(Some(f.path()), &[]),
            Err(ConfigError::Parse(_))
        ));
        assert!(parse_config(None, &["battery.bogus=1".to_string()]).is_err());
    }

    #[test]
    fn invariant_violations_are_rejected() {
        // charge cap above the discharge cap
        let f = write_temp("[battery]\ne_c_max_joule = 0.9\n");
        assert!(parse_config(Some(f.path()), &[]).is_err());
    }

    #[test]
    fn db_and_linear_gain_are_exclusive() {
        let f = write_temp("[channel]\nmean_gain = 10.0\nmean_gain_db = 10.0\n");
        assert!(matches!(
            parse_config(Some(f.path()), &[]),
            Err(ConfigError::Invalid(_))
        ));
        let f = write_temp("[channel]\nmean_gain_db = 20.0\n");
        let loaded = parse_config(Some(f.path()), &[]).unwrap();
        assert!((loaded.scenario.channel.mean_gain - 100.0).abs() < 1e-9);
    }

    #[test]
    fn model_strings_parse() {
        assert_eq!(
            "rayleigh-scalar".parse::<ChannelModel>().unwrap(),
            ChannelModel::RayleighScalar
        );
        assert_eq!(
            "miso:4".parse::<ChannelModel>().unwrap(),
            ChannelModel::Miso { n: 4 }
        );
        assert_eq!(
            "simo:2".parse::<ChannelModel>().unwrap(),
            ChannelModel::Simo { n: 2 }
        );
        assert_eq!(
            "mimo:2x3".parse::<ChannelModel>().unwrap(),
            ChannelModel::Mimo { nt: 2, nr: 3 }
        );
        assert!("rician".parse::<ChannelModel>().is_err());
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(
            parse_config(Some(Path::new("/no/such/file.toml")), &[]),
            Err(ConfigError::Io { .. })
        ));
    }

    #[test]
    fn rate_unit_parses() {
        let f = write_temp("[run]\nrate_unit = \"bits\"\n");
        let loaded = parse_config(Some(f.path()), &[]).unwrap();
        assert_eq!(loaded.rate_unit, RateUnit::Bits);
        assert!((loaded.rate_unit.scale() - std::f64::consts::LOG2_E).abs() < 1e-12);
    }
}
