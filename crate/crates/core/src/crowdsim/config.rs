//! Scenario configuration and its text formats.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Narrow corridor.
    #[serde(alias = "nc")]
    NC,
    /// Four-way intersection.
    #[serde(alias = "fi")]
    FI,
    /// Two rooms joined by a bottleneck gap.
    #[serde(alias = "ba")]
    BA,
    /// Obstacle-free square arena.
    #[serde(alias = "open", alias = "Open")]
    OPEN,
}

/// Main pedestrian flow relative to the robot's travel direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Downstream: the crowd walks the same way as the robot.
    #[serde(alias = "dt")]
    DT,
    /// Upstream: the crowd walks against the robot.
    #[serde(alias = "ut")]
    UT,
}

/// How pedestrians move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PedMode {
    #[default]
    SocialForce,
    /// Straight lines at the initial velocity, ignoring everything.
    ConstantVelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub direction: Direction,
    pub counterflow: bool,
    pub ped_count: usize,
    pub minor_flow_fraction: f64,
    pub corridor_width: f64,
    pub corridor_length: f64,
    pub bottleneck_gap: f64,
    pub arena_size: f64,
    pub ped_speed: f64,
    pub ped_speed_spread: f64,
    pub ped_mode: PedMode,
    /// Whether pedestrians react to the robot at all.
    pub robot_visible: bool,
    /// Respawn pedestrians at their lane start once they arrive.
    pub recycle: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kind: ScenarioKind::NC,
            direction: Direction::DT,
            counterflow: false,
            ped_count: 20,
            minor_flow_fraction: 0.2,
            corridor_width: 4.0,
            corridor_length: 24.0,
            bottleneck_gap: 1.5,
            arena_size: 20.0,
            ped_speed: 1.2,
            ped_speed_spread: 0.15,
            ped_mode: PedMode::SocialForce,
            robot_visible: true,
            recycle: true,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind, direction: Direction, ped_count: usize, seed: u64) -> Self {
        ScenarioConfig { kind, direction, ped_count, seed, ..Default::default() }
    }

    pub fn with_counterflow(mut self, on: bool) -> Self {
        self.counterflow = on;
        self
    }

    /// Short label such as `NC-DT` or `FI-UT-CF`.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            ScenarioKind::NC => "NC",
            ScenarioKind::FI => "FI",
            ScenarioKind::BA => "BA",
            ScenarioKind::OPEN => "OPEN",
        };
        let dir = match self.direction {
            Direction::DT => "DT",
            Direction::UT => "UT",
        };
        if self.counterflow {
            format!("{kind}-{dir}-CF")
        } else {
            format!("{kind}-{dir}")
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("corridor_width", self.corridor_width),
            ("corridor_length", self.corridor_length),
            ("bottleneck_gap", self.bottleneck_gap),
            ("arena_size", self.arena_size),
            ("ped_speed", self.ped_speed),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.ped_count == 0 {
            return Err(Error::Config("ped_count must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.minor_flow_fraction) {
            return Err(Error::Config("minor_flow_fraction must lie in [0, 1]".into()));
        }
        if !(self.ped_speed_spread >= 0.0) {
            return Err(Error::Config("ped_speed_spread must be nonnegative".into()));
        }
        Ok(())
    }

    /// Parses JSON or flat `key = value` lines (`#` starts a comment).
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = parse_config_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Deserializes a config from JSON or from flat `key = value` lines.
pub fn parse_config_text<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let trimmed = text.trim_start();
    let value = if trimmed.starts_with('{') {
        serde_json::from_str(trimmed).map_err(|e| Error::Config(e.to_string()))?
    } else {
        key_values(text)?
    };
    serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
}

fn key_values(text: &str) -> Result<Value> {
    let mut map = Map::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let v = v.trim().trim_matches('"');
        let value = if let Ok(b) = v.parse::<bool>() {
            Value::Bool(b)
        } else if let Ok(i) = v.parse::<u64>() {
            Value::from(i)
        } else if let Ok(f) = v.parse::<f64>() {
            Value::from(f)
        } else {
            Value::String(v.to_string())
        };
        map.insert(k.trim().to_string(), value);
    }
    Ok(Value::Object(map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json_agree() {
        let kv = "kind = BA\ndirection = ut # upstream\ncounterflow = true\nped_count = 12\nbottleneck_gap = 2.0\nseed = 9\n";
        let js = r#"{"kind":"BA","direction":"UT","counterflow":true,"ped_count":12,"bottleneck_gap":2.0,"seed":9}"#;
        let a = ScenarioConfig::parse(kv).unwrap();
        let b = ScenarioConfig::parse(js).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.label(), "BA-UT-CF");
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(ScenarioConfig::parse("ped_count = 0").is_err());
        assert!(ScenarioConfig::parse("no_such_key = 1").is_err());
        assert!(ScenarioConfig::parse("corridor_width = -1").is_err());
        assert!(ScenarioConfig::parse("just words").is_err());
    }
}
