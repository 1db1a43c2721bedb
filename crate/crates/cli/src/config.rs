//! Sweep configuration: scenario, grid axes, outputs, determinism knobs.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("unknown axis {0:?}")]
    UnknownAxis(String),
    #[error("axis {axis} is not valid for scenario {scenario}")]
    AxisNotValid { axis: String, scenario: String },
    #[error("bad grid spec {0:?} (want start:stop:count[:log])")]
    BadGridSpec(String),
    #[error("axis {0}: count must be >= 1")]
    BadCount(String),
    #[error("axis {0}: log scale requires positive endpoints")]
    BadLogRange(String),
    #[error("config parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    StationaryGround,
    StationaryThermal,
    DynamicAligned,
    DynamicThermal,
    Adaptive,
    HcrbCompare,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::StationaryGround => "stationary-ground",
            Scenario::StationaryThermal => "stationary-thermal",
            Scenario::DynamicAligned => "dynamic-aligned",
            Scenario::DynamicThermal => "dynamic-thermal",
            Scenario::Adaptive => "adaptive",
            Scenario::HcrbCompare => "hcrb-compare",
        }
    }

    /// Grid axes this scenario accepts, in canonical column order.
    pub fn axes(&self) -> &'static [Axis] {
        use Axis::*;
        match self {
            Scenario::StationaryGround => &[B, E, Theta],
            Scenario::StationaryThermal => &[B, E, Theta, Temp],
            Scenario::DynamicAligned => &[B, E, Time],
            Scenario::DynamicThermal | Scenario::HcrbCompare => &[B, E, Theta, Temp, Time],
            Scenario::Adaptive => &[Tau, Segments, Eta],
        }
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stationary-ground" => Ok(Scenario::StationaryGround),
            "stationary-thermal" => Ok(Scenario::StationaryThermal),
            "dynamic-aligned" => Ok(Scenario::DynamicAligned),
            "dynamic-thermal" => Ok(Scenario::DynamicThermal),
            "adaptive" => Ok(Scenario::Adaptive),
            "hcrb-compare" => Ok(Scenario::HcrbCompare),
            other => Err(ConfigError::UnknownScenario(other.into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Magnetic field, gauss.
    B,
    /// Electric field, kV/cm.
    E,
    /// Angle between E and z, radians.
    Theta,
    /// Temperature, kelvin.
    Temp,
    /// Evolution time, 1/K.
    Time,
    /// Total control time, 1/K.
    Tau,
    /// Number of control segments.
    Segments,
    /// Control-estimate error magnitude, kelvin (applied along lambda1).
    Eta,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::B => "b",
            Axis::E => "e",
            Axis::Theta => "theta",
            Axis::Temp => "temp",
            Axis::Time => "t",
            Axis::Tau => "tau",
            Axis::Segments => "segments",
            Axis::Eta => "eta",
        }
    }
}

impl FromStr for Axis {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "b" | "B" => Ok(Axis::B),
            "e" | "E" => Ok(Axis::E),
            "theta" => Ok(Axis::Theta),
            "temp" | "T" => Ok(Axis::Temp),
            "t" | "time" => Ok(Axis::Time),
            "tau" => Ok(Axis::Tau),
            "segments" | "N" => Ok(Axis::Segments),
            "eta" => Ok(Axis::Eta),
            other => Err(ConfigError::UnknownAxis(other.into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default = "default_scale")]
    pub scale: Scale,
}

fn default_scale() -> Scale {
    Scale::Linear
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let n = self.count as f64 - 1.0;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / n;
                match self.scale {
                    Scale::Linear => self.start + (self.stop - self.start) * f,
                    Scale::Log => {
                        (self.start.ln() + (self.stop.ln() - self.start.ln()) * f).exp()
                    }
                }
            })
            .collect()
    }

    /// "start:stop:count" with an optional ":log" suffix.
    pub fn parse(spec: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(ConfigError::BadGridSpec(spec.into()));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| ConfigError::BadGridSpec(spec.into()))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| ConfigError::BadGridSpec(spec.into()))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| ConfigError::BadGridSpec(spec.into()))?;
        let scale = match parts.get(3) {
            None => Scale::Linear,
            Some(&"log") => Scale::Log,
            Some(_) => return Err(ConfigError::BadGridSpec(spec.into())),
        };
        Ok(Self { start, stop, count, scale })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    Identity,
    Msnr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json" => Ok(Format::Jsonl),
            other => Err(ConfigError::Parse(format!("unknown format {other:?}"))),
        }
    }
}

/// Full sweep configuration. CLI flags override file values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub grid: BTreeMap<Axis, AxisSpec>,
    #[serde(default = "default_weight")]
    pub weight: Weight,
    /// Output columns to keep (None = all scenario outputs).
    #[serde(default)]
    pub outputs: Option<Vec<String>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub with_hcrb: bool,
    /// Probe for dynamic-aligned / adaptive scenarios.
    #[serde(default)]
    pub probe: Option<String>,
    /// Interpret time axes as nanoseconds (converted via k_B/hbar).
    #[serde(default)]
    pub time_ns: bool,
}

fn default_weight() -> Weight {
    Weight::Identity
}

fn default_workers() -> usize {
    1
}

impl SweepConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            grid: BTreeMap::new(),
            weight: Weight::Identity,
            outputs: None,
            seed: 0,
            workers: 1,
            with_hcrb: false,
            probe: None,
            time_ns: false,
        }
    }

    /// Fills unspecified axes with scenario defaults, validates specified ones.
    pub fn validated(mut self) -> Result<Self, ConfigError> {
        for axis in self.grid.keys() {
            if !self.scenario.axes().contains(axis) {
                return Err(ConfigError::AxisNotValid {
                    axis: axis.name().into(),
                    scenario: self.scenario.name().into(),
                });
            }
        }
        for spec in self.grid.values() {
            if spec.count < 1 {
                return Err(ConfigError::BadCount("grid".into()));
            }
            if spec.scale == Scale::Log && (spec.start <= 0.0 || spec.stop <= 0.0) {
                return Err(ConfigError::BadLogRange("grid".into()));
            }
        }
        for axis in self.scenario.axes() {
            self.grid.entry(*axis).or_insert_with(|| default_axis(self.scenario, *axis));
        }
        if self.workers == 0 {
            self.workers = 1;
        }
        Ok(self)
    }
}

/// Scenario default ranges (single points for fields, short sweeps for the
/// primary axis of each figure-style scan).
fn default_axis(scenario: Scenario, axis: Axis) -> AxisSpec {
    let single = |v: f64| AxisSpec { start: v, stop: v, count: 1, scale: Scale::Linear };
    match (scenario, axis) {
        (Scenario::StationaryGround, Axis::E) => AxisSpec {
            start: 0.5,
            stop: 10.0,
            count: 20,
            scale: Scale::Linear,
        },
        (_, Axis::B) => single(500.0),
        (_, Axis::E) => single(5.0),
        (_, Axis::Theta) => single(std::f64::consts::FRAC_PI_3),
        (Scenario::StationaryThermal, Axis::Temp) => AxisSpec {
            start: 0.005,
            stop: 1.0,
            count: 20,
            scale: Scale::Log,
        },
        (_, Axis::Temp) => single(0.01),
        (_, Axis::Time) => AxisSpec { start: 0.5, stop: 20.0, count: 20, scale: Scale::Linear },
        (_, Axis::Tau) => single(1.0),
        (_, Axis::Segments) => single(1000.0),
        (_, Axis::Eta) => single(0.0),
    }
}
