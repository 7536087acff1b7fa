//! The tunable rule space: twelve optimized parameters, their ranges and
//! discretization, plus the fixed design settings (map size, turn limit).
//!
//! The optimizer works on the unit cube `[0,1]^12`. [`denormalize`] maps a
//! unit vector back to parameter units, and [`project`] clamps and rounds a
//! continuous proposal onto the discrete grid.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of optimized parameters.
pub const DIM: usize = 12;

pub const MAP_SIZES: [u32; 4] = [5, 7, 9, 11];
pub const TURN_LIMITS: [u32; 2] = [16, 32];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Integer,
    Tenth,
}

impl Precision {
    pub fn step(self) -> f64 {
        match self {
            Precision::Integer => 1.0,
            Precision::Tenth => 0.1,
        }
    }

    /// Round half away from zero to this precision.
    pub fn round(self, v: f64) -> f64 {
        match self {
            Precision::Integer => v.round(),
            Precision::Tenth => (v * 10.0).round() / 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
    pub precision: Precision,
}

impl ParamSpec {
    const fn int(name: &'static str, lower: f64, upper: f64) -> Self {
        ParamSpec { name, lower, upper, precision: Precision::Integer }
    }

    /// Clamp into range, then round to precision.
    pub fn snap(&self, v: f64) -> f64 {
        let clamped = if v.is_nan() { self.lower } else { v.clamp(self.lower, self.upper) };
        self.precision.round(clamped).clamp(self.lower, self.upper)
    }

    /// Number of grid points in `[lower, upper]`.
    pub fn cardinality(&self) -> u64 {
        ((self.upper - self.lower) / self.precision.step()).round() as u64 + 1
    }

    pub fn to_unit(&self, v: f64) -> f64 {
        (v - self.lower) / (self.upper - self.lower)
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        self.lower + u * (self.upper - self.lower)
    }
}

/// Canonical parameter table, in canonical order.
pub const SPACE: [ParamSpec; DIM] = [
    ParamSpec::int("initial_resources", 2.0, 10.0),
    ParamSpec::int("empire_farmer_gather", 1.0, 5.0),
    ParamSpec::int("nomads_kill_gain", 1.0, 10.0),
    ParamSpec::int("empire_damage", 1.0, 5.0),
    ParamSpec::int("nomads_damage", 1.0, 5.0),
    ParamSpec::int("empire_soldier_hp", 4.0, 16.0),
    ParamSpec::int("nomads_cavalry_hp", 4.0, 16.0),
    ParamSpec::int("empire_unit_cost", 2.0, 10.0),
    ParamSpec::int("nomads_unit_cost", 2.0, 10.0),
    ParamSpec { name: "score_per_resource", lower: 0.1, upper: 0.5, precision: Precision::Tenth },
    ParamSpec::int("score_per_battle", 1.0, 5.0),
    ParamSpec::int("score_per_unit", 1.0, 5.0),
];

pub fn default_space() -> Vec<ParamSpec> {
    SPACE.to_vec()
}

/// Size of the discrete grid induced by [`SPACE`].
pub fn discrete_space_size() -> u64 {
    SPACE.iter().map(ParamSpec::cardinality).product()
}

/// Turn limit paired with a map size when none is given explicitly.
pub fn default_max_turns(map_size: u32) -> u32 {
    if map_size <= 7 {
        16
    } else {
        32
    }
}

/// Fixed design settings that are not part of the optimized vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    pub map_size: u32,
    pub max_turns: u32,
}

impl Design {
    pub fn new(map_size: u32, max_turns: Option<u32>) -> Result<Self> {
        let design = Design { map_size, max_turns: max_turns.unwrap_or_else(|| default_max_turns(map_size)) };
        design.validate()?;
        Ok(design)
    }

    pub fn validate(&self) -> Result<()> {
        if !MAP_SIZES.contains(&self.map_size) {
            return Err(Error::InvalidConfig(format!("map_size {} not in {:?}", self.map_size, MAP_SIZES)));
        }
        if !TURN_LIMITS.contains(&self.max_turns) {
            return Err(Error::InvalidConfig(format!("max_turns {} not in {:?}", self.max_turns, TURN_LIMITS)));
        }
        Ok(())
    }
}

impl Default for Design {
    fn default() -> Self {
        Design { map_size: 7, max_turns: 16 }
    }
}

/// A score weight stored as an integer number of tenths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tenths(pub u32);

impl Tenths {
    pub fn value(self) -> f64 {
        self.0 as f64 / 10.0
    }
}

impl Serialize for Tenths {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Tenths {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        let tenths = (v * 10.0).round();
        if (tenths / 10.0 - v).abs() > 1e-9 || tenths < 0.0 {
            return Err(serde::de::Error::custom(format!("{v} is not a multiple of 0.1")));
        }
        Ok(Tenths(tenths as u32))
    }
}

impl fmt::Display for Tenths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

/// A complete, valid rule configuration.
///
/// Field order is the canonical parameter order followed by the design
/// settings; it is also the key order of the configuration file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleConfig {
    pub initial_resources: u32,
    pub empire_farmer_gather: u32,
    pub nomads_kill_gain: u32,
    pub empire_damage: u32,
    pub nomads_damage: u32,
    pub empire_soldier_hp: u32,
    pub nomads_cavalry_hp: u32,
    pub empire_unit_cost: u32,
    pub nomads_unit_cost: u32,
    pub score_per_resource: Tenths,
    pub score_per_battle: u32,
    pub score_per_unit: u32,
    pub map_size: u32,
    pub max_turns: u32,
}

impl Default for RuleConfig {
    /// A known reasonably balanced parameter set on the 7x7 map.
    fn default() -> Self {
        RuleConfig {
            initial_resources: 10,
            empire_farmer_gather: 1,
            nomads_kill_gain: 6,
            empire_damage: 4,
            nomads_damage: 3,
            empire_soldier_hp: 9,
            nomads_cavalry_hp: 10,
            empire_unit_cost: 4,
            nomads_unit_cost: 4,
            score_per_resource: Tenths(4),
            score_per_battle: 3,
            score_per_unit: 3,
            map_size: 7,
            max_turns: 16,
        }
    }
}

impl RuleConfig {
    pub fn design(&self) -> Design {
        Design { map_size: self.map_size, max_turns: self.max_turns }
    }

    pub fn with_design(mut self, design: Design) -> Self {
        self.map_size = design.map_size;
        self.max_turns = design.max_turns;
        self
    }

    /// Optimized values in canonical order.
    pub fn values(&self) -> [f64; DIM] {
        [
            self.initial_resources as f64,
            self.empire_farmer_gather as f64,
            self.nomads_kill_gain as f64,
            self.empire_damage as f64,
            self.nomads_damage as f64,
            self.empire_soldier_hp as f64,
            self.nomads_cavalry_hp as f64,
            self.empire_unit_cost as f64,
            self.nomads_unit_cost as f64,
            self.score_per_resource.value(),
            self.score_per_battle as f64,
            self.score_per_unit as f64,
        ]
    }

    /// Build from grid values. Every entry must already sit on the grid.
    pub fn from_values(values: &[f64], design: Design) -> Result<Self> {
        if values.len() != DIM {
            return Err(Error::WrongLength { expected: DIM, got: values.len() });
        }
        for (spec, &v) in SPACE.iter().zip(values) {
            check_on_grid(spec, v)?;
        }
        design.validate()?;
        let int = |i: usize| values[i].round() as u32;
        Ok(RuleConfig {
            initial_resources: int(0),
            empire_farmer_gather: int(1),
            nomads_kill_gain: int(2),
            empire_damage: int(3),
            nomads_damage: int(4),
            empire_soldier_hp: int(5),
            nomads_cavalry_hp: int(6),
            empire_unit_cost: int(7),
            nomads_unit_cost: int(8),
            score_per_resource: Tenths((values[9] * 10.0).round() as u32),
            score_per_battle: int(10),
            score_per_unit: int(11),
            map_size: design.map_size,
            max_turns: design.max_turns,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (spec, v) in SPACE.iter().zip(self.values()) {
            check_on_grid(spec, v)?;
        }
        self.design().validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RuleConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn check_on_grid(spec: &ParamSpec, v: f64) -> Result<()> {
    if !(spec.lower - 1e-9..=spec.upper + 1e-9).contains(&v) {
        return Err(Error::InvalidConfig(format!("{} = {v} outside [{}, {}]", spec.name, spec.lower, spec.upper)));
    }
    if (spec.precision.round(v) - v).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "{} = {v} is not a multiple of {}",
            spec.name,
            spec.precision.step()
        )));
    }
    Ok(())
}

/// A continuous proposal in parameter units, before projection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RawVector(pub [f64; DIM]);

impl RawVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::try_from(values)
    }
}

impl TryFrom<Vec<f64>> for RawVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        let got = values.len();
        let arr: [f64; DIM] = values.try_into().map_err(|_| Error::WrongLength { expected: DIM, got })?;
        Ok(RawVector(arr))
    }
}

impl From<RawVector> for Vec<f64> {
    fn from(raw: RawVector) -> Self {
        raw.0.to_vec()
    }
}

impl From<&RuleConfig> for RawVector {
    fn from(config: &RuleConfig) -> Self {
        RawVector(config.values())
    }
}

/// The discretization projection: clamp every entry into its range, then
/// round to its precision.
pub fn project(raw: &RawVector, design: Design) -> RuleConfig {
    let mut snapped = [0.0; DIM];
    for (i, spec) in SPACE.iter().enumerate() {
        snapped[i] = spec.snap(raw.0[i]);
    }
    RuleConfig::from_values(&snapped, design).expect("snapped values lie on the grid")
}

/// Slice form of [`project`] that checks the length.
pub fn project_values(values: &[f64], design: Design) -> Result<RuleConfig> {
    Ok(project(&RawVector::new(values.to_vec())?, design))
}

pub fn normalize(config: &RuleConfig) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    for (i, (spec, v)) in SPACE.iter().zip(config.values()).enumerate() {
        out[i] = spec.to_unit(v);
    }
    out
}

/// Unit-cube coordinates of a raw vector, clamped into `[0, 1]`.
pub fn unit_of_raw(raw: &RawVector) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    for (i, spec) in SPACE.iter().enumerate() {
        out[i] = spec.to_unit(raw.0[i]).clamp(0.0, 1.0);
    }
    out
}

pub fn denormalize(unit: &[f64]) -> Result<RawVector> {
    if unit.len() != DIM {
        return Err(Error::WrongLength { expected: DIM, got: unit.len() });
    }
    let mut out = [0.0; DIM];
    for (i, (spec, &u)) in SPACE.iter().zip(unit).enumerate() {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::OutsideUnitCube { index: i, value: u });
        }
        out[i] = spec.from_unit(u);
    }
    Ok(RawVector(out))
}

/// `denormalize`, `project`, `normalize`: the unit-cube point of the grid
/// configuration nearest to `unit`.
pub fn snap_unit(unit: &[f64; DIM]) -> [f64; DIM] {
    let raw = denormalize(unit).expect("unit vector in range");
    normalize(&project(&raw, Design::default()))
}
