//! Deterministic CivMini engine.
//!
//! A [`GameState`] is a plain value. [`apply_turn`] consumes one faction's
//! [`TurnPlan`] and produces the next state plus the [`TurnEvents`] that
//! describe exactly what happened, so a game can be replayed either from the
//! submitted plans or from the events alone.

pub mod render;
mod rules;
pub mod transcript;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::rule_space::RuleConfig;

pub use rules::{apply_events, apply_turn, compute_ttk, legal_actions, new_game, outcome, score};

/// Fixed hit points of a Farmer.
pub const FARMER_HP: i32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Faction {
    Empire,
    Nomads,
}

impl Faction {
    pub const BOTH: [Faction; 2] = [Faction::Empire, Faction::Nomads];

    pub fn opponent(self) -> Faction {
        match self {
            Faction::Empire => Faction::Nomads,
            Faction::Nomads => Faction::Empire,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Faction::Empire => "empire",
            Faction::Nomads => "nomads",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Faction::Empire => "Empire",
            Faction::Nomads => "Nomads",
        }
    }
}

impl fmt::Display for Faction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

impl FromStr for Faction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "empire" | "e" => Ok(Faction::Empire),
            "nomads" | "nomad" | "n" => Ok(Faction::Nomads),
            other => Err(format!("unknown faction {other:?}")),
        }
    }
}

/// A pair of values, one per faction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PerFaction<T> {
    pub empire: T,
    pub nomads: T,
}

impl<T> PerFaction<T> {
    pub fn new(empire: T, nomads: T) -> Self {
        PerFaction { empire, nomads }
    }
}

impl<T> Index<Faction> for PerFaction<T> {
    type Output = T;

    fn index(&self, f: Faction) -> &T {
        match f {
            Faction::Empire => &self.empire,
            Faction::Nomads => &self.nomads,
        }
    }
}

impl<T> IndexMut<Faction> for PerFaction<T> {
    fn index_mut(&mut self, f: Faction) -> &mut T {
        match f {
            Faction::Empire => &mut self.empire,
            Faction::Nomads => &mut self.nomads,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Farmer,
    Soldier,
    Cavalry,
}

impl UnitKind {
    pub fn faction(self) -> Faction {
        match self {
            UnitKind::Farmer | UnitKind::Soldier => Faction::Empire,
            UnitKind::Cavalry => Faction::Nomads,
        }
    }

    pub fn move_allowance(self) -> i32 {
        match self {
            UnitKind::Cavalry => 2,
            UnitKind::Farmer | UnitKind::Soldier => 1,
        }
    }

    pub fn can_battle(self) -> bool {
        !matches!(self, UnitKind::Farmer)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UnitKind::Farmer => "farmer",
            UnitKind::Soldier => "soldier",
            UnitKind::Cavalry => "cavalry",
        }
    }

    /// Kinds a city of `faction` can produce.
    pub fn producible(faction: Faction) -> &'static [UnitKind] {
        match faction {
            Faction::Empire => &[UnitKind::Farmer, UnitKind::Soldier],
            Faction::Nomads => &[UnitKind::Cavalry],
        }
    }

    pub fn max_hp(self, config: &RuleConfig) -> i32 {
        match self {
            UnitKind::Farmer => FARMER_HP,
            UnitKind::Soldier => config.empire_soldier_hp as i32,
            UnitKind::Cavalry => config.nomads_cavalry_hp as i32,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl FromStr for UnitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "farmer" => Ok(UnitKind::Farmer),
            "soldier" => Ok(UnitKind::Soldier),
            "cavalry" => Ok(UnitKind::Cavalry),
            other => Err(format!("unknown unit type {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: i32,
    pub y: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32) -> Self {
        Position { x, y }
    }

    pub fn manhattan(self, other: Position) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn offset(self, dx: i32, dy: i32) -> Position {
        Position { x: self.x + dx, y: self.y + dy }
    }

    pub fn in_bounds(self, map_size: u32) -> bool {
        let m = map_size as i32;
        (0..m).contains(&self.x) && (0..m).contains(&self.y)
    }

    /// The four orthogonal neighbours, in a fixed order.
    pub fn neighbors(self) -> [Position; 4] {
        [self.offset(0, -1), self.offset(-1, 0), self.offset(1, 0), self.offset(0, 1)]
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Unit {
    pub id: u32,
    pub faction: Faction,
    pub kind: UnitKind,
    /// Per-kind spawn index used in agent-facing names.
    pub tag: u32,
    pub hp: i32,
    pub pos: Position,
}

impl Unit {
    /// Agent-facing name, e.g. `empire_farmer_0`.
    pub fn name(&self) -> String {
        format!("{}_{}_{}", self.faction.as_str(), self.kind.as_str(), self.tag)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct City {
    pub faction: Faction,
    pub pos: Position,
    pub hp: i32,
    pub max_hp: i32,
}

impl City {
    pub fn standing(&self) -> bool {
        self.hp > 0
    }

    pub fn name(&self) -> String {
        format!("{}_city", self.faction.as_str())
    }
}

/// Identifies a controllable entity. Units order before cities, which gives
/// the canonical within-turn resolution order (ascending unit id, city last).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityId {
    Unit(u32),
    City(Faction),
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::Unit(id) => write!(f, "unit-{id}"),
            EntityId::City(faction) => write!(f, "city-{}", faction.as_str()),
        }
    }
}

impl FromStr for EntityId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(id) = s.strip_prefix("unit-") {
            return id.parse().map(EntityId::Unit).map_err(|e| format!("{s:?}: {e}"));
        }
        if let Some(faction) = s.strip_prefix("city-") {
            return faction.parse().map(EntityId::City);
        }
        Err(format!("unrecognized entity id {s:?}"))
    }
}

impl Serialize for EntityId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "action_type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    Gather,
    Move {
        to: Position,
    },
    Battle {
        target: Position,
    },
    ProduceResource,
    ProduceUnit {
        #[serde(rename = "produce_unit_type")]
        kind: UnitKind,
        to: Position,
    },
    Pass,
}

impl Action {
    pub fn type_name(&self) -> &'static str {
        match self {
            Action::Gather => "GATHER",
            Action::Move { .. } => "MOVE",
            Action::Battle { .. } => "BATTLE",
            Action::ProduceResource => "PRODUCE_RESOURCE",
            Action::ProduceUnit { .. } => "PRODUCE_UNIT",
            Action::Pass => "PASS",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Move { to } => write!(f, "MOVE to {to}"),
            Action::Battle { target } => write!(f, "BATTLE {target}"),
            Action::ProduceUnit { kind, to } => {
                write!(f, "PRODUCE_UNIT {} at {to}", kind.as_str())
            }
            other => f.write_str(other.type_name()),
        }
    }
}

/// At most one action per entity of the acting faction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnPlan {
    pub actions: BTreeMap<EntityId, Action>,
}

impl TurnPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, entity: EntityId, action: Action) -> &mut Self {
        self.actions.insert(entity, action);
        self
    }

    pub fn get(&self, entity: EntityId) -> Option<&Action> {
        self.actions.get(&entity)
    }
}

impl FromIterator<(EntityId, Action)> for TurnPlan {
    fn from_iter<I: IntoIterator<Item = (EntityId, Action)>>(iter: I) -> Self {
        TurnPlan { actions: iter.into_iter().collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ongoing,
    EmpireWin,
    NomadsWin,
    Draw,
}

impl Outcome {
    pub fn winner(self) -> Option<Faction> {
        match self {
            Outcome::EmpireWin => Some(Faction::Empire),
            Outcome::NomadsWin => Some(Faction::Nomads),
            Outcome::Ongoing | Outcome::Draw => None,
        }
    }

    pub fn is_finished(self) -> bool {
        self != Outcome::Ongoing
    }
}

/// Why a submitted action was replaced by PASS.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstitutionReason {
    Missing,
    Illegal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Gathered { entity: EntityId, amount: u32 },
    Moved { entity: EntityId, from: Position, to: Position },
    Attacked { entity: EntityId, target: EntityId, damage: i32, remaining_hp: i32, killed: bool, resource_gain: u32 },
    ResourceProduced { entity: EntityId, amount: u32 },
    UnitProduced { entity: EntityId, unit: Unit, cost: u32 },
    Passed { entity: EntityId },
    Substituted { entity: EntityId, submitted: Option<Action>, reason: SubstitutionReason },
    CityDestroyed { faction: Faction },
    TurnEnded { next_turn: u32, next_acting: Faction, finished: bool },
}

/// Everything that happened during one faction's turn, in resolution order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnEvents {
    pub events: Vec<Event>,
}

impl TurnEvents {
    pub fn substitutions(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::Substituted { .. })).count()
    }

    /// Entities that were resolved this turn, in order. Each appears once.
    pub fn actors(&self) -> Vec<EntityId> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Gathered { entity, .. }
                | Event::Moved { entity, .. }
                | Event::Attacked { entity, .. }
                | Event::ResourceProduced { entity, .. }
                | Event::UnitProduced { entity, .. }
                | Event::Passed { entity }
                | Event::Substituted { entity, .. } => Some(*entity),
                Event::CityDestroyed { .. } | Event::TurnEnded { .. } => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    /// 1-based turn index. A turn is one Empire phase followed by one Nomads
    /// phase.
    pub turn: u32,
    pub max_turns: u32,
    pub acting: Faction,
    /// Set once the Nomads phase of the final turn has been resolved.
    pub turn_limit_reached: bool,
    /// Living units, sorted by id.
    pub units: Vec<Unit>,
    pub cities: PerFaction<City>,
    pub resources: PerFaction<u32>,
    pub battles_won: PerFaction<u32>,
    pub next_unit_id: u32,
    /// Next per-kind tag, indexed farmer/soldier/cavalry.
    pub next_tag: [u32; 3],
    pub config: RuleConfig,
    pub seed: u64,
}

impl GameState {
    pub fn map_size(&self) -> u32 {
        self.config.map_size
    }

    pub fn unit(&self, id: u32) -> Option<&Unit> {
        self.units.binary_search_by_key(&id, |u| u.id).ok().map(|i| &self.units[i])
    }

    pub fn units_of(&self, faction: Faction) -> impl Iterator<Item = &Unit> {
        self.units.iter().filter(move |u| u.faction == faction)
    }

    pub fn unit_count(&self, faction: Faction) -> u32 {
        self.units_of(faction).count() as u32
    }

    /// Entity standing on `pos`, if any. Destroyed cities do not occupy.
    pub fn occupant(&self, pos: Position) -> Option<EntityId> {
        if let Some(u) = self.units.iter().find(|u| u.pos == pos) {
            return Some(EntityId::Unit(u.id));
        }
        Faction::BOTH.into_iter().find(|&f| self.cities[f].standing() && self.cities[f].pos == pos).map(EntityId::City)
    }

    pub fn faction_of(&self, entity: EntityId) -> Option<Faction> {
        match entity {
            EntityId::Unit(id) => self.unit(id).map(|u| u.faction),
            EntityId::City(f) => Some(f),
        }
    }

    pub fn position_of(&self, entity: EntityId) -> Option<Position> {
        match entity {
            EntityId::Unit(id) => self.unit(id).map(|u| u.pos),
            EntityId::City(f) => Some(self.cities[f].pos),
        }
    }

    /// Agent-facing name of an entity.
    pub fn entity_name(&self, entity: EntityId) -> Option<String> {
        match entity {
            EntityId::Unit(id) => self.unit(id).map(Unit::name),
            EntityId::City(f) => Some(self.cities[f].name()),
        }
    }

    /// Living units then the standing city of `faction`, in resolution order.
    pub fn controllable(&self, faction: Faction) -> Vec<EntityId> {
        let mut out: Vec<EntityId> = self.units_of(faction).map(|u| EntityId::Unit(u.id)).collect();
        if self.cities[faction].standing() {
            out.push(EntityId::City(faction));
        }
        out
    }

    /// Canonical serialization.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn outcome(&self) -> Outcome {
        outcome(self)
    }

    pub fn score(&self, faction: Faction) -> f64 {
        score(self, faction)
    }

    /// Score in integer tenths; exact.
    pub fn score_tenths(&self, faction: Faction) -> i64 {
        rules::score_tenths(self, faction)
    }
}
