//! Decision-makers for both factions.
//!
//! Every agent sees an [`Observation`]: the full state plus the legal action
//! set of each of its entities. Scripted agents (random, heuristic) choose
//! from those sets directly; the external agent renders a prompt, ships it
//! over the wire protocol and parses the reply with the same total fallback
//! rules the engine expects.

mod describe;
pub mod external;
mod parse;
pub mod retrieval;
mod scripted;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{legal_actions, Action, EntityId, Faction, GameState, TurnPlan};

pub use describe::{describe_state, rulebook, strategy_note};
pub use external::{external_agent_plan, Endpoint, ExternalAgent};
pub use parse::{parse_action_document, FallbackTally, ParsedPlan};
pub use retrieval::{retrieve_rules, RulebookIndex};
pub use scripted::{heuristic_agent_plan, random_agent_plan, HeuristicAgent, RandomAgent};

/// The acting faction's view of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub state: GameState,
    pub faction: Faction,
    /// Legal actions per controllable entity, in resolution order.
    pub legal: BTreeMap<EntityId, Vec<Action>>,
}

impl Observation {
    pub fn new(state: &GameState) -> Self {
        let faction = state.acting;
        let legal = state
            .controllable(faction)
            .into_iter()
            .map(|e| (e, legal_actions(state, e).expect("controllable entity exists")))
            .collect();
        Observation { state: state.clone(), faction, legal }
    }

    /// Agent-facing entity names, e.g. `empire_farmer_0` or `empire_city`.
    pub fn names(&self) -> BTreeMap<String, EntityId> {
        self.legal.keys().map(|&e| (self.state.entity_name(e).expect("entity exists"), e)).collect()
    }

    pub fn name_of(&self, entity: EntityId) -> String {
        self.state.entity_name(entity).expect("entity exists")
    }

    /// A plan where every entity passes.
    pub fn all_pass(&self) -> TurnPlan {
        self.legal.keys().map(|&e| (e, Action::Pass)).collect()
    }
}

/// Anything that can choose a turn plan.
pub trait Agent: Send {
    fn plan(&mut self, obs: &Observation) -> TurnPlan;

    /// Entries this agent replaced by PASS before the engine saw them.
    fn fallbacks(&self) -> u32 {
        0
    }
}

/// Which agent to build for a faction. Seeds are always explicit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Random(u64),
    Heuristic(u64),
    External(Endpoint),
}

/// Agent kind without its seed; the evaluator supplies per-game seeds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentSpec {
    Random,
    Heuristic,
    External(Endpoint),
}

impl AgentSpec {
    pub fn with_seed(&self, seed: u64) -> AgentKind {
        match self {
            AgentSpec::Random => AgentKind::Random(seed),
            AgentSpec::Heuristic => AgentKind::Heuristic(seed),
            AgentSpec::External(e) => AgentKind::External(e.clone()),
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSpec::Random => f.write_str("random"),
            AgentSpec::Heuristic => f.write_str("heuristic"),
            AgentSpec::External(e) => write!(f, "external({e})"),
        }
    }
}

impl FromStr for AgentSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(AgentSpec::Random),
            "heuristic" => Ok(AgentSpec::Heuristic),
            other => match other.strip_prefix("external") {
                Some("") => Err("external agent needs an endpoint".into()),
                Some(rest) => Ok(AgentSpec::External(Endpoint::parse(rest.trim_start_matches([':', '='])))),
                None => Err(format!("unknown agent kind {other:?}")),
            },
        }
    }
}

/// Per-game context handed to agents that talk to the outside world.
#[derive(Clone, Debug)]
pub struct GameContext {
    pub game_id: String,
}

pub fn build_agent(kind: &AgentKind, faction: Faction, ctx: &GameContext) -> Box<dyn Agent> {
    match kind {
        AgentKind::Random(seed) => Box::new(RandomAgent::new(*seed)),
        AgentKind::Heuristic(seed) => Box::new(HeuristicAgent::new(*seed)),
        AgentKind::External(endpoint) => Box::new(ExternalAgent::new(endpoint.clone(), faction, ctx.game_id.clone())),
    }
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
