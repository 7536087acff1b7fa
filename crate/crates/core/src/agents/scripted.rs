use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{rng_from_seed, Agent, Observation};
use crate::engine::{Action, EntityId, Faction, GameState, Position, TurnPlan, UnitKind};

/// Uniform choice from each entity's legal set, drawn in resolution order.
pub fn random_agent_plan<R: Rng + ?Sized>(obs: &Observation, rng: &mut R) -> TurnPlan {
    obs.legal.iter().map(|(&entity, legal)| (entity, *legal.choose(rng).expect("PASS is always legal"))).collect()
}

pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        RandomAgent { rng: rng_from_seed(seed) }
    }
}

impl Agent for RandomAgent {
    fn plan(&mut self, obs: &Observation) -> TurnPlan {
        random_agent_plan(obs, &mut self.rng)
    }
}

/// Seeded choice among the minimisers of `key`.
fn pick_min<T: Copy, R: Rng + ?Sized>(items: &[T], key: impl Fn(&T) -> i32, rng: &mut R) -> Option<T> {
    let best = items.iter().map(&key).min()?;
    let ties: Vec<T> = items.iter().copied().filter(|t| key(t) == best).collect();
    ties.choose(rng).copied()
}

fn battles(legal: &[Action]) -> Vec<Action> {
    legal.iter().copied().filter(|a| matches!(a, Action::Battle { .. })).collect()
}

fn moves(legal: &[Action]) -> Vec<Position> {
    legal
        .iter()
        .filter_map(|a| match a {
            Action::Move { to } => Some(*to),
            _ => None,
        })
        .collect()
}

/// Move to a tile strictly closer to `goal`, choosing among the closest.
fn approach<R: Rng + ?Sized>(from: Position, goal: Position, legal: &[Action], rng: &mut R) -> Option<Action> {
    let current = from.manhattan(goal);
    let closer: Vec<Position> = moves(legal).into_iter().filter(|p| p.manhattan(goal) < current).collect();
    pick_min(&closer, |p| p.manhattan(goal), rng).map(|to| Action::Move { to })
}

fn produce<R: Rng + ?Sized>(legal: &[Action], kind: UnitKind, rng: &mut R) -> Option<Action> {
    let options: Vec<Action> =
        legal.iter().copied().filter(|a| matches!(a, Action::ProduceUnit { kind: k, .. } if *k == kind)).collect();
    options.choose(rng).copied()
}

/// The enemy unit closest to the Empire city, if any.
fn nearest_threat<R: Rng + ?Sized>(state: &GameState, rng: &mut R) -> Option<Position> {
    let home = state.cities.empire.pos;
    let threats: Vec<Position> = state.units_of(Faction::Nomads).map(|u| u.pos).collect();
    pick_min(&threats, |p| p.manhattan(home), rng)
}

/// Fixed scripted policies.
///
/// Empire: farmers gather; soldiers attack an adjacent enemy, otherwise close
/// in on the Nomad unit nearest the Empire city; the city trains soldiers when
/// it can and otherwise produces resources.
///
/// Nomads: cavalry attack an adjacent enemy, otherwise ride at the Empire
/// city; the city trains cavalry when it can.
pub fn heuristic_agent_plan<R: Rng + ?Sized>(obs: &Observation, rng: &mut R) -> TurnPlan {
    let state = &obs.state;
    let threat = match obs.faction {
        Faction::Empire => nearest_threat(state, rng),
        Faction::Nomads => None,
    };
    let mut plan = TurnPlan::new();
    for (&entity, legal) in &obs.legal {
        let action = match entity {
            EntityId::Unit(id) => {
                let unit = state.unit(id).expect("observed unit exists");
                match unit.kind {
                    UnitKind::Farmer => Some(Action::Gather),
                    UnitKind::Soldier => battles(legal)
                        .choose(rng)
                        .copied()
                        .or_else(|| threat.and_then(|goal| approach(unit.pos, goal, legal, rng))),
                    UnitKind::Cavalry => battles(legal)
                        .choose(rng)
                        .copied()
                        .or_else(|| approach(unit.pos, state.cities.empire.pos, legal, rng)),
                }
            }
            EntityId::City(Faction::Empire) => produce(legal, UnitKind::Soldier, rng).or(Some(Action::ProduceResource)),
            EntityId::City(Faction::Nomads) => produce(legal, UnitKind::Cavalry, rng),
        };
        plan.set(entity, action.filter(|a| legal.contains(a)).unwrap_or(Action::Pass));
    }
    plan
}

pub struct HeuristicAgent {
    rng: ChaCha8Rng,
}

impl HeuristicAgent {
    pub fn new(seed: u64) -> Self {
        HeuristicAgent { rng: rng_from_seed(seed) }
    }
}

impl Agent for HeuristicAgent {
    fn plan(&mut self, obs: &Observation) -> TurnPlan {
        heuristic_agent_plan(obs, &mut self.rng)
    }
}
