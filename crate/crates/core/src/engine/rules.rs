use super::*;
use crate::error::{Error, Result};

/// Starting units as (kind, offset from the faction's city).
const EMPIRE_ROSTER: [(UnitKind, i32, i32); 3] =
    [(UnitKind::Farmer, -1, 0), (UnitKind::Farmer, 0, -1), (UnitKind::Soldier, 1, 0)];
const NOMADS_ROSTER: [(UnitKind, i32, i32); 2] = [(UnitKind::Cavalry, -1, 0), (UnitKind::Cavalry, 0, -1)];

fn city_anchor(faction: Faction, map_size: u32) -> Position {
    match faction {
        Faction::Empire => Position::new(1, 1),
        Faction::Nomads => Position::new(map_size as i32 - 2, map_size as i32 - 2),
    }
}

fn city_max_hp(faction: Faction, config: &RuleConfig) -> i32 {
    match faction {
        Faction::Empire => config.empire_soldier_hp as i32,
        Faction::Nomads => config.nomads_cavalry_hp as i32,
    }
}

fn damage_of(faction: Faction, config: &RuleConfig) -> i32 {
    match faction {
        Faction::Empire => config.empire_damage as i32,
        Faction::Nomads => config.nomads_damage as i32,
    }
}

fn unit_cost(faction: Faction, config: &RuleConfig) -> u32 {
    match faction {
        Faction::Empire => config.empire_unit_cost,
        Faction::Nomads => config.nomads_unit_cost,
    }
}

pub fn new_game(config: &RuleConfig, seed: u64) -> GameState {
    let m = config.map_size;
    let city = |f: Faction| City {
        faction: f,
        pos: city_anchor(f, m),
        hp: city_max_hp(f, config),
        max_hp: city_max_hp(f, config),
    };
    let mut state = GameState {
        turn: 1,
        max_turns: config.max_turns,
        acting: Faction::Empire,
        turn_limit_reached: false,
        units: Vec::new(),
        cities: PerFaction::new(city(Faction::Empire), city(Faction::Nomads)),
        resources: PerFaction::new(config.initial_resources, config.initial_resources),
        battles_won: PerFaction::default(),
        next_unit_id: 0,
        next_tag: [0; 3],
        config: *config,
        seed,
    };
    for (faction, roster) in [(Faction::Empire, &EMPIRE_ROSTER[..]), (Faction::Nomads, &NOMADS_ROSTER[..])] {
        let anchor = state.cities[faction].pos;
        for &(kind, dx, dy) in roster {
            let unit = spawn(&mut state, kind, anchor.offset(dx, dy));
            state.units.push(unit);
        }
    }
    state
}

/// Allocate a full-HP unit. The caller inserts it.
fn spawn(state: &mut GameState, kind: UnitKind, pos: Position) -> Unit {
    let unit = Unit {
        id: state.next_unit_id,
        faction: kind.faction(),
        kind,
        tag: state.next_tag[kind.slot()],
        hp: kind.max_hp(&state.config),
        pos,
    };
    state.next_unit_id += 1;
    state.next_tag[kind.slot()] += 1;
    unit
}

fn free(state: &GameState, pos: Position) -> bool {
    pos.in_bounds(state.map_size()) && state.occupant(pos).is_none()
}

fn enemy_at(state: &GameState, pos: Position, faction: Faction) -> Option<EntityId> {
    state.occupant(pos).filter(|&e| state.faction_of(e) == Some(faction.opponent()))
}

/// Every action the engine would accept from `entity` in `state`, in a fixed
/// order: GATHER, MOVE, BATTLE, PRODUCE_RESOURCE, PRODUCE_UNIT, PASS.
pub fn legal_actions(state: &GameState, entity: EntityId) -> Result<Vec<Action>> {
    let mut out = Vec::new();
    match entity {
        EntityId::Unit(id) => {
            let unit = state.unit(id).ok_or(Error::UnknownEntity(entity))?;
            if unit.kind == UnitKind::Farmer {
                out.push(Action::Gather);
            }
            let reach = unit.kind.move_allowance();
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let d = dx.abs() + dy.abs();
                    if d == 0 || d > reach {
                        continue;
                    }
                    let to = unit.pos.offset(dx, dy);
                    if free(state, to) {
                        out.push(Action::Move { to });
                    }
                }
            }
            if unit.kind.can_battle() {
                for target in unit.pos.neighbors() {
                    if enemy_at(state, target, unit.faction).is_some() {
                        out.push(Action::Battle { target });
                    }
                }
            }
        }
        EntityId::City(faction) => {
            let city = &state.cities[faction];
            if !city.standing() {
                return Err(Error::UnknownEntity(entity));
            }
            for target in city.pos.neighbors() {
                if enemy_at(state, target, faction).is_some() {
                    out.push(Action::Battle { target });
                }
            }
            if faction == Faction::Empire {
                out.push(Action::ProduceResource);
            }
            if state.resources[faction] >= unit_cost(faction, &state.config) {
                for to in city.pos.neighbors() {
                    if free(state, to) {
                        for &kind in UnitKind::producible(faction) {
                            out.push(Action::ProduceUnit { kind, to });
                        }
                    }
                }
            }
        }
    }
    out.push(Action::Pass);
    Ok(out)
}

fn check_plan(state: &GameState, plan: &TurnPlan) -> Result<()> {
    for &entity in plan.actions.keys() {
        match state.faction_of(entity) {
            None => return Err(Error::UnknownEntity(entity)),
            Some(f) if f != state.acting => return Err(Error::WrongFaction { entity, acting: state.acting }),
            Some(_) => {}
        }
        if let EntityId::City(f) = entity {
            if !state.cities[f].standing() {
                return Err(Error::UnknownEntity(entity));
            }
        }
    }
    Ok(())
}

/// Resolve one faction's turn.
///
/// Entities act in ascending id order with the city last. Each submitted
/// action is checked against the state at the moment it resolves; illegal or
/// missing actions become PASS and are logged as substitutions. Resolution
/// stops as soon as a city falls.
pub fn apply_turn(state: &GameState, plan: &TurnPlan) -> Result<(GameState, TurnEvents)> {
    if outcome(state).is_finished() {
        return Err(Error::GameOver);
    }
    check_plan(state, plan)?;

    let acting = state.acting;
    let mut next = state.clone();
    let mut events = Vec::new();

    for entity in state.controllable(acting) {
        let legal = legal_actions(&next, entity)?;
        let action = match plan.get(entity) {
            Some(a) if legal.contains(a) => *a,
            submitted => {
                let reason =
                    if submitted.is_some() { SubstitutionReason::Illegal } else { SubstitutionReason::Missing };
                events.push(Event::Substituted { entity, submitted: submitted.copied(), reason });
                continue;
            }
        };
        let conquered = resolve(&mut next, entity, action, &mut events);
        if conquered {
            return Ok((next, TurnEvents { events }));
        }
    }

    let end = end_of_phase(state);
    events.push(end.clone());
    advance(&mut next, &end);
    Ok((next, TurnEvents { events }))
}

fn end_of_phase(state: &GameState) -> Event {
    match state.acting {
        Faction::Empire => Event::TurnEnded { next_turn: state.turn, next_acting: Faction::Nomads, finished: false },
        Faction::Nomads if state.turn >= state.max_turns => {
            Event::TurnEnded { next_turn: state.turn, next_acting: Faction::Empire, finished: true }
        }
        Faction::Nomads => {
            Event::TurnEnded { next_turn: state.turn + 1, next_acting: Faction::Empire, finished: false }
        }
    }
}

fn advance(state: &mut GameState, end: &Event) {
    if let Event::TurnEnded { next_turn, next_acting, finished } = *end {
        state.turn = next_turn;
        state.acting = next_acting;
        state.turn_limit_reached = finished;
    }
}

/// Apply a legal action. Returns true when it destroyed a city.
fn resolve(state: &mut GameState, entity: EntityId, action: Action, events: &mut Vec<Event>) -> bool {
    let faction = state.acting;
    let config = state.config;
    let event = match action {
        Action::Pass => Event::Passed { entity },
        Action::Gather => Event::Gathered { entity, amount: config.empire_farmer_gather },
        Action::ProduceResource => Event::ResourceProduced { entity, amount: config.empire_farmer_gather },
        Action::Move { to } => {
            let from = state.position_of(entity).expect("legal mover exists");
            Event::Moved { entity, from, to }
        }
        Action::ProduceUnit { kind, to } => {
            let unit = spawn(state, kind, to);
            Event::UnitProduced { entity, unit, cost: unit_cost(faction, &config) }
        }
        Action::Battle { target } => {
            let target = enemy_at(state, target, faction).expect("legal target exists");
            let damage = damage_of(faction, &config);
            let hp = match target {
                EntityId::Unit(id) => state.unit(id).expect("target exists").hp,
                EntityId::City(f) => state.cities[f].hp,
            };
            let remaining_hp = (hp - damage).max(0);
            let killed = remaining_hp == 0;
            let resource_gain = match (faction, target, killed) {
                (Faction::Nomads, EntityId::Unit(_), true) => config.nomads_kill_gain,
                _ => 0,
            };
            Event::Attacked { entity, target, damage, remaining_hp, killed, resource_gain }
        }
    };
    apply_event(state, &event);
    events.push(event);

    if let Some(Event::Attacked { target: EntityId::City(f), killed: true, .. }) = events.last() {
        let fallen = Event::CityDestroyed { faction: *f };
        apply_event(state, &fallen);
        events.push(fallen);
        return true;
    }
    false
}

fn apply_event(state: &mut GameState, event: &Event) {
    let acting = state.acting;
    match event {
        Event::Gathered { amount, .. } | Event::ResourceProduced { amount, .. } => {
            state.resources[acting] += amount;
        }
        Event::Moved { entity: EntityId::Unit(id), to, .. } => {
            if let Ok(i) = state.units.binary_search_by_key(id, |u| u.id) {
                state.units[i].pos = *to;
            }
        }
        Event::Moved { .. } => {}
        Event::UnitProduced { unit, cost, .. } => {
            state.resources[acting] -= cost;
            state.next_unit_id = state.next_unit_id.max(unit.id + 1);
            let slot = unit.kind.slot();
            state.next_tag[slot] = state.next_tag[slot].max(unit.tag + 1);
            let at = state.units.partition_point(|u| u.id < unit.id);
            state.units.insert(at, unit.clone());
        }
        Event::Attacked { target, remaining_hp, killed, resource_gain, .. } => {
            match *target {
                EntityId::Unit(id) => {
                    if let Ok(i) = state.units.binary_search_by_key(&id, |u| u.id) {
                        if *killed {
                            state.units.remove(i);
                        } else {
                            state.units[i].hp = *remaining_hp;
                        }
                    }
                    if *killed {
                        state.battles_won[acting] += 1;
                    }
                }
                EntityId::City(f) => state.cities[f].hp = *remaining_hp,
            }
            state.resources[acting] += resource_gain;
        }
        Event::TurnEnded { .. } => advance(state, event),
        Event::Passed { .. } | Event::Substituted { .. } | Event::CityDestroyed { .. } => {}
    }
}

/// Rebuild the next state from the previous state and the logged events,
/// without consulting the plan.
pub fn apply_events(state: &GameState, events: &TurnEvents) -> GameState {
    let mut next = state.clone();
    for event in &events.events {
        apply_event(&mut next, event);
    }
    next
}

pub(super) fn score_tenths(state: &GameState, faction: Faction) -> i64 {
    let c = &state.config;
    c.score_per_resource.0 as i64 * state.resources[faction] as i64
        + 10 * c.score_per_battle as i64 * state.battles_won[faction] as i64
        + 10 * c.score_per_unit as i64 * state.unit_count(faction) as i64
}

/// Weighted sum of remaining resources, battles won and surviving units.
/// Cities are not units.
pub fn score(state: &GameState, faction: Faction) -> f64 {
    score_tenths(state, faction) as f64 / 10.0
}

pub fn outcome(state: &GameState) -> Outcome {
    if !state.cities.empire.standing() {
        return Outcome::NomadsWin;
    }
    if !state.cities.nomads.standing() {
        return Outcome::EmpireWin;
    }
    if !state.turn_limit_reached {
        return Outcome::Ongoing;
    }
    let e = score_tenths(state, Faction::Empire);
    let n = score_tenths(state, Faction::Nomads);
    match e.cmp(&n) {
        std::cmp::Ordering::Greater => Outcome::EmpireWin,
        std::cmp::Ordering::Less => Outcome::NomadsWin,
        std::cmp::Ordering::Equal => Outcome::Draw,
    }
}

/// Attacks needed for each side's combat unit to kill the other's:
/// `(nomads -> empire soldier, empire -> nomads cavalry)`.
pub fn compute_ttk(config: &RuleConfig) -> (u32, u32) {
    (config.empire_soldier_hp.div_ceil(config.nomads_damage), config.nomads_cavalry_hp.div_ceil(config.empire_damage))
}
