use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::Observation;
use crate::engine::{Action, Position, TurnPlan, UnitKind};

/// Counts of entries that degraded to PASS.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackTally {
    /// No JSON object could be found in the text at all.
    pub no_document: bool,
    /// Entries whose value could not be read as an action.
    pub malformed: u32,
    /// Keys that name no controllable entity.
    pub unknown: u32,
    /// Well-formed actions that are not in the entity's legal set.
    pub illegal: u32,
    /// Controllable entities the document did not mention.
    pub missing: u32,
}

impl FallbackTally {
    /// Entries the agent supplied that had to be replaced.
    pub fn substitutions(&self) -> u32 {
        self.malformed + self.unknown + self.illegal
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedPlan {
    pub plan: TurnPlan,
    pub tally: FallbackTally,
}

/// First syntactically valid JSON object embedded anywhere in `text`.
pub(crate) fn first_object(text: &str) -> Option<Map<String, Value>> {
    for (i, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}

fn position(v: Option<&Value>) -> Option<Position> {
    let as_i32 = |v: &Value| v.as_i64().and_then(|n| i32::try_from(n).ok());
    match v? {
        Value::Object(m) => Some(Position::new(as_i32(m.get("x")?)?, as_i32(m.get("y")?)?)),
        Value::Array(a) if a.len() == 2 => Some(Position::new(as_i32(&a[0])?, as_i32(&a[1])?)),
        _ => None,
    }
}

fn read_action(v: &Value) -> Option<Action> {
    let m = v.as_object()?;
    let kind = m.get("action_type")?.as_str()?.trim().to_ascii_uppercase();
    let to = || position(m.get("to")).or_else(|| position(m.get("target")));
    let target = || position(m.get("target")).or_else(|| position(m.get("to")));
    Some(match kind.as_str() {
        "GATHER" => Action::Gather,
        "PASS" => Action::Pass,
        "PRODUCE_RESOURCE" => Action::ProduceResource,
        "MOVE" => Action::Move { to: to()? },
        "BATTLE" => Action::Battle { target: target()? },
        "PRODUCE_UNIT" => {
            let unit: UnitKind = m.get("produce_unit_type")?.as_str()?.parse().ok()?;
            Action::ProduceUnit { kind: unit, to: to()? }
        }
        _ => return None,
    })
}

/// Turn untrusted agent text into a plan. Never fails: anything that cannot
/// be used becomes PASS and is counted in the tally.
pub fn parse_action_document(text: &str, obs: &Observation) -> ParsedPlan {
    let mut tally = FallbackTally::default();
    let mut plan = obs.all_pass();
    let names = obs.names();

    let Some(mut doc) = first_object(text) else {
        tally.no_document = true;
        tally.missing = obs.legal.len() as u32;
        return ParsedPlan { plan, tally };
    };
    if let Some(Value::Object(inner)) = doc.get("actions") {
        if !names.contains_key("actions") {
            doc = inner.clone();
        }
    }

    let mut seen = 0;
    for (key, value) in &doc {
        let Some(&entity) = names.get(key.trim()) else {
            tally.unknown += 1;
            continue;
        };
        seen += 1;
        match read_action(value) {
            None => tally.malformed += 1,
            Some(action) if obs.legal[&entity].contains(&action) => {
                plan.set(entity, action);
            }
            Some(_) => tally.illegal += 1,
        }
    }
    tally.missing = (obs.legal.len() as u32).saturating_sub(seen);
    ParsedPlan { plan, tally }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{new_game, EntityId, Faction};
    use crate::rule_space::RuleConfig;

    fn obs() -> Observation {
        Observation::new(&new_game(&RuleConfig::default(), 0))
    }

    #[test]
    fn single_gather() {
        let o = obs();
        let parsed = parse_action_document(r#"{"empire_farmer_0": {"action_type": "GATHER"}}"#, &o);
        assert_eq!(parsed.plan.get(EntityId::Unit(0)), Some(&Action::Gather));
        for (e, a) in &parsed.plan.actions {
            if *e != EntityId::Unit(0) {
                assert_eq!(*a, Action::Pass);
            }
        }
        assert_eq!(parsed.tally.substitutions(), 0);
        assert_eq!(parsed.tally.missing, 3);
    }

    #[test]
    fn example_document_with_production() {
        let o = obs();
        let text = r#"{"empire_farmer_0": {"action_type": "GATHER"},
            "empire_city": {"action_type": "PRODUCE_UNIT",
              "produce_unit_type": "soldier", "to": {"x": 1, "y": 2}}}"#;
        let parsed = parse_action_document(text, &o);
        assert_eq!(
            parsed.plan.get(EntityId::City(Faction::Empire)),
            Some(&Action::ProduceUnit { kind: UnitKind::Soldier, to: Position::new(1, 2) })
        );
    }

    #[test]
    fn prose_is_all_pass() {
        let o = obs();
        let parsed = parse_action_document("I attack!", &o);
        assert_eq!(parsed.plan, o.all_pass());
        assert!(parsed.tally.no_document);
    }

    #[test]
    fn illegal_entries_fall_back_individually() {
        let o = obs();
        // (1,1) holds the Empire city.
        let text = r#"Sure: {"empire_farmer_0": {"action_type": "MOVE", "to": {"x": 1, "y": 1}},
                              "empire_farmer_1": {"action_type": "GATHER"},
                              "empire_soldier_0": {"action_type": "FLY"},
                              "nomads_cavalry_0": {"action_type": "PASS"}} thanks"#;
        let parsed = parse_action_document(text, &o);
        assert_eq!(parsed.plan.get(EntityId::Unit(0)), Some(&Action::Pass));
        assert_eq!(parsed.plan.get(EntityId::Unit(1)), Some(&Action::Gather));
        assert_eq!(parsed.plan.get(EntityId::Unit(2)), Some(&Action::Pass));
        assert_eq!(parsed.tally.illegal, 1);
        assert_eq!(parsed.tally.malformed, 1);
        assert_eq!(parsed.tally.unknown, 1);
        assert_eq!(parsed.tally.missing, 1);
    }

    #[test]
    fn wire_actions_wrapper() {
        let o = obs();
        let text = r#"{"game_id": "g", "turn": 1, "actions": {"empire_farmer_1": {"action_type": "gather"}}}"#;
        let parsed = parse_action_document(text, &o);
        assert_eq!(parsed.plan.get(EntityId::Unit(1)), Some(&Action::Gather));
    }

    #[test]
    fn first_object_skips_broken_prefix() {
        let m = first_object(r#"{oops {"a": 1} {"b": 2}"#).unwrap();
        assert!(m.contains_key("a"));
        assert!(first_object("no braces").is_none());
    }
}
