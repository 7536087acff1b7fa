use std::fmt::Write;

use super::Observation;
use crate::engine::{Faction, GameState};
use crate::rule_space::RuleConfig;

/// Rulebook passages with the configuration's values filled in.
pub fn rulebook(c: &RuleConfig) -> Vec<String> {
    let m = c.map_size;
    vec![
        format!(
            "The map is a {m} by {m} grid of tiles. Positions are written (x, y) with x the column \
             and y the row, both starting at 0. Only one unit or city may occupy a tile."
        ),
        format!(
            "The game lasts at most {} turns. Each turn the Empire acts first, then the Nomads. \
             Every unit and the city of the acting faction performs exactly one action per turn.",
            c.max_turns
        ),
        "The Empire city starts at (1, 1) and the Nomads city at the opposite corner. Cities never \
         move. Destroying the enemy city wins the game immediately."
            .to_string(),
        format!(
            "Farmers belong to the Empire. A farmer can GATHER to collect {} resources from its \
             tile, or MOVE one tile. Farmers have 5 HP and cannot battle.",
            c.empire_farmer_gather
        ),
        format!(
            "Soldiers belong to the Empire. A soldier has {} HP, moves one tile per turn and can \
             BATTLE an adjacent enemy unit or city for {} damage. Soldiers cannot gather.",
            c.empire_soldier_hp, c.empire_damage
        ),
        format!(
            "Cavalry belong to the Nomads. Cavalry have {} HP and high mobility: cavalry movement \
             reaches any free tile within two steps in Manhattan distance. Cavalry BATTLE adjacent \
             enemies for {} damage.",
            c.nomads_cavalry_hp, c.nomads_damage
        ),
        format!(
            "Nomads cannot gather resources. Each time a Nomad attack kills an enemy unit the \
             Nomads gain {} resources.",
            c.nomads_kill_gain
        ),
        format!(
            "BATTLE targets an enemy unit or city on an orthogonally adjacent tile. The target \
             loses HP equal to the attacker's damage; there is no counterattack. A unit at 0 HP is \
             removed. Cities have the HP and damage of their faction's combat unit: Empire city {} \
             HP, Nomads city {} HP.",
            c.empire_soldier_hp, c.nomads_cavalry_hp
        ),
        format!(
            "PRODUCE_UNIT spends resources to place a new unit on an empty tile adjacent to the \
             city. Empire units (farmer or soldier) cost {}; Nomad cavalry cost {}. Both factions \
             start with {} resources.",
            c.empire_unit_cost, c.nomads_unit_cost, c.initial_resources
        ),
        format!(
            "PRODUCE_RESOURCE lets the Empire city generate {} resources. The Nomads city cannot \
             produce resources.",
            c.empire_farmer_gather
        ),
        format!(
            "If no city falls, the higher score wins when the turn limit is reached. Score = {} per \
             remaining resource + {} per battle won + {} per surviving unit. Equal scores are a draw.",
            c.score_per_resource, c.score_per_battle, c.score_per_unit
        ),
        "PASS does nothing. Any illegal or malformed action is replaced by PASS.".to_string(),
    ]
}

/// Faction-specific playing advice included in every state description.
pub fn strategy_note(faction: Faction) -> &'static str {
    match faction {
        Faction::Empire => {
            "Keep farmers gathering, train soldiers when affordable and place them between the \
             Nomad cavalry and your city. Attack cavalry that come adjacent; a strong economy wins \
             on score if the city survives."
        }
        Faction::Nomads => {
            "You only earn resources by killing. Use cavalry mobility to reach the Empire city, \
             pick off farmers and isolated soldiers, and spend kill rewards on more cavalry."
        }
    }
}

fn hp(current: i32, max: i32) -> String {
    format!("HP {current}/{max}")
}

fn roster(out: &mut String, state: &GameState, faction: Faction) {
    let city = &state.cities[faction];
    let _ = writeln!(
        out,
        "Resources: {}. City {} at {}, {}.",
        state.resources[faction],
        city.name(),
        city.pos,
        hp(city.hp, city.max_hp)
    );
    let units: Vec<_> = state.units_of(faction).collect();
    if units.is_empty() {
        out.push_str("No units.\n");
    }
    for u in units {
        let _ = writeln!(
            out,
            "- {} ({}) at {}, {}",
            u.name(),
            u.kind.as_str(),
            u.pos,
            hp(u.hp, u.kind.max_hp(&state.config))
        );
    }
}

/// Structured natural-language description of the acting faction's
/// situation: clock, own forces, enemy positions, strategy note and the
/// legal actions of each entity.
pub fn describe_state(state: &GameState, faction: Faction, config: &RuleConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Turn {} of {}. You command the {} on a {}x{} map.",
        state.turn, config.max_turns, faction, config.map_size, config.map_size
    );
    let _ = writeln!(out, "\n## Your forces ({faction})");
    roster(&mut out, state, faction);
    let _ = writeln!(out, "\n## Enemy forces ({})", faction.opponent());
    roster(&mut out, state, faction.opponent());
    let _ = writeln!(out, "\n## Strategy guide\n{}", strategy_note(faction));
    let _ = writeln!(out, "\n## Legal actions");
    let mut view = state.clone();
    view.acting = faction;
    let obs = Observation::new(&view);
    for (entity, legal) in &obs.legal {
        let list: Vec<String> = legal.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "- {}: {}", obs.name_of(*entity), list.join("; "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::new_game;

    #[test]
    fn header_and_determinism() {
        let c = RuleConfig::default();
        let s = new_game(&c, 0);
        let text = describe_state(&s, Faction::Empire, &c);
        assert!(text.starts_with("Turn 1 of 16."));
        assert_eq!(text, describe_state(&s, Faction::Empire, &c));
    }

    #[test]
    fn sections_in_order() {
        let c = RuleConfig::default();
        let text = describe_state(&new_game(&c, 0), Faction::Nomads, &c);
        let idx = |needle: &str| text.find(needle).unwrap_or_else(|| panic!("missing {needle}"));
        assert!(idx("Turn 1 of 16") < idx("## Your forces"));
        assert!(idx("## Your forces") < idx("## Enemy forces"));
        assert!(idx("## Enemy forces") < idx("## Strategy guide"));
        assert!(idx("## Strategy guide") < idx("## Legal actions"));
        assert!(text.contains("- nomads_cavalry_0: MOVE"));
    }

    #[test]
    fn enemy_cavalry_listed_for_empire() {
        let c = RuleConfig::default();
        let text = describe_state(&new_game(&c, 0), Faction::Empire, &c);
        let enemy = &text[text.find("## Enemy forces").unwrap()..text.find("## Strategy").unwrap()];
        assert!(enemy.contains("nomads_cavalry_0 (cavalry) at (4, 5)"));
        assert!(enemy.contains("nomads_cavalry_1 (cavalry) at (5, 4)"));
    }

    #[test]
    fn rulebook_mentions_values() {
        let c = RuleConfig::default();
        let book = rulebook(&c).join("\n");
        assert!(book.contains("cost 4"));
        assert!(book.contains("Score = 0.4 per"));
    }
}
