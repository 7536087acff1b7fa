//! Text and SVG snapshots of a game state.

use std::fmt::Write;

use super::{EntityId, Faction, GameState, Outcome, Position, UnitKind};

pub const EMPTY_GLYPH: char = '.';

fn glyph(state: &GameState, pos: Position) -> char {
    match state.occupant(pos) {
        None => EMPTY_GLYPH,
        Some(EntityId::City(Faction::Empire)) => 'E',
        Some(EntityId::City(Faction::Nomads)) => 'N',
        Some(EntityId::Unit(id)) => match state.unit(id).map(|u| u.kind) {
            Some(UnitKind::Farmer) => 'f',
            Some(UnitKind::Soldier) => 's',
            Some(UnitKind::Cavalry) => 'c',
            None => '?',
        },
    }
}

/// One-line summary of the game clock, resources and scores.
pub fn status_line(state: &GameState) -> String {
    format!(
        "Turn {}/{} ({} to act) | Empire: res {} score {:.1} | Nomads: res {} score {:.1}",
        state.turn,
        state.max_turns,
        state.acting,
        state.resources.empire,
        state.score(Faction::Empire),
        state.resources.nomads,
        state.score(Faction::Nomads),
    )
}

/// A line describing a finished game, or `None` while it is ongoing.
pub fn outcome_line(state: &GameState) -> Option<String> {
    let fallen = Faction::BOTH.into_iter().find(|&f| !state.cities[f].standing());
    match (state.outcome(), fallen) {
        (Outcome::Ongoing, _) => None,
        (Outcome::Draw, _) => Some("Result: draw on score".to_string()),
        (o, Some(f)) => Some(format!("Result: {} wins, {} city destroyed", o.winner().expect("decisive"), f)),
        (o, None) => Some(format!(
            "Result: {} wins on score ({:.1} vs {:.1})",
            o.winner().expect("decisive"),
            state.score(Faction::Empire),
            state.score(Faction::Nomads)
        )),
    }
}

/// Fixed-width grid: `E`/`N` cities, `f` farmer, `s` soldier, `c` cavalry,
/// `.` empty. Row `y` is printed top to bottom, column `x` left to right.
pub fn render_text(state: &GameState) -> String {
    let m = state.map_size() as i32;
    let mut out = String::new();
    out.push_str("   ");
    for x in 0..m {
        let _ = write!(out, "{x:>2}");
    }
    out.push('\n');
    for y in 0..m {
        let _ = write!(out, "{y:>2} ");
        for x in 0..m {
            let _ = write!(out, " {}", glyph(state, Position::new(x, y)));
        }
        out.push('\n');
    }
    out.push_str(&status_line(state));
    out.push('\n');
    if let Some(line) = outcome_line(state) {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

const CELL: i32 = 48;

fn color(faction: Faction) -> &'static str {
    match faction {
        Faction::Empire => "#2b6cb0",
        Faction::Nomads => "#c05621",
    }
}

/// A static SVG snapshot with one labelled glyph per entity.
pub fn render_svg(state: &GameState) -> String {
    let m = state.map_size() as i32;
    let board = m * CELL;
    let height = board + 56;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{board}" height="{height}" viewBox="0 0 {board} {height}" font-family="monospace">"#
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{board}" height="{board}" fill="#f7f3e8"/>"##);
    for i in 0..=m {
        let p = i * CELL;
        let _ = writeln!(s, r##"<line x1="{p}" y1="0" x2="{p}" y2="{board}" stroke="#999"/>"##);
        let _ = writeln!(s, r##"<line x1="0" y1="{p}" x2="{board}" y2="{p}" stroke="#999"/>"##);
    }
    for faction in Faction::BOTH {
        let city = &state.cities[faction];
        if !city.standing() {
            continue;
        }
        let (x, y) = (city.pos.x * CELL, city.pos.y * CELL);
        let _ = writeln!(
            s,
            r#"<rect class="city" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            x + 4,
            y + 4,
            CELL - 8,
            CELL - 8,
            color(faction)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" fill="white" font-size="12">{}</text>"#,
            x + CELL / 2,
            y + CELL / 2 + 4,
            city.hp
        );
    }
    for unit in &state.units {
        let (cx, cy) = (unit.pos.x * CELL + CELL / 2, unit.pos.y * CELL + CELL / 2);
        let letter = match unit.kind {
            UnitKind::Farmer => 'F',
            UnitKind::Soldier => 'S',
            UnitKind::Cavalry => 'C',
        };
        let _ = writeln!(
            s,
            r#"<circle class="{}" cx="{cx}" cy="{cy}" r="{}" fill="{}"/>"#,
            unit.kind.as_str(),
            CELL / 2 - 6,
            color(unit.faction)
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" text-anchor="middle" fill="white" font-size="12">{letter}{}</text>"#,
            cy + 4,
            unit.hp
        );
    }
    let _ = writeln!(s, r#"<text x="4" y="{}" font-size="11">{}</text>"#, board + 20, escape(&status_line(state)));
    if let Some(line) = outcome_line(state) {
        let _ = writeln!(s, r#"<text x="4" y="{}" font-size="11">{}</text>"#, board + 40, escape(&line));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
