//! Line-delimited game transcripts.
//!
//! The first line is a header carrying the configuration and seed; every
//! further line records one faction turn: the plan as submitted, the events
//! as applied and the digest of the resulting state.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{apply_events, apply_turn, new_game, Faction, GameState, TurnEvents, TurnPlan};
use crate::error::{Error, Result};
use crate::rule_space::RuleConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub config: RuleConfig,
    pub seed: u64,
    pub initial_digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: u32,
    pub faction: Faction,
    pub plan: TurnPlan,
    pub events: TurnEvents,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header(TranscriptHeader),
    Turn(TurnRecord),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub turns: Vec<TurnRecord>,
}

impl Transcript {
    pub fn start(state: &GameState) -> Self {
        Transcript {
            header: TranscriptHeader { config: state.config, seed: state.seed, initial_digest: state.digest() },
            turns: Vec::new(),
        }
    }

    /// Append the record for the turn that took `before` to `after`.
    pub fn record(&mut self, before: &GameState, plan: &TurnPlan, events: &TurnEvents, after: &GameState) {
        self.turns.push(TurnRecord {
            turn: before.turn,
            faction: before.acting,
            plan: plan.clone(),
            events: events.clone(),
            digest: after.digest(),
        });
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        serde_json::to_writer(&mut out, &Line::Header(self.header.clone()))?;
        out.write_all(b"\n")?;
        for turn in &self.turns {
            serde_json::to_writer(&mut out, &Line::Turn(turn.clone()))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut header = None;
        let mut turns = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Line>(&line)? {
                Line::Header(h) if header.is_none() && i == 0 => header = Some(h),
                Line::Header(_) => return Err(Error::ReplayMismatch { line: i, reason: "unexpected header".into() }),
                Line::Turn(t) => turns.push(t),
            }
        }
        let header = header.ok_or_else(|| Error::ReplayMismatch { line: 0, reason: "missing header".into() })?;
        Ok(Transcript { header, turns })
    }

    /// Re-run every submitted plan from a fresh game and check each digest
    /// and event list. Returns the final state.
    pub fn replay(&self) -> Result<GameState> {
        let mut state = new_game(&self.header.config, self.header.seed);
        if state.digest() != self.header.initial_digest {
            return Err(Error::ReplayMismatch { line: 0, reason: "initial digest".into() });
        }
        for (i, rec) in self.turns.iter().enumerate() {
            let line = i + 1;
            if rec.turn != state.turn || rec.faction != state.acting {
                return Err(Error::ReplayMismatch { line, reason: "turn order".into() });
            }
            let (next, events) = apply_turn(&state, &rec.plan)?;
            if events != rec.events {
                return Err(Error::ReplayMismatch { line, reason: "events differ".into() });
            }
            if next.digest() != rec.digest {
                return Err(Error::ReplayMismatch { line, reason: "digest differs".into() });
            }
            state = next;
        }
        Ok(state)
    }

    /// Rebuild the final state from the recorded events alone.
    pub fn replay_events(&self) -> Result<GameState> {
        let mut state = new_game(&self.header.config, self.header.seed);
        for (i, rec) in self.turns.iter().enumerate() {
            state = apply_events(&state, &rec.events);
            if state.digest() != rec.digest {
                return Err(Error::ReplayMismatch { line: i + 1, reason: "event replay digest".into() });
            }
        }
        Ok(state)
    }
}
