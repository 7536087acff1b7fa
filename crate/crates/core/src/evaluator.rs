//! Self-play evaluation of a rule configuration.
//!
//! Counts are the source of truth: rates and the balance loss are derived
//! from integer win/loss/draw tallies, and games are merged in seed order so
//! aggregates never depend on scheduling.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{build_agent, AgentSpec, GameContext, Observation};
use crate::engine::transcript::Transcript;
use crate::engine::{apply_turn, new_game, Event, Faction, Outcome, PerFaction, TurnPlan};
use crate::optimizer::TrialRecord;
use crate::rule_space::RuleConfig;
use crate::seeding::agent_seed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub seed: u64,
    pub outcome: Outcome,
    pub turns_played: u32,
    pub scores: PerFaction<f64>,
    /// Entries replaced by PASS, whether by the agent's parser or the engine.
    pub substitutions: PerFaction<u32>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub empire: u32,
    pub nomads: u32,
    pub draws: u32,
}

impl Counts {
    pub fn new(empire: u32, nomads: u32, draws: u32) -> Self {
        Counts { empire, nomads, draws }
    }

    pub fn total(&self) -> u32 {
        self.empire + self.nomads + self.draws
    }

    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::EmpireWin => self.empire += 1,
            Outcome::NomadsWin => self.nomads += 1,
            Outcome::Draw => self.draws += 1,
            Outcome::Ongoing => panic!("unfinished game counted"),
        }
    }

    /// `(w_E, w_N, w_D)`.
    pub fn rates(&self) -> (f64, f64, f64) {
        let n = f64::from(self.total());
        (f64::from(self.empire) / n, f64::from(self.nomads) / n, f64::from(self.draws) / n)
    }
}

/// `|w_E - 1/2| + |w_N - 1/2| + w_D / 2`, evaluated as a single integer
/// ratio over `2n` so the only rounding is the final division.
pub fn loss_from_counts(c: Counts) -> f64 {
    let n = i64::from(c.total());
    assert!(n > 0, "loss of an empty batch");
    let num = (2 * i64::from(c.empire) - n).abs() + (2 * i64::from(c.nomads) - n).abs() + i64::from(c.draws);
    num as f64 / (2 * n) as f64
}

/// The same loss written over rates; agrees with [`loss_from_counts`] up to
/// floating-point rounding.
pub fn loss_from_rates(w_e: f64, w_n: f64, w_d: f64) -> f64 {
    (w_e - 0.5).abs() + (w_n - 0.5).abs() + 0.5 * w_d
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub n_games: u32,
    pub counts: Counts,
    pub w_e: f64,
    pub w_n: f64,
    pub w_d: f64,
    pub loss: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub games: Vec<GameResult>,
}

impl EvalResult {
    pub fn from_counts(counts: Counts, games: Vec<GameResult>) -> Self {
        let (w_e, w_n, w_d) = counts.rates();
        EvalResult { n_games: counts.total(), counts, w_e, w_n, w_d, loss: loss_from_counts(counts), games }
    }

    pub fn from_games(games: Vec<GameResult>) -> Self {
        let mut counts = Counts::default();
        for g in &games {
            counts.record(g.outcome);
        }
        Self::from_counts(counts, games)
    }

    /// `Empire wins | Nomads wins` as percentages.
    pub fn split(&self) -> String {
        format!("{:.1} | {:.1}", 100.0 * self.w_e, 100.0 * self.w_n)
    }
}

/// Anything that can score a configuration from a batch of games.
pub trait Objective: Sync {
    fn evaluate(&self, config: &RuleConfig, n_games: u32, base_seed: u64) -> EvalResult;

    fn describe(&self) -> String;
}

/// Which agent plays each side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matchup {
    pub empire: AgentSpec,
    pub nomads: AgentSpec,
}

impl Default for Matchup {
    fn default() -> Self {
        Matchup { empire: AgentSpec::Heuristic, nomads: AgentSpec::Heuristic }
    }
}

impl Matchup {
    pub fn new(empire: AgentSpec, nomads: AgentSpec) -> Self {
        Matchup { empire, nomads }
    }
}

impl fmt::Display for Matchup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E={},N={}", self.empire, self.nomads)
    }
}

/// Parses `E=<kind>,N=<kind>`; either side may be omitted and defaults to
/// the heuristic agent. Kinds may not contain commas.
impl FromStr for Matchup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut m = Matchup::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (side, kind) =
                part.split_once('=').ok_or_else(|| format!("expected E=<kind> or N=<kind>, got {part:?}"))?;
            let spec: AgentSpec = kind.trim().parse()?;
            match side.trim() {
                "E" | "e" | "empire" => m.empire = spec,
                "N" | "n" | "nomads" => m.nomads = spec,
                other => return Err(format!("unknown side {other:?}")),
            }
        }
        Ok(m)
    }
}

fn run_game(config: &RuleConfig, matchup: &Matchup, seed: u64, mut transcript: Option<&mut Transcript>) -> GameResult {
    let ctx = GameContext { game_id: format!("game-{seed}") };
    let mut agents = PerFaction::new(
        build_agent(&matchup.empire.with_seed(agent_seed(seed, "E")), Faction::Empire, &ctx),
        build_agent(&matchup.nomads.with_seed(agent_seed(seed, "N")), Faction::Nomads, &ctx),
    );
    let mut engine_subs = PerFaction::new(0u32, 0u32);
    let mut state = new_game(config, seed);
    if let Some(t) = transcript.as_deref_mut() {
        *t = Transcript::start(&state);
    }
    while !state.outcome().is_finished() {
        let obs = Observation::new(&state);
        let proposed = agents[state.acting].plan(&obs);
        // Keys outside the acting faction's entities would make the engine
        // reject the whole turn, so drop them here.
        let plan: TurnPlan = proposed.actions.into_iter().filter(|(e, _)| obs.legal.contains_key(e)).collect();
        let (next, events) = apply_turn(&state, &plan).expect("plan covers only acting entities");
        engine_subs[state.acting] +=
            events.events.iter().filter(|e| matches!(e, Event::Substituted { .. })).count() as u32;
        if let Some(t) = transcript.as_deref_mut() {
            t.record(&state, &plan, &events, &next);
        }
        state = next;
    }
    GameResult {
        seed,
        outcome: state.outcome(),
        turns_played: state.turn,
        scores: PerFaction::new(state.score(Faction::Empire), state.score(Faction::Nomads)),
        substitutions: PerFaction::new(
            engine_subs.empire + agents.empire.fallbacks(),
            engine_subs.nomads + agents.nomads.fallbacks(),
        ),
    }
}

/// Plays one game to completion. Agent seeds are derived from `seed` and the
/// faction, so the same call always produces the same game.
pub fn play_game(config: &RuleConfig, empire: &AgentSpec, nomads: &AgentSpec, seed: u64) -> GameResult {
    run_game(config, &Matchup::new(empire.clone(), nomads.clone()), seed, None)
}

/// As [`play_game`], also returning the full transcript.
pub fn play_recorded(config: &RuleConfig, matchup: &Matchup, seed: u64) -> (GameResult, Transcript) {
    let mut t = Transcript::start(&new_game(config, seed));
    let result = run_game(config, matchup, seed, Some(&mut t));
    (result, t)
}

/// Self-play evaluator backed by a worker pool.
pub struct GameEvaluator {
    pub matchup: Matchup,
    pool: Option<rayon::ThreadPool>,
}

impl GameEvaluator {
    /// `workers == 0` uses the global pool.
    pub fn new(matchup: Matchup, workers: usize) -> Result<Self> {
        let pool = if workers == 0 {
            None
        } else {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?,
            )
        };
        Ok(GameEvaluator { matchup, pool })
    }

    pub fn heuristic() -> Self {
        GameEvaluator { matchup: Matchup::default(), pool: None }
    }
}

impl Objective for GameEvaluator {
    fn evaluate(&self, config: &RuleConfig, n_games: u32, base_seed: u64) -> EvalResult {
        evaluate_with(config, n_games, base_seed, &self.matchup, self.pool.as_ref())
    }

    fn describe(&self) -> String {
        format!("self-play {}", self.matchup)
    }
}

/// Plays games with seeds `base_seed..base_seed + n_games`.
pub fn evaluate(config: &RuleConfig, n_games: u32, base_seed: u64, matchup: &Matchup) -> EvalResult {
    evaluate_with(config, n_games, base_seed, matchup, None)
}

fn evaluate_with(
    config: &RuleConfig,
    n_games: u32,
    base_seed: u64,
    matchup: &Matchup,
    pool: Option<&rayon::ThreadPool>,
) -> EvalResult {
    assert!(n_games >= 1, "evaluate needs at least one game");
    let seeds: Vec<u64> = (0..u64::from(n_games)).map(|i| base_seed.wrapping_add(i)).collect();
    let play = || -> Vec<GameResult> { seeds.par_iter().map(|&s| run_game(config, matchup, s, None)).collect() };
    let games = match pool {
        Some(p) => p.install(play),
        None => play(),
    };
    EvalResult::from_games(games)
}

/// Among records with loss at most `threshold`, the lowest loss; ties go to
/// the record backed by more games, then to the earlier iteration.
pub fn select_best_checkpoint(history: &[TrialRecord], threshold: f64) -> Option<&TrialRecord> {
    history.iter().filter(|r| r.eval.loss <= threshold).min_by(|a, b| {
        a.eval.loss.total_cmp(&b.eval.loss).then(b.n_games.cmp(&a.n_games)).then(a.iteration.cmp(&b.iteration))
    })
}

/// The balanced checkpoint if there is one, otherwise the lowest-loss
/// record (earliest on ties).
pub fn select_final(history: &[TrialRecord], threshold: f64) -> Option<&TrialRecord> {
    select_best_checkpoint(history, threshold).or_else(|| crate::optimizer::best_by_loss(history))
}

/// Per-game line of an evaluation report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub seed: u64,
    pub outcome: Outcome,
    pub turns: u32,
    pub scores: PerFaction<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: RuleConfig,
    pub agents: Matchup,
    pub base_seed: u64,
    pub n_games: u32,
    pub counts: Counts,
    pub w_e: f64,
    pub w_n: f64,
    pub w_d: f64,
    pub loss: f64,
    pub games: Vec<GameSummary>,
}

impl EvalReport {
    pub fn new(config: &RuleConfig, agents: &Matchup, base_seed: u64, eval: &EvalResult) -> Self {
        EvalReport {
            config: *config,
            agents: agents.clone(),
            base_seed,
            n_games: eval.n_games,
            counts: eval.counts,
            w_e: eval.w_e,
            w_n: eval.w_n,
            w_d: eval.w_d,
            loss: eval.loss,
            games: eval
                .games
                .iter()
                .map(|g| GameSummary { seed: g.seed, outcome: g.outcome, turns: g.turns_played, scores: g.scores })
                .collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}
