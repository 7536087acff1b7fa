//! Oracles and invariant checks shared by the integration tests. Everything
//! here is written against the public API only and avoids the library's own
//! numerical routines.

#![allow(dead_code)]

use std::collections::BTreeSet;

use civmini::agents::AgentSpec;
use civmini::engine::transcript::Transcript;
use civmini::engine::{apply_turn, new_game, EntityId, Event, GameState, Position};
use civmini::evaluator::{play_recorded, Matchup};
use civmini::rule_space::RuleConfig;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Invariant violations in one resolved faction turn.
pub fn turn_violations(before: &GameState, events: &[Event], after: &GameState) -> Vec<String> {
    let mut out = Vec::new();
    let acting = before.acting;
    let tag = format!("turn {} {:?}", before.turn, acting);

    let mut tiles: BTreeSet<Position> = BTreeSet::new();
    let m = after.config.map_size as i32;
    let cities = [&after.cities.empire, &after.cities.nomads];
    let occupied = after.units.iter().map(|u| u.pos).chain(cities.iter().filter(|c| c.hp > 0).map(|c| c.pos));
    for pos in occupied {
        if !(0..m).contains(&pos.x) || !(0..m).contains(&pos.y) {
            out.push(format!("{tag}: {pos} off the map"));
        }
        if !tiles.insert(pos) {
            out.push(format!("{tag}: two entities on {pos}"));
        }
    }

    let allowed: BTreeSet<EntityId> = before.controllable(acting).into_iter().collect();
    let mut acted = BTreeSet::new();
    let mut resources = i64::from(before.resources[acting]);
    for e in events {
        let actor = match e {
            Event::Gathered { entity, amount } | Event::ResourceProduced { entity, amount } => {
                resources += i64::from(*amount);
                Some(*entity)
            }
            Event::UnitProduced { entity, cost, .. } => {
                resources -= i64::from(*cost);
                if resources < 0 {
                    out.push(format!("{tag}: resources went negative"));
                }
                Some(*entity)
            }
            Event::Attacked { entity, resource_gain, .. } => {
                resources += i64::from(*resource_gain);
                Some(*entity)
            }
            Event::Moved { entity, .. } | Event::Passed { entity } | Event::Substituted { entity, .. } => Some(*entity),
            Event::CityDestroyed { .. } | Event::TurnEnded { .. } => None,
        };
        if let Some(a) = actor {
            if !allowed.contains(&a) {
                out.push(format!("{tag}: {a} is not an acting entity"));
            }
            if !acted.insert(a) {
                out.push(format!("{tag}: {a} acted twice"));
            }
        }
    }
    if resources != i64::from(after.resources[acting]) {
        out.push(format!("{tag}: resource ledger {resources} != state {}", after.resources[acting]));
    }
    let other = acting.opponent();
    if after.resources[other] != before.resources[other] {
        out.push(format!("{tag}: idle faction's resources changed"));
    }
    for u in &after.units {
        if u.hp <= 0 || u.hp > u.kind.max_hp(&after.config) {
            out.push(format!("{tag}: {} has hp {}", u.name(), u.hp));
        }
    }
    if after.turn > after.max_turns {
        out.push(format!("{tag}: turn counter {} past the limit", after.turn));
    }
    out
}

/// Re-executes a transcript turn by turn and collects every violation,
/// including games that fail to finish within the turn limit.
pub fn transcript_violations(t: &Transcript) -> Vec<String> {
    let mut out = Vec::new();
    let mut state = new_game(&t.header.config, t.header.seed);
    for rec in &t.turns {
        match apply_turn(&state, &rec.plan) {
            Ok((next, events)) => {
                out.extend(turn_violations(&state, &events.events, &next));
                state = next;
            }
            Err(e) => {
                out.push(format!("turn {}: engine rejected the plan: {e}", rec.turn));
                return out;
            }
        }
    }
    if !state.outcome().is_finished() {
        out.push("game did not finish".into());
    }
    if t.turns.len() > 2 * t.header.config.max_turns as usize {
        out.push(format!("{} phases exceed the turn limit", t.turns.len()));
    }
    out
}

pub fn random_matchup() -> Matchup {
    Matchup::new(AgentSpec::Random, AgentSpec::Random)
}

pub fn record_random_game(config: &RuleConfig, seed: u64) -> Transcript {
    play_recorded(config, &random_matchup(), seed).1
}

/// Matérn 5/2 written out from its definition.
pub fn matern(a: &[f64], b: &[f64], lengthscale: f64, signal: f64) -> f64 {
    let r = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() / lengthscale;
    let s = 5f64.sqrt() * r;
    signal * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Posterior mean and standard deviation in target units, computed with
/// dense solves against `K + noise I` on population-standardized targets.
pub fn oracle_posterior(
    xs: &[Vec<f64>],
    ys: &[f64],
    lengthscale: f64,
    signal: f64,
    noise: f64,
    q: &[f64],
) -> (f64, f64) {
    let n = ys.len();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let z: Vec<f64> = ys.iter().map(|y| (y - mean) / sd).collect();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n).map(|j| matern(&xs[i], &xs[j], lengthscale, signal) + if i == j { noise } else { 0.0 }).collect()
        })
        .collect();
    let kq: Vec<f64> = xs.iter().map(|x| matern(x, q, lengthscale, signal)).collect();
    let alpha = dense_solve(k.clone(), z);
    let w = dense_solve(k, kq.clone());
    let mu: f64 = kq.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let var = signal - kq.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    (mean + sd * mu, sd * var.max(0.0).sqrt())
}

/// Monte Carlo estimate of `E[max(y_best - Y, 0)]` with `Y ~ N(mu, sigma^2)`,
/// drawn as antithetic pairs.
pub fn mc_expected_improvement(mu: f64, sigma: f64, y_best: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gain = |y: f64| (y_best - y).max(0.0);
    let pairs = samples / 2;
    let total: f64 = (0..pairs)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            gain(mu + sigma * z) + gain(mu - sigma * z)
        })
        .sum();
    total / (2 * pairs) as f64
}

/// Random `(mu, sigma, y_best)` triples for EI checks.
pub fn ei_triples(count: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(0.05..1.0), rng.random_range(-2.0..2.0)))
        .collect()
}

/// Five toy training points in three dimensions.
pub fn toy_data() -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs =
        vec![vec![0.1, 0.2, 0.9], vec![0.4, 0.8, 0.3], vec![0.7, 0.1, 0.5], vec![0.9, 0.6, 0.2], vec![0.3, 0.5, 0.6]];
    let ys = vec![0.8, 0.35, 0.5, 0.1, 0.42];
    (xs, ys)
}

/// Table of the four published parameter columns and their TTK pairs.
pub fn published_ttk_columns() -> Vec<(RuleConfig, (u32, u32))> {
    let column = |init, gather, kill, dmg_e, dmg_n, hp_e, hp_n| RuleConfig {
        initial_resources: init,
        empire_farmer_gather: gather,
        nomads_kill_gain: kill,
        empire_damage: dmg_e,
        nomads_damage: dmg_n,
        empire_soldier_hp: hp_e,
        nomads_cavalry_hp: hp_n,
        ..RuleConfig::default()
    };
    vec![
        (column(10, 1, 6, 4, 3, 9, 10), (3, 3)),
        (column(2, 2, 9, 2, 3, 14, 11), (5, 6)),
        (column(10, 4, 1, 2, 5, 16, 16), (4, 8)),
        (column(10, 1, 7, 4, 3, 9, 12), (3, 3)),
    ]
}
