use std::fmt::Write;

use civmini::engine::compute_ttk;
use civmini::evaluator::{select_best_checkpoint, select_final};
use civmini::optimizer::{best_by_loss, total_games, TrialRecord};

/// Summary of one run log: best loss, checkpoint, budget and the TTK pair of
/// the selected configuration.
pub fn summarize(name: &str, records: &[TrialRecord], threshold: f64) -> String {
    let mut out = String::new();
    let Some(first) = records.first() else {
        let _ = writeln!(out, "{name}: empty log");
        return out;
    };
    let best = best_by_loss(records).expect("non-empty");
    let _ = writeln!(out, "{name}: {} with {} records", first.method, records.len());
    let _ = writeln!(
        out,
        "  best loss      {:.4} at iteration {} over {} games ({})",
        best.eval.loss,
        best.iteration,
        best.n_games,
        best.eval.split()
    );
    match select_best_checkpoint(records, threshold) {
        Some(c) => {
            let _ = writeln!(
                out,
                "  checkpoint     iteration {}, loss {:.4} over {} games",
                c.iteration, c.eval.loss, c.n_games
            );
        }
        None => {
            let _ = writeln!(out, "  no balanced checkpoint (no record with loss <= {threshold})");
        }
    }
    let _ = writeln!(out, "  total games    {}", total_games(records));
    let chosen = select_final(records, threshold).expect("non-empty");
    let c = &chosen.config;
    let (n_to_e, e_to_n) = compute_ttk(c);
    let _ = writeln!(
        out,
        "  selected       hp E/N {}/{}, damage E/N {}/{}",
        c.empire_soldier_hp, c.nomads_cavalry_hp, c.empire_damage, c.nomads_damage
    );
    let _ = writeln!(out, "  TTK N->E {n_to_e} (ceil {}/{})", c.empire_soldier_hp, c.nomads_damage);
    let _ = writeln!(out, "  TTK E->N {e_to_n} (ceil {}/{})", c.nomads_cavalry_hp, c.empire_damage);
    out
}
