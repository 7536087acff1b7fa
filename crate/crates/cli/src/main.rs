mod manifest;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use civmini::engine::render::{outcome_line, render_svg, render_text};
use civmini::engine::{apply_events, new_game, Faction, GameState};
use civmini::evaluator::{play_recorded, select_final, EvalReport, GameEvaluator, Matchup, Objective};
use civmini::optimizer::runlog::check_history;
use civmini::optimizer::{
    read_log, run_bo, run_one_plus_one_es, run_random_search, BoSettings, Method, RunContext, RunLog, TrialRecord,
    DEFAULT_STEP_SIGMA,
};
use civmini::rule_space::{Design, RuleConfig};
use civmini::synthetic::SyntheticObjective;
use clap::{Args, Parser, Subcommand, ValueEnum};

use manifest::{Budget, ObjectiveSpec, RunManifest, RULE_SPACE_VERSION};

const ENDPOINT_VAR: &str = "CIVMINI_AGENT_ENDPOINT";

#[derive(Parser)]
#[command(name = "civmini", version, about = "Balance CivMini rules by self-play and Bayesian optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search the rule space and stream trial records to a run log.
    Optimize(OptimizeArgs),
    /// Play a batch of games on one configuration and write a report.
    Evaluate(EvaluateArgs),
    /// Play one game and write per-turn frames plus the transcript.
    Play(PlayArgs),
    /// Summarize one or more run logs.
    Report(ReportArgs),
}

#[derive(Args)]
struct GameArgs {
    /// Agents per side, e.g. `E=heuristic,N=random`. `external` without an
    /// endpoint reads it from CIVMINI_AGENT_ENDPOINT.
    #[arg(long, default_value = "E=heuristic,N=heuristic")]
    agents: String,
    #[arg(long)]
    map_size: Option<u32>,
    #[arg(long)]
    max_turns: Option<u32>,
    /// Worker threads for game batches; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveKind {
    SelfPlay,
    Synthetic,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long, default_value = "bo-adaptive")]
    method: Method,
    #[arg(long, default_value_t = 100)]
    iterations: u32,
    /// Games per evaluation for fixed-budget methods [default: 64 for
    /// bo-fixed, 16 otherwise].
    #[arg(long)]
    games: Option<u32>,
    #[arg(long, default_value_t = 16)]
    n_min: u32,
    #[arg(long, default_value_t = 64)]
    n_max: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "self-play")]
    objective: ObjectiveKind,
    /// Mutation step of the evolution strategy in unit-cube coordinates.
    #[arg(long, default_value_t = DEFAULT_STEP_SIGMA)]
    step_sigma: f64,
    /// Run log to write.
    #[arg(long)]
    out: PathBuf,
    /// Continue an interrupted run from its log.
    #[arg(long)]
    resume: bool,
    #[command(flatten)]
    game: GameArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Rule configuration as JSON; the default rules when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    games: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "evaluation.json")]
    out: PathBuf,
    #[command(flatten)]
    game: GameArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Render {
    Text,
    Svg,
}

#[derive(Args)]
struct PlayArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    render: Render,
    /// Directory for frames and the transcript.
    #[arg(long, default_value = "rollout")]
    out: PathBuf,
    #[command(flatten)]
    game: GameArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    logs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl From<civmini::Error> for Failure {
    fn from(e: civmini::Error) -> Self {
        use civmini::Error as E;
        match e {
            E::Surrogate(_) | E::GameOver | E::UnknownEntity(_) | E::WrongFaction { .. } => {
                Failure::Internal(e.to_string())
            }
            E::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

fn parse_matchup(text: &str) -> Result<Matchup, Failure> {
    let endpoint = std::env::var(ENDPOINT_VAR).ok();
    let mut parts = Vec::new();
    for part in text.split(',') {
        let expanded = match part.split_once('=') {
            Some((side, kind)) if kind.trim() == "external" => match &endpoint {
                Some(e) => format!("{side}=external:{e}"),
                None => return Err(Failure::Usage(format!("{part}: set {ENDPOINT_VAR} or give external:<endpoint>"))),
            },
            _ => part.to_string(),
        };
        parts.push(expanded);
    }
    parts.join(",").parse().map_err(|e| Failure::Usage(format!("--agents: {e}")))
}

fn design_from(args: &GameArgs, fallback: Design) -> Result<Design, Failure> {
    let map_size = args.map_size.unwrap_or(fallback.map_size);
    let max_turns = args.max_turns.or(if args.map_size.is_some() { None } else { Some(fallback.max_turns) });
    Ok(Design::new(map_size, max_turns)?)
}

fn load_config(path: Option<&Path>, args: &GameArgs) -> Result<RuleConfig, Failure> {
    let base = match path {
        Some(p) => RuleConfig::load(p)?,
        None => RuleConfig::default(),
    };
    let design = design_from(args, base.design())?;
    Ok(base.with_design(design))
}

fn build_manifest(args: &OptimizeArgs) -> Result<RunManifest, Failure> {
    let design = design_from(&args.game, Design::default())?;
    let objective = match args.objective {
        ObjectiveKind::SelfPlay => ObjectiveSpec::SelfPlay { agents: parse_matchup(&args.game.agents)? },
        ObjectiveKind::Synthetic => {
            let s = SyntheticObjective::default();
            ObjectiveSpec::Synthetic { a: s.a, b: s.b }
        }
    };
    let budget = match args.method {
        Method::BoAdaptive => Budget::Adaptive { n_min: args.n_min, n_max: args.n_max },
        Method::BoFixed => Budget::Fixed { n_games: args.games.unwrap_or(64) },
        Method::Random | Method::Es => Budget::Fixed { n_games: args.games.unwrap_or(16) },
    };
    let m = RunManifest {
        method: args.method,
        objective,
        rule_space_version: RULE_SPACE_VERSION,
        design,
        seed: args.seed,
        iterations: args.iterations,
        budget,
        step_sigma: (args.method == Method::Es).then_some(args.step_sigma),
        log: args.out.clone(),
    };
    m.validate().map_err(Failure::Usage)?;
    Ok(m)
}

fn cmd_optimize(args: OptimizeArgs) -> Result<(), Failure> {
    let manifest = build_manifest(&args)?;
    let history = if args.resume {
        let saved = RunManifest::load(&args.out).map_err(Failure::Data)?;
        // Extending a finished run to more iterations is allowed.
        if saved != (RunManifest { iterations: saved.iterations, ..manifest.clone() }) {
            return Err(Failure::Data(format!(
                "{} was written with different settings; refusing to resume",
                args.out.display()
            )));
        }
        let h = read_log(&args.out)?;
        check_history(&h, manifest.method)?;
        // Drop a torn final line so appended records start on a fresh line.
        civmini::optimizer::runlog::rewrite_log(&args.out, &h)?;
        manifest.save().map_err(io_err(&args.out))?;
        h
    } else {
        if fs::metadata(&args.out).is_ok_and(|m| m.len() > 0) {
            return Err(Failure::Data(format!("{} exists; pass --resume to continue it", args.out.display())));
        }
        RunLog::create(&args.out)?;
        manifest.save().map_err(io_err(&args.out))?;
        Vec::new()
    };
    if history.len() >= manifest.iterations as usize {
        println!("{} already holds {} records", args.out.display(), history.len());
        return Ok(());
    }

    let objective: Box<dyn Objective> = match &manifest.objective {
        ObjectiveSpec::SelfPlay { agents } => Box::new(GameEvaluator::new(agents.clone(), args.game.workers)?),
        ObjectiveSpec::Synthetic { a, b } => Box::new(SyntheticObjective { a: *a, b: *b }),
    };
    let ctx = RunContext { objective: objective.as_ref(), design: manifest.design, seed: manifest.seed };
    println!(
        "{} on {} ({}), log {}",
        manifest.method,
        objective.describe(),
        design_label(manifest.design),
        args.out.display()
    );

    let mut log = RunLog::append(&args.out)?;
    let mut best = history.iter().map(|r| r.eval.loss).fold(f64::INFINITY, f64::min);
    let total = manifest.iterations;
    let mut sink = |r: &TrialRecord| {
        log.write(r)?;
        best = best.min(r.eval.loss);
        println!(
            "iter {:>4}/{total}  N={:<3} loss {:.4}  best {:.4}  ({})",
            r.iteration,
            r.n_games,
            r.eval.loss,
            best,
            r.eval.split()
        );
        Ok(())
    };
    let history = match (manifest.method, &manifest.budget) {
        (Method::BoAdaptive, Budget::Adaptive { n_min, n_max }) => {
            run_bo(&BoSettings::adaptive(total, *n_min, *n_max), &ctx, history, &mut sink)?
        }
        (Method::BoFixed, Budget::Fixed { n_games }) => {
            run_bo(&BoSettings::fixed(total, *n_games), &ctx, history, &mut sink)?
        }
        (Method::Random, Budget::Fixed { n_games }) => run_random_search(total, *n_games, &ctx, history, &mut sink)?,
        (Method::Es, Budget::Fixed { n_games }) => run_one_plus_one_es(
            total,
            *n_games,
            manifest.step_sigma.unwrap_or(DEFAULT_STEP_SIGMA),
            &ctx,
            history,
            &mut sink,
        )?,
        _ => unreachable!("validated manifest"),
    };
    print!("{}", report::summarize(&args.out.display().to_string(), &history, 0.1));
    if let Some(chosen) = select_final(&history, 0.1) {
        let path = args.out.with_extension("best.json");
        chosen.config.save(&path)?;
        println!("  selected config written to {}", path.display());
    }
    Ok(())
}

fn design_label(d: Design) -> String {
    format!("{0}x{0}/{1}", d.map_size, d.max_turns)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let config = load_config(args.config.as_deref(), &args.game)?;
    if args.games == 0 {
        return Err(Failure::Usage("--games must be at least 1".into()));
    }
    let matchup = parse_matchup(&args.game.agents)?;
    let evaluator = GameEvaluator::new(matchup.clone(), args.game.workers)?;
    let eval = evaluator.evaluate(&config, args.games, args.seed);
    EvalReport::new(&config, &matchup, args.seed, &eval).save(&args.out)?;
    println!("Empire wins | Nomads wins: {}", eval.split());
    println!(
        "{} games ({} draws), loss {:.4}, report {}",
        eval.n_games,
        eval.counts.draws,
        eval.loss,
        args.out.display()
    );
    Ok(())
}

/// States after each completed turn, plus the final state if the game ended
/// mid-turn.
fn turn_states(initial: &GameState, transcript: &civmini::engine::transcript::Transcript) -> Vec<GameState> {
    let mut frames = Vec::new();
    let mut state = initial.clone();
    for rec in &transcript.turns {
        state = apply_events(&state, &rec.events);
        if rec.faction == Faction::Nomads || state.outcome().is_finished() {
            frames.push(state.clone());
        }
    }
    frames
}

fn cmd_play(args: PlayArgs) -> Result<(), Failure> {
    let config = load_config(args.config.as_deref(), &args.game)?;
    let matchup = parse_matchup(&args.game.agents)?;
    let (result, transcript) = play_recorded(&config, &matchup, args.seed);
    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let transcript_path = args.out.join("transcript.jsonl");
    fs::write(&transcript_path, transcript.to_jsonl()).map_err(io_err(&transcript_path))?;

    let frames = turn_states(&new_game(&config, args.seed), &transcript);
    match args.render {
        Render::Text => {
            let text: String = frames
                .iter()
                .enumerate()
                .map(|(i, s)| format!("== frame {} ==\n{}\n", i + 1, render_text(s)))
                .collect();
            let path = args.out.join("frames.txt");
            fs::write(&path, &text).map_err(io_err(&path))?;
            print!("{text}");
        }
        Render::Svg => {
            for (i, s) in frames.iter().enumerate() {
                let path = args.out.join(format!("turn_{:02}.svg", i + 1));
                fs::write(&path, render_svg(s)).map_err(io_err(&path))?;
            }
            println!("{} SVG frames in {}", frames.len(), args.out.display());
        }
    }
    let last = frames.last().expect("a game has at least one turn");
    println!("{}", outcome_line(last).unwrap_or_else(|| format!("{:?}", result.outcome)));
    println!("transcript {}", transcript_path.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    for path in &args.logs {
        let records = read_log(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        print!("{}", report::summarize(&path.display().to_string(), &records, args.threshold));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Optimize(a) => cmd_optimize(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Play(a) => cmd_play(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use civmini::agents::AgentSpec;

    #[test]
    fn external_kind_needs_an_endpoint() {
        let m = parse_matchup("E=heuristic,N=external:http://localhost:9/act").unwrap();
        assert!(matches!(m.nomads, AgentSpec::External(_)));
        assert!(matches!(parse_matchup("E=robot"), Err(Failure::Usage(_))));
    }

    #[test]
    fn explicit_map_size_picks_its_turn_limit() {
        let args = GameArgs { agents: String::new(), map_size: Some(9), max_turns: None, workers: 0 };
        assert_eq!(design_from(&args, Design::default()).ok(), Some(Design { map_size: 9, max_turns: 32 }));
        let args = GameArgs { agents: String::new(), map_size: None, max_turns: None, workers: 0 };
        assert_eq!(design_from(&args, Design::default()).ok(), Some(Design::default()));
    }
}
