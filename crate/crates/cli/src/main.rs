//! `affplay`: train, evaluate and inspect the grid-game testbed from the
//! shell. Every failure exits nonzero with a single `error[category]: ...`
//! line on stderr so scripts can grep for the cause.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use affplay_core::experiment::{
    emit_table, evaluate_model, load_model, run_experiment, run_grid, Algorithm, EvalOptions,
    ExperimentConfig, ExperimentError, GridOptions, RunRecord,
};
use affplay_core::gamespec::{apply_variant, parse, serialize, BuiltinGame, VariantTag};
use affplay_core::pipeline::{calibrate, CalibrationOptions};
use affplay_core::Session;

mod fileconf;

use fileconf::FileConfig;

#[derive(Parser)]
#[command(name = "affplay", version, about = "Grid-game learning testbed")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identify the controlled object in a game and what every key does.
    Identify {
        /// Built-in game name.
        game: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Train a policy on the base game and evaluate it on a variant.
    Train(TrainArgs),
    /// Evaluate a saved model on a game variant.
    Eval(EvalArgs),
    /// Run the experiment grid and print the score table.
    Bench(BenchArgs),
    /// Game description tooling.
    Spec {
        #[command(subcommand)]
        cmd: SpecCmd,
    },
}

/// Flags override the config file; the file overrides built-in defaults.
#[derive(Args)]
struct TrainArgs {
    /// Key = value config file (same keys as the flags).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    game: Option<String>,
    /// qlearn, dqn or random.
    #[arg(long)]
    algo: Option<String>,
    /// Evaluation variant; training always runs on base.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    epochs: Option<u64>,
    /// Training seed; repeat the flag to pool several.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Encoder granularity override.
    #[arg(long)]
    k: Option<u32>,
    /// Greedy episodes per evaluation point.
    #[arg(long)]
    runs: Option<u32>,
    /// Training steps between evaluation points.
    #[arg(long)]
    interval: Option<u64>,
    /// Directory for curves, table fragments and exported models.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Q-table dump or network checkpoint.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    game: String,
    #[arg(long, default_value = "base")]
    variant: String,
    #[arg(long, default_value_t = 20)]
    runs: u32,
    /// Evaluation episode seed.
    #[arg(long, default_value_t = 777)]
    seed: u64,
    /// Calibration seed for tabular models.
    #[arg(long, default_value_t = 1)]
    cal_seed: u64,
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args)]
struct BenchArgs {
    /// Full grid at paper scale (0.5M epochs, 20 runs). Without this a
    /// reduced smoke grid runs instead.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict to one or more games; repeat the flag.
    #[arg(long = "game")]
    games: Vec<String>,
    #[arg(long)]
    epochs: Option<u64>,
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    interval: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SpecCmd {
    /// Parse and validate a game file, print a summary.
    Parse { file: PathBuf },
    /// Derive a variant of a game file and print or save it.
    Variant {
        file: PathBuf,
        #[arg(long)]
        variant: String,
        /// Layout seed; only position modification uses it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// One-line, greppable failure. The category tells scripts what broke
/// without parsing prose.
struct Fail {
    category: &'static str,
    message: String,
}

impl std::fmt::Display for Fail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error[{}]: {}", self.category, self.message)
    }
}

fn fail(category: &'static str, message: impl Into<String>) -> Fail {
    Fail {
        category,
        message: message.into(),
    }
}

impl From<ExperimentError> for Fail {
    fn from(e: ExperimentError) -> Fail {
        let category = match &e {
            ExperimentError::BadConfig(_) | ExperimentError::NonPositiveMax(_) => "config",
            ExperimentError::Variant(_) => "variant",
            ExperimentError::Calibration(_) => "calibration",
            ExperimentError::BadModel(_) => "model",
            ExperimentError::Io(_) => "io",
        };
        fail(category, e.to_string())
    }
}

fn io_fail(e: std::io::Error, path: &std::path::Path) -> Fail {
    fail("io", format!("{}: {e}", path.display()))
}

fn parse_game(name: &str) -> Result<BuiltinGame, Fail> {
    name.parse().map_err(|e: String| fail("config", e))
}

fn parse_variant(name: &str) -> Result<VariantTag, Fail> {
    name.parse().map_err(|e: String| fail("config", e))
}

fn parse_algo(name: &str) -> Result<Algorithm, Fail> {
    name.parse().map_err(|e: String| fail("config", e))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Fail> {
    match cli.cmd {
        Command::Identify { game, seed } => identify(&game, seed),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::Bench(args) => bench(args),
        Command::Spec { cmd } => spec(cmd),
    }
}

fn identify(game: &str, seed: u64) -> Result<(), Fail> {
    let game = parse_game(game)?;
    let spec = affplay_core::builtin_spec(game);
    let mut env = Session::new(std::sync::Arc::new(spec.clone()), seed);
    let cal = calibrate(&mut env, seed, &CalibrationOptions::default())
        .map_err(|e| fail("calibration", e.to_string()))?;
    println!("game: {}", game.name());
    print!("{}", cal.report.render_text());
    println!("agent signature: {}", cal.profile.signature);
    println!("keys:");
    for (key, action) in &cal.profile.key_map {
        println!("  {key} -> {}", action.as_str());
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), Fail> {
    let file = FileConfig::load(args.config.as_deref())?;
    let game = parse_game(
        &args
            .game
            .or(file.get_str("game"))
            .ok_or_else(|| fail("config", "no game given (flag --game or config key game)"))?,
    )?;
    let algorithm = parse_algo(&args.algo.or(file.get_str("algo")).unwrap_or("qlearn".into()))?;
    let variant = parse_variant(
        &args
            .variant
            .or(file.get_str("variant"))
            .unwrap_or("base".into()),
    )?;

    let mut cfg = ExperimentConfig::new(game, variant, algorithm);
    if let Some(epochs) = args.epochs.or(file.get_num("epochs")?) {
        cfg.epochs = epochs;
    }
    if let Some(runs) = args.runs.or(file.get_num("runs")?) {
        cfg.eval_runs = runs;
    }
    if let Some(interval) = args.interval.or(file.get_num("interval")?) {
        cfg.eval_interval = interval;
    }
    let file_seeds = file.get_seeds()?;
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds;
    } else if let Some(seeds) = file_seeds {
        cfg.seeds = seeds;
    }
    cfg.k_override = args.k.or(file.get_num("k")?);
    cfg.outdir = args.out.or(file.get_str("out").map(PathBuf::from));
    file.reject_unknown(&["game", "algo", "variant", "epochs", "runs", "interval", "seed", "k", "out"])?;

    let record = run_experiment(&cfg)?;
    print_record(&record);
    Ok(())
}

fn print_record(record: &RunRecord) {
    let cfg = &record.config;
    println!("cell {}", cfg.cell_name());
    if let Some(reason) = &record.skipped {
        println!("skipped (NA): {reason}");
        return;
    }
    let last = record.points.last().expect("evaluated cells have points");
    println!(
        "epochs {}  seeds {:?}  eval runs {}",
        cfg.epochs, cfg.seeds, last.per_run.len()
    );
    println!(
        "final mean score {:.3} of {} (normalized {:.3})",
        last.mean, record.max_score, last.mean_normalized
    );
    if let Some(f) = record.unseen_fraction {
        println!("unseen state fraction {f:.4}");
    }
    if let Some(dir) = &cfg.outdir {
        println!("outputs under {}", dir.join(cfg.cell_name()).display());
    }
    println!("took {:.1}s", record.wall_clock.as_secs_f64());
}

fn eval(args: EvalArgs) -> Result<(), Fail> {
    let game = parse_game(&args.game)?;
    let variant = parse_variant(&args.variant)?;
    let bytes = std::fs::read(&args.model).map_err(|e| io_fail(e, &args.model))?;
    let model = load_model(&bytes)?;
    let opts = EvalOptions {
        eval_runs: args.runs,
        eval_seed: args.seed,
        cal_seed: args.cal_seed,
        k_override: args.k,
    };
    let result = evaluate_model(game, variant, &model, &opts)?;
    let kind = match model {
        affplay_core::experiment::Model::Table(_) => "q-table",
        affplay_core::experiment::Model::Net(_) => "network",
    };
    println!("model: {} ({kind})", args.model.display());
    println!("game {} variant {} runs {}", game.name(), variant, args.runs);
    let scores: Vec<String> = result.point.per_run.iter().map(|s| s.to_string()).collect();
    println!("scores: {}", scores.join(" "));
    println!(
        "mean {:.3} normalized {:.3}",
        result.point.mean, result.point.mean_normalized
    );
    if let Some(f) = result.unseen_fraction {
        println!("unseen state fraction {f:.4}");
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Fail> {
    let file = FileConfig::load(args.config.as_deref())?;
    let mut opts = GridOptions::default();
    if !args.full {
        // Smoke scale: enough training to separate the algorithms without
        // tying up the machine.
        opts.epochs = 20_000;
        opts.eval_runs = 5;
    }
    let game_names: Vec<String> = if !args.games.is_empty() {
        args.games
    } else {
        file.get_str("game").map(|g| vec![g]).unwrap_or_default()
    };
    if !game_names.is_empty() {
        opts.games = game_names
            .iter()
            .map(|g| parse_game(g))
            .collect::<Result<_, _>>()?;
    }
    if let Some(epochs) = args.epochs.or(file.get_num("epochs")?) {
        opts.epochs = epochs;
    }
    if let Some(runs) = args.runs.or(file.get_num("runs")?) {
        opts.eval_runs = runs;
    }
    if let Some(interval) = args.interval.or(file.get_num("interval")?) {
        opts.eval_interval = interval;
    }
    let file_seeds = file.get_seeds()?;
    if !args.seeds.is_empty() {
        opts.seeds = args.seeds;
    } else if let Some(seeds) = file_seeds {
        opts.seeds = seeds;
    }
    opts.outdir = args.out.or(file.get_str("out").map(PathBuf::from));
    file.reject_unknown(&["game", "epochs", "runs", "interval", "seed", "out"])?;

    let records = run_grid(&opts)?;
    let table = emit_table(&records);
    print!("{}", table.text);
    if let Some(dir) = &opts.outdir {
        std::fs::create_dir_all(dir).map_err(|e| io_fail(e, dir))?;
        let csv_path = dir.join("table.csv");
        std::fs::write(&csv_path, &table.csv).map_err(|e| io_fail(e, &csv_path))?;
        let txt_path = dir.join("table.txt");
        std::fs::write(&txt_path, &table.text).map_err(|e| io_fail(e, &txt_path))?;
        println!("table written to {}", csv_path.display());
    }
    Ok(())
}

fn spec(cmd: SpecCmd) -> Result<(), Fail> {
    match cmd {
        SpecCmd::Parse { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| io_fail(e, &file))?;
            let spec = parse(&text).map_err(|e| fail("spec", e.to_string()))?;
            println!(
                "ok name={} grid={}x{} classes={} actions={} levels={}",
                spec.name,
                spec.grid_width,
                spec.grid_height,
                spec.classes.len(),
                spec.actions.len(),
                spec.levels.len()
            );
            Ok(())
        }
        SpecCmd::Variant {
            file,
            variant,
            seed,
            out,
        } => {
            let tag = parse_variant(&variant)?;
            let text = std::fs::read_to_string(&file).map_err(|e| io_fail(e, &file))?;
            let spec = parse(&text).map_err(|e| fail("spec", e.to_string()))?;
            let derived =
                apply_variant(&spec, tag, seed).map_err(|e| fail("variant", e.to_string()))?;
            let rendered = serialize(&derived);
            match out {
                Some(path) => {
                    std::fs::write(&path, rendered).map_err(|e| io_fail(e, &path))?;
                    println!("variant written to {}", path.display());
                }
                None => print!("{rendered}"),
            }
            Ok(())
        }
    }
}
