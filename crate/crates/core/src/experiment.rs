//! Experiment cells behind the results table.
//!
//! A cell is (game, variant, algorithm). Training always happens on the
//! base game; the variant only exists at evaluation time. Everything a
//! cell writes is a deterministic function of its config, so reruns are
//! byte-identical (wall clock lives in meta.txt, never in a CSV).

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::agent_id::IdError;
use crate::dqn::{dqn_train, evaluate_dqn_run, DqnConfig};
use crate::encoder::{builtin_config, EncoderConfig};
use crate::engine::Session;
use crate::gamespec::{
    apply_variant, builtin_spec, BuiltinGame, GameSpec, VariantError, VariantTag,
};
use crate::perception::CategoryModel;
use crate::pipeline::{calibrate, evaluate_greedy_run, evaluate_random_run, CalibrationOptions};
use crate::qlearner::{train, LearnerConfig, QTable};
use crate::rng::mix;

/// Eval episodes draw from a stream disjoint from every training stream.
const EVAL_SEED: u64 = 777;
/// Seeds the per-run layout redraws for position-modified evaluation.
const LAYOUT_SALT: u64 = 0x7a91;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    QLearn,
    Dqn,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::QLearn, Algorithm::Dqn, Algorithm::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::QLearn => "qlearn",
            Algorithm::Dqn => "dqn",
            Algorithm::Random => "random",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qlearn" => Ok(Algorithm::QLearn),
            "dqn" => Ok(Algorithm::Dqn),
            "random" => Ok(Algorithm::Random),
            other => Err(format!("unknown algorithm `{other}` (expected qlearn, dqn or random)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("normalized score needs a positive maximum, got {0}")]
    NonPositiveMax(i64),
    #[error(transparent)]
    Variant(#[from] VariantError),
    #[error("calibration failed: {0}")]
    Calibration(#[from] IdError),
    #[error("unreadable model: {0}")]
    BadModel(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub game: BuiltinGame,
    pub variant: VariantTag,
    pub algorithm: Algorithm,
    /// Training steps. Ignored by the random policy.
    pub epochs: u64,
    /// Greedy episodes per evaluation point.
    pub eval_runs: u32,
    /// Training steps between evaluation points.
    pub eval_interval: u64,
    /// Training seeds; evaluation pools runs over all of them.
    pub seeds: Vec<u64>,
    /// Replaces the per-game default encoder granularity when set.
    pub k_override: Option<u32>,
    /// When set, the cell writes config echo, curves, table fragment and
    /// exported models under `outdir/<cell name>/`.
    pub outdir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(game: BuiltinGame, variant: VariantTag, algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            game,
            variant,
            algorithm,
            epochs: 500_000,
            eval_runs: 20,
            eval_interval: 10_000,
            seeds: vec![1],
            k_override: None,
            outdir: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::BadConfig(m.to_string()));
        if self.eval_runs < 1 {
            return bad("eval_runs must be at least 1");
        }
        if self.eval_interval < 1 {
            return bad("eval_interval must be at least 1");
        }
        if self.seeds.is_empty() {
            return bad("at least one training seed is required");
        }
        if self.k_override == Some(0) {
            return bad("encoder k must be at least 1");
        }
        let bits = self.encoder().total_bits();
        if bits > 64 {
            return Err(ExperimentError::BadConfig(format!(
                "encoder layout needs {bits} bits; the state key holds 64"
            )));
        }
        Ok(())
    }

    pub fn cell_name(&self) -> String {
        format!("{}_{}_{}", self.game.name(), self.variant.as_str(), self.algorithm)
    }

    fn encoder(&self) -> EncoderConfig {
        let mut enc = builtin_config(self.game);
        if let Some(k) = self.k_override {
            enc.k = k;
        }
        enc
    }
}

/// One evaluation point: every greedy episode's final score, pooled over
/// all training seeds in seed order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub epoch: u64,
    pub per_run: Vec<i64>,
    pub mean: f64,
    pub mean_normalized: f64,
}

impl EvalPoint {
    fn new(epoch: u64, per_run: Vec<i64>, max_score: i64) -> Result<EvalPoint, ExperimentError> {
        let mean = per_run.iter().sum::<i64>() as f64 / per_run.len() as f64;
        let mean_normalized = normalize(mean, max_score)?;
        Ok(EvalPoint {
            epoch,
            per_run,
            mean,
            mean_normalized,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub code_version: &'static str,
    pub wall_clock: Duration,
    pub max_score: i64,
    pub points: Vec<EvalPoint>,
    /// Why the cell was skipped; mirrors the NA cells in the final table.
    pub skipped: Option<String>,
    /// Fraction of final-evaluation steps whose state key was never
    /// visited during training. Tabular cells only.
    pub unseen_fraction: Option<f64>,
}

impl RunRecord {
    pub fn is_na(&self) -> bool {
        self.skipped.is_some()
    }

    pub fn final_mean_normalized(&self) -> Option<f64> {
        self.points.last().map(|p| p.mean_normalized)
    }
}

/// Score relative to the best the game can pay out. Negative when the
/// losing penalty outweighs what was earned.
pub fn normalized_score(actual: i64, max_achievable: i64) -> Result<f64, ExperimentError> {
    normalize(actual as f64, max_achievable)
}

fn normalize(actual: f64, max_achievable: i64) -> Result<f64, ExperimentError> {
    if max_achievable <= 0 {
        return Err(ExperimentError::NonPositiveMax(max_achievable));
    }
    Ok(actual / max_achievable as f64)
}

/// Evaluation environments for one variant. Position redraws differ per
/// run; the other variants ignore the layout seed, so one context serves
/// every run (episodes reset themselves, the model is read-only).
fn variant_specs(
    game: BuiltinGame,
    tag: VariantTag,
    eval_runs: u32,
) -> Result<Vec<Arc<GameSpec>>, ExperimentError> {
    let base = builtin_spec(game);
    if tag == VariantTag::ModPosition {
        (0..eval_runs)
            .map(|r| Ok(Arc::new(apply_variant(base, tag, mix(LAYOUT_SALT, r as u64))?)))
            .collect()
    } else {
        Ok(vec![Arc::new(apply_variant(base, tag, 0)?)])
    }
}

struct TabContext {
    env: Session,
    model: CategoryModel,
}

fn tab_contexts(
    game: BuiltinGame,
    tag: VariantTag,
    eval_runs: u32,
    cal_seed: u64,
) -> Result<Vec<TabContext>, ExperimentError> {
    variant_specs(game, tag, eval_runs)?
        .into_iter()
        .map(|spec| {
            let mut env = Session::new(spec, 0);
            let cal = calibrate(&mut env, cal_seed, &CalibrationOptions::default())?;
            Ok(TabContext {
                env,
                model: cal.model,
            })
        })
        .collect()
}

fn plain_contexts(
    game: BuiltinGame,
    tag: VariantTag,
    eval_runs: u32,
) -> Result<Vec<Session>, ExperimentError> {
    Ok(variant_specs(game, tag, eval_runs)?
        .into_iter()
        .map(|spec| Session::new(spec, 0))
        .collect())
}

fn tab_scores(
    ctxs: &mut [TabContext],
    enc: &EncoderConfig,
    q: &QTable,
    runs: u32,
) -> Vec<i64> {
    (0..runs)
        .map(|r| {
            let idx = r as usize % ctxs.len();
            let c = &mut ctxs[idx];
            evaluate_greedy_run(&mut c.env, enc, &c.model, q, r, EVAL_SEED).score
        })
        .collect()
}

enum ModelDump {
    Q(String),
    Net(Vec<u8>),
}

/// Scores for one variant from one training seed, keyed by epoch.
type SeedPoints = Vec<(u64, Vec<i64>)>;

fn fold_seed(acc: &mut Vec<SeedPoints>, mine: Vec<SeedPoints>) {
    for (slot, got) in acc.iter_mut().zip(mine) {
        if slot.is_empty() {
            *slot = got;
        } else {
            debug_assert_eq!(slot.len(), got.len(), "seeds disagree on eval epochs");
            for ((epoch, pooled), (e2, scores)) in slot.iter_mut().zip(got) {
                debug_assert_eq!(*epoch, e2);
                pooled.extend(scores);
            }
        }
    }
}

/// Runs one experiment cell end to end and writes its outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord, ExperimentError> {
    let mut records = run_cells(cfg, &[cfg.variant])?;
    Ok(records.pop().expect("one variant in, one record out"))
}

/// Shared engine behind [`run_experiment`] and the full grid: one training
/// pass (train-on-base, so the policy is variant-independent) evaluated
/// against any number of variants. Evaluation episodes are independent of
/// each other, which is why per-cell and batched runs give identical
/// numbers.
fn run_cells(
    cfg: &ExperimentConfig,
    variants: &[VariantTag],
) -> Result<Vec<RunRecord>, ExperimentError> {
    cfg.validate()?;
    let started = Instant::now();
    let base = builtin_spec(cfg.game);
    let max_score = base.max_score;

    // Applicability first: skipped variants never touch the scheduler.
    let status: Vec<(VariantTag, Option<String>)> = variants
        .iter()
        .map(|&v| match apply_variant(base, v, 0) {
            Ok(_) => (v, None),
            Err(e) => (v, Some(e.to_string())),
        })
        .collect();
    let live: Vec<VariantTag> = status
        .iter()
        .filter(|(_, skip)| skip.is_none())
        .map(|&(v, _)| v)
        .collect();

    let mut acc: Vec<SeedPoints> = vec![Vec::new(); live.len()];
    let mut unseen: Vec<(u64, u64)> = vec![(0, 0); live.len()];
    let mut dumps: Vec<(u64, ModelDump)> = Vec::new();

    match cfg.algorithm {
        Algorithm::Random => {
            for (i, &tag) in live.iter().enumerate() {
                let mut envs = plain_contexts(cfg.game, tag, cfg.eval_runs)?;
                let scores: Vec<i64> = (0..cfg.eval_runs)
                    .map(|r| {
                        let idx = r as usize % envs.len();
                        evaluate_random_run(&mut envs[idx], r, EVAL_SEED)
                    })
                    .collect();
                acc[i].push((0, scores));
            }
        }
        Algorithm::QLearn => {
            let enc = cfg.encoder();
            for &seed in &cfg.seeds {
                let mut ctxs: Vec<Vec<TabContext>> = live
                    .iter()
                    .map(|&tag| tab_contexts(cfg.game, tag, cfg.eval_runs, seed))
                    .collect::<Result<_, _>>()?;
                let mut tenv = Session::new(Arc::new(base.clone()), seed);
                let cal = calibrate(&mut tenv, seed, &CalibrationOptions::default())?;
                let lcfg = LearnerConfig {
                    seed,
                    eps_decay_steps: cfg.epochs * 4 / 5,
                    ..LearnerConfig::default()
                };
                let mut mine: Vec<SeedPoints> = vec![Vec::new(); live.len()];
                // The probe reports completed steps; the final epoch is
                // evaluated separately so it can keep the key streams for
                // unseen-state accounting.
                let (q, _) = train(&mut tenv, &enc, &cal.model, &lcfg, cfg.epochs, |t, q| {
                    if t % cfg.eval_interval == 0 && t < cfg.epochs {
                        for (i, cs) in ctxs.iter_mut().enumerate() {
                            mine[i].push((t, tab_scores(cs, &enc, q, cfg.eval_runs)));
                        }
                    }
                    None
                });
                for (i, cs) in ctxs.iter_mut().enumerate() {
                    let mut scores = Vec::with_capacity(cfg.eval_runs as usize);
                    for r in 0..cfg.eval_runs {
                        let idx = r as usize % cs.len();
                        let c = &mut cs[idx];
                        let run = evaluate_greedy_run(&mut c.env, &enc, &c.model, &q, r, EVAL_SEED);
                        unseen[i].0 += run.keys.iter().filter(|&&k| !q.knows_state(k)).count() as u64;
                        unseen[i].1 += run.keys.len() as u64;
                        scores.push(run.score);
                    }
                    mine[i].push((cfg.epochs, scores));
                }
                fold_seed(&mut acc, mine);
                dumps.push((seed, ModelDump::Q(q.export())));
            }
        }
        Algorithm::Dqn => {
            for &seed in &cfg.seeds {
                let dcfg = DqnConfig {
                    seed,
                    eps_decay_steps: cfg.epochs * 4 / 5,
                    ..DqnConfig::default()
                };
                let mut ctxs: Vec<Vec<Session>> = live
                    .iter()
                    .map(|&tag| plain_contexts(cfg.game, tag, cfg.eval_runs))
                    .collect::<Result<_, _>>()?;
                let mut tenv = Session::new(Arc::new(base.clone()), seed);
                let mut mine: Vec<SeedPoints> = vec![Vec::new(); live.len()];
                let (agent, _) = dqn_train(&mut tenv, &dcfg, cfg.epochs, |t, net| {
                    if t % cfg.eval_interval == 0 && t < cfg.epochs {
                        for (i, envs) in ctxs.iter_mut().enumerate() {
                            let scores: Vec<i64> = (0..cfg.eval_runs)
                                .map(|r| {
                                    let idx = r as usize % envs.len();
                                    evaluate_dqn_run(&mut envs[idx], net, &dcfg, r, EVAL_SEED)
                                })
                                .collect();
                            mine[i].push((t, scores));
                        }
                    }
                    None
                });
                for (i, envs) in ctxs.iter_mut().enumerate() {
                    let scores: Vec<i64> = (0..cfg.eval_runs)
                        .map(|r| {
                            let idx = r as usize % envs.len();
                            evaluate_dqn_run(&mut envs[idx], &agent.net, &dcfg, r, EVAL_SEED)
                        })
                        .collect();
                    mine[i].push((cfg.epochs, scores));
                }
                fold_seed(&mut acc, mine);
                dumps.push((seed, ModelDump::Net(agent.net.save())));
            }
        }
    }

    let wall_clock = started.elapsed();
    let mut live_results = acc.into_iter().zip(unseen).collect::<Vec<_>>().into_iter();
    let mut records = Vec::with_capacity(status.len());
    for (tag, skip) in status {
        let mut rc = cfg.clone();
        rc.variant = tag;
        let record = match skip {
            Some(reason) => RunRecord {
                config: rc,
                code_version: CODE_VERSION,
                wall_clock,
                max_score,
                points: Vec::new(),
                skipped: Some(reason),
                unseen_fraction: None,
            },
            None => {
                let (seed_points, (u, n)) = live_results.next().expect("one result per live variant");
                let points = seed_points
                    .into_iter()
                    .map(|(epoch, scores)| EvalPoint::new(epoch, scores, max_score))
                    .collect::<Result<Vec<_>, _>>()?;
                RunRecord {
                    config: rc,
                    code_version: CODE_VERSION,
                    wall_clock,
                    max_score,
                    points,
                    skipped: None,
                    unseen_fraction: (cfg.algorithm == Algorithm::QLearn)
                        .then(|| u as f64 / n.max(1) as f64),
                }
            }
        };
        write_record(&record, &dumps)?;
        records.push(record);
    }
    Ok(records)
}

/// The whole results grid for a set of games. Each (game, algorithm) pair
/// trains once and is evaluated on every variant; games run on their own
/// threads since cells share nothing.
#[derive(Debug, Clone)]
pub struct GridOptions {
    pub games: Vec<BuiltinGame>,
    pub epochs: u64,
    pub eval_runs: u32,
    pub eval_interval: u64,
    pub seeds: Vec<u64>,
    pub outdir: Option<PathBuf>,
}

impl Default for GridOptions {
    fn default() -> GridOptions {
        GridOptions {
            games: BuiltinGame::ALL.to_vec(),
            epochs: 500_000,
            eval_runs: 20,
            eval_interval: 10_000,
            seeds: vec![1],
            outdir: None,
        }
    }
}

pub fn run_grid(opts: &GridOptions) -> Result<Vec<RunRecord>, ExperimentError> {
    let game_cells = |game: BuiltinGame| -> Result<Vec<RunRecord>, ExperimentError> {
        let cell = |algorithm: Algorithm| {
            let mut c = ExperimentConfig::new(game, VariantTag::Base, algorithm);
            c.epochs = opts.epochs;
            c.eval_runs = opts.eval_runs;
            c.eval_interval = opts.eval_interval;
            c.seeds = opts.seeds.clone();
            c.outdir = opts.outdir.clone();
            c
        };
        let mut out = vec![run_experiment(&cell(Algorithm::Random))?];
        for algorithm in [Algorithm::Dqn, Algorithm::QLearn] {
            out.extend(run_cells(&cell(algorithm), &VariantTag::ALL)?);
        }
        Ok(out)
    };
    let mut per_game: Vec<Result<Vec<RunRecord>, ExperimentError>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = opts
            .games
            .iter()
            .map(|&game| scope.spawn(move || game_cells(game)))
            .collect();
        for h in handles {
            per_game.push(h.join().expect("grid worker panicked"));
        }
    });
    let mut records = Vec::new();
    for r in per_game {
        records.extend(r?);
    }
    Ok(records)
}

/// A trained policy as stored on disk. Network checkpoints carry a
/// binary header; anything else is read as a Q-table dump.
pub enum Model {
    Table(QTable),
    Net(crate::dqn::DenseNet),
}

pub fn load_model(bytes: &[u8]) -> Result<Model, ExperimentError> {
    if bytes.starts_with(b"densenet v1\n") {
        return crate::dqn::DenseNet::load(bytes)
            .map(Model::Net)
            .map_err(ExperimentError::BadModel);
    }
    let text = std::str::from_utf8(bytes)
        .map_err(|_| ExperimentError::BadModel("model is neither a checkpoint nor text".into()))?;
    QTable::import(text)
        .map(Model::Table)
        .map_err(ExperimentError::BadModel)
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub eval_runs: u32,
    pub eval_seed: u64,
    /// Seeds the on-variant calibration for tabular models.
    pub cal_seed: u64,
    pub k_override: Option<u32>,
}

impl Default for EvalOptions {
    fn default() -> EvalOptions {
        EvalOptions {
            eval_runs: 20,
            eval_seed: EVAL_SEED,
            cal_seed: 1,
            k_override: None,
        }
    }
}

pub struct ModelEval {
    pub point: EvalPoint,
    /// Fraction of steps in states the table never visited; None for
    /// network models.
    pub unseen_fraction: Option<f64>,
}

/// Evaluates a frozen policy on a game variant, the same protocol the
/// experiment cells use: tabular models get a fresh on-variant
/// calibration, network models see raw frames.
pub fn evaluate_model(
    game: BuiltinGame,
    variant: VariantTag,
    model: &Model,
    opts: &EvalOptions,
) -> Result<ModelEval, ExperimentError> {
    if opts.eval_runs < 1 {
        return Err(ExperimentError::BadConfig("eval_runs must be at least 1".into()));
    }
    let max_score = builtin_spec(game).max_score;
    match model {
        Model::Table(q) => {
            let mut enc = builtin_config(game);
            if let Some(k) = opts.k_override {
                enc.k = k;
            }
            let mut ctxs = tab_contexts(game, variant, opts.eval_runs, opts.cal_seed)?;
            let mut scores = Vec::with_capacity(opts.eval_runs as usize);
            let (mut u, mut n) = (0u64, 0u64);
            for r in 0..opts.eval_runs {
                let idx = r as usize % ctxs.len();
                let c = &mut ctxs[idx];
                let run = evaluate_greedy_run(&mut c.env, &enc, &c.model, q, r, opts.eval_seed);
                u += run.keys.iter().filter(|&&k| !q.knows_state(k)).count() as u64;
                n += run.keys.len() as u64;
                scores.push(run.score);
            }
            Ok(ModelEval {
                point: EvalPoint::new(0, scores, max_score)?,
                unseen_fraction: Some(u as f64 / n.max(1) as f64),
            })
        }
        Model::Net(net) => {
            let dcfg = DqnConfig::default();
            let mut envs = plain_contexts(game, variant, opts.eval_runs)?;
            let scores: Vec<i64> = (0..opts.eval_runs)
                .map(|r| {
                    let idx = r as usize % envs.len();
                    evaluate_dqn_run(&mut envs[idx], net, &dcfg, r, opts.eval_seed)
                })
                .collect();
            Ok(ModelEval {
                point: EvalPoint::new(0, scores, max_score)?,
                unseen_fraction: None,
            })
        }
    }
}

fn config_echo(cfg: &ExperimentConfig) -> String {
    let seeds = cfg
        .seeds
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let k = cfg
        .k_override
        .map_or("default".to_string(), |k| k.to_string());
    format!(
        "game = {}\nvariant = {}\nalgorithm = {}\nepochs = {}\neval_runs = {}\n\
         eval_interval = {}\nseeds = {}\nk = {}\n",
        cfg.game.name(),
        cfg.variant,
        cfg.algorithm,
        cfg.epochs,
        cfg.eval_runs,
        cfg.eval_interval,
        seeds,
        k,
    )
}

fn meta_text(rec: &RunRecord) -> String {
    let mut out = format!(
        "code_version = {}\nmax_score = {}\nwall_clock_ms = {}\n",
        rec.code_version,
        rec.max_score,
        rec.wall_clock.as_millis(),
    );
    if let Some(f) = rec.unseen_fraction {
        out.push_str(&format!("unseen_fraction = {f}\n"));
    }
    if let Some(reason) = &rec.skipped {
        out.push_str(&format!("skipped = {reason}\n"));
    }
    out
}

fn cell_fragment(rec: &RunRecord) -> String {
    let value = match rec.final_mean_normalized() {
        Some(v) if !rec.is_na() => format!("{v:.2}"),
        _ => "NA".to_string(),
    };
    format!(
        "game,variant,algorithm,mean_normalized\n{},{},{},{}\n",
        rec.config.game.name(),
        rec.config.variant,
        rec.config.algorithm,
        value,
    )
}

fn write_record(rec: &RunRecord, dumps: &[(u64, ModelDump)]) -> Result<(), ExperimentError> {
    let Some(dir) = &rec.config.outdir else {
        return Ok(());
    };
    let dir = dir.join(rec.config.cell_name());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.txt"), config_echo(&rec.config))?;
    fs::write(dir.join("curve.csv"), emit_curves(rec))?;
    fs::write(dir.join("cell.csv"), cell_fragment(rec))?;
    fs::write(dir.join("meta.txt"), meta_text(rec))?;
    if !rec.is_na() {
        for (seed, dump) in dumps {
            match dump {
                ModelDump::Q(text) => fs::write(dir.join(format!("qtable_seed{seed}.txt")), text)?,
                ModelDump::Net(bytes) => fs::write(dir.join(format!("net_seed{seed}.bin")), bytes)?,
            }
        }
    }
    Ok(())
}

/// Learning-curve CSV: epoch, pooled mean, then one column per training
/// seed when the run pooled several. Full-precision floats so external
/// plotting sees exactly what the run computed.
pub fn emit_curves(rec: &RunRecord) -> String {
    let seeds = &rec.config.seeds;
    let runs = rec.config.eval_runs as usize;
    let per_seed = rec.config.algorithm != Algorithm::Random
        && rec
            .points
            .first()
            .is_some_and(|p| p.per_run.len() == seeds.len() * runs);
    let mut out = String::from("epoch,mean_normalized");
    if per_seed {
        for s in seeds {
            out.push_str(&format!(",seed_{s}"));
        }
    }
    out.push('\n');
    for p in &rec.points {
        out.push_str(&format!("{},{}", p.epoch, p.mean_normalized));
        if per_seed {
            for chunk in p.per_run.chunks(runs) {
                let mean = chunk.iter().sum::<i64>() as f64 / runs as f64;
                out.push_str(&format!(",{}", mean / rec.max_score as f64));
            }
        }
        out.push('\n');
    }
    out
}

pub struct TableDoc {
    pub csv: String,
    pub text: String,
}

const TABLE_ROWS: usize = 5;

fn table_row(rec: &RunRecord) -> Option<usize> {
    match rec.config.algorithm {
        Algorithm::Random => (rec.config.variant == VariantTag::Base).then_some(0),
        _ => Some(
            1 + VariantTag::ALL
                .iter()
                .position(|&v| v == rec.config.variant)
                .expect("ALL covers every tag"),
        ),
    }
}

fn row_label(row: usize) -> &'static str {
    match row {
        0 => "Random",
        r => VariantTag::ALL[r - 1].row_label(),
    }
}

/// The final score table, as machine-readable CSV and an aligned text
/// rendering. Rows appear when at least one record feeds them; columns
/// are fixed at dqn/ours per built-in game. A skipped record prints NA,
/// a cell nobody ran stays empty.
pub fn emit_table(records: &[RunRecord]) -> TableDoc {
    let games = BuiltinGame::ALL;
    let mut cells: Vec<Vec<String>> = vec![vec![String::new(); games.len() * 2]; TABLE_ROWS];
    let mut present = [false; TABLE_ROWS];
    for rec in records {
        let Some(row) = table_row(rec) else { continue };
        let Some(g) = games.iter().position(|&g| g == rec.config.game) else {
            continue;
        };
        let value = match rec.final_mean_normalized() {
            Some(v) if !rec.is_na() => format!("{v:.2}"),
            _ => "NA".to_string(),
        };
        present[row] = true;
        match rec.config.algorithm {
            Algorithm::Dqn => cells[row][g * 2] = value,
            Algorithm::QLearn => cells[row][g * 2 + 1] = value,
            Algorithm::Random => {
                cells[row][g * 2] = value.clone();
                cells[row][g * 2 + 1] = value;
            }
        }
    }

    let mut csv = String::from("row");
    for g in games {
        csv.push_str(&format!(",{0}_dqn,{0}_ours", g.name()));
    }
    csv.push('\n');
    for row in 0..TABLE_ROWS {
        if !present[row] {
            continue;
        }
        csv.push_str(row_label(row));
        for cell in &cells[row] {
            csv.push(',');
            csv.push_str(cell);
        }
        csv.push('\n');
    }

    const LABEL_W: usize = 14;
    const CELL_W: usize = 9;
    let mut text = format!("{:<LABEL_W$}", "row");
    for g in games {
        text.push_str(&format!("{:<width$}", g.name(), width = CELL_W * 2));
    }
    text.push('\n');
    text.push_str(&" ".repeat(LABEL_W));
    for _ in games {
        text.push_str(&format!("{:>CELL_W$}{:>CELL_W$}", "dqn", "ours"));
    }
    text.push('\n');
    for row in 0..TABLE_ROWS {
        if !present[row] {
            continue;
        }
        text.push_str(&format!("{:<LABEL_W$}", row_label(row)));
        for cell in &cells[row] {
            text.push_str(&format!("{:>CELL_W$}", if cell.is_empty() { "-" } else { cell }));
        }
        text.push('\n');
    }
    TableDoc { csv, text }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::evaluate_random;

    fn quick(game: BuiltinGame, variant: VariantTag, algorithm: Algorithm) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(game, variant, algorithm);
        cfg.epochs = 2_000;
        cfg.eval_runs = 3;
        cfg.eval_interval = 1_000;
        cfg
    }

    #[test]
    fn normalized_score_examples() {
        assert_eq!(normalized_score(510, 1000).unwrap(), 0.51);
        assert_eq!(normalized_score(50, 50).unwrap(), 1.0);
        assert_eq!(normalized_score(-10, 50).unwrap(), -0.20);
        assert!(matches!(
            normalized_score(5, 0),
            Err(ExperimentError::NonPositiveMax(0))
        ));
        assert!(normalized_score(5, -3).is_err());
    }

    #[test]
    fn config_validation_rejects_degenerate_values() {
        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::Random);
        cfg.eval_runs = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::Random);
        cfg.eval_interval = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::Random);
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::QLearn);
        cfg.k_override = Some(0);
        assert!(cfg.validate().is_err());

        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::QLearn);
        cfg.k_override = Some(40);
        assert!(cfg.validate().is_err(), "k=40 cannot fit the key");
    }

    #[test]
    fn random_cell_matches_direct_rollouts() {
        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::Random);
        cfg.eval_runs = 5;
        let rec = run_experiment(&cfg).unwrap();
        assert_eq!(rec.points.len(), 1);
        let spec = Arc::new(builtin_spec(BuiltinGame::MyAliensV1).clone());
        let mut env = Session::new(spec, 0);
        let direct = evaluate_random(&mut env, 5, EVAL_SEED);
        assert_eq!(rec.points[0].per_run, direct);
    }

    #[test]
    fn inapplicable_cells_are_skipped_not_errors() {
        let rec = run_experiment(&quick(
            BuiltinGame::MyAliensV1,
            VariantTag::ModImage,
            Algorithm::QLearn,
        ))
        .unwrap();
        assert!(rec.is_na());
        assert!(rec.points.is_empty());
        assert!(rec.skipped.as_deref().unwrap().contains("flat rectangles"));

        let rec = run_experiment(&quick(
            BuiltinGame::Roadrash,
            VariantTag::ModPosition,
            Algorithm::Random,
        ))
        .unwrap();
        assert!(rec.is_na());
    }

    #[test]
    fn qlearn_cell_shape_and_aggregation() {
        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::QLearn);
        cfg.seeds = vec![1, 2];
        let rec = run_experiment(&cfg).unwrap();
        let epochs: Vec<u64> = rec.points.iter().map(|p| p.epoch).collect();
        assert_eq!(epochs, vec![0, 1_000, 2_000]);
        for p in &rec.points {
            assert_eq!(p.per_run.len(), 6, "3 runs x 2 seeds, seed-major");
            let mean = p.per_run.iter().sum::<i64>() as f64 / p.per_run.len() as f64;
            assert!((mean - p.mean).abs() < 1e-9);
            assert!((p.mean / rec.max_score as f64 - p.mean_normalized).abs() < 1e-9);
        }
        assert!(rec.unseen_fraction.is_some());
    }

    #[test]
    fn dqn_cell_shape() {
        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::Dqn);
        cfg.epochs = 200;
        cfg.eval_interval = 100;
        cfg.eval_runs = 2;
        let rec = run_experiment(&cfg).unwrap();
        let epochs: Vec<u64> = rec.points.iter().map(|p| p.epoch).collect();
        assert_eq!(epochs, vec![0, 100, 200]);
        assert!(rec.unseen_fraction.is_none());
    }

    #[test]
    fn curves_are_deterministic_across_reruns() {
        let cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::QLearn);
        let a = emit_curves(&run_experiment(&cfg).unwrap());
        let b = emit_curves(&run_experiment(&cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 1 + 3, "header plus one line per point");
    }

    #[test]
    fn curve_columns_cover_seeds() {
        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::QLearn);
        cfg.seeds = vec![1, 2];
        let rec = run_experiment(&cfg).unwrap();
        let csv = emit_curves(&rec);
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "epoch,mean_normalized,seed_1,seed_2");
        for line in csv.lines().skip(1) {
            assert_eq!(line.split(',').count(), 4);
        }
    }

    #[test]
    fn table_for_empty_and_single_record() {
        let doc = emit_table(&[]);
        assert_eq!(doc.csv.lines().count(), 1, "header only");

        let cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::Random);
        let rec = run_experiment(&cfg).unwrap();
        let doc = emit_table(std::slice::from_ref(&rec));
        assert_eq!(doc.csv.lines().count(), 2);
        let row = doc.csv.lines().nth(1).unwrap();
        assert!(row.starts_with("Random,"));
        let first = row.split(',').nth(1).unwrap();
        assert_eq!(first, row.split(',').nth(2).unwrap(), "game-wide value spans both columns");
    }

    #[test]
    fn table_renders_na_cells() {
        let rec = run_experiment(&quick(
            BuiltinGame::Roadrash,
            VariantTag::ModPosition,
            Algorithm::QLearn,
        ))
        .unwrap();
        let doc = emit_table(&[rec]);
        let row = doc.csv.lines().nth(1).unwrap();
        assert!(row.starts_with("Mod-Position,"));
        assert_eq!(row.split(',').nth(6).unwrap(), "NA", "roadrash ours column");
        assert!(doc.text.contains("NA"));
    }

    #[test]
    fn cell_outputs_land_on_disk_and_rerun_identically() {
        let outdir = std::env::temp_dir().join(format!("cell_out_{}", std::process::id()));
        let _ = fs::remove_dir_all(&outdir);
        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::QLearn);
        cfg.outdir = Some(outdir.clone());
        run_experiment(&cfg).unwrap();
        let dir = outdir.join(cfg.cell_name());
        let first = fs::read_to_string(dir.join("curve.csv")).unwrap();
        assert!(dir.join("config.txt").exists());
        assert!(dir.join("cell.csv").exists());
        assert!(dir.join("meta.txt").exists());
        assert!(dir.join("qtable_seed1.txt").exists());
        run_experiment(&cfg).unwrap();
        let second = fs::read_to_string(dir.join("curve.csv")).unwrap();
        assert_eq!(first, second);
        fs::remove_dir_all(&outdir).unwrap();
    }

    #[test]
    fn model_sniffing_picks_the_right_loader() {
        let net = crate::dqn::DenseNet::new(&[4, 3, 2], 9);
        assert!(matches!(load_model(&net.save()), Ok(Model::Net(_))));

        assert!(matches!(load_model(b"3 1 0.5 2\n"), Ok(Model::Table(_))));

        assert!(load_model(b"not a model \xff").is_err());
    }

    #[test]
    fn exported_table_reproduces_the_cell_evaluation() {
        let outdir = std::env::temp_dir().join(format!("model_eval_{}", std::process::id()));
        let _ = fs::remove_dir_all(&outdir);
        let mut cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::QLearn);
        cfg.outdir = Some(outdir.clone());
        let rec = run_experiment(&cfg).unwrap();
        let bytes = fs::read(outdir.join(cfg.cell_name()).join("qtable_seed1.txt")).unwrap();
        let model = load_model(&bytes).unwrap();
        let opts = EvalOptions {
            eval_runs: cfg.eval_runs,
            ..EvalOptions::default()
        };
        let eval = evaluate_model(cfg.game, cfg.variant, &model, &opts).unwrap();
        assert_eq!(eval.point.per_run, rec.points.last().unwrap().per_run);
        assert!(eval.unseen_fraction.is_some());
        fs::remove_dir_all(&outdir).unwrap();
    }

    #[test]
    fn batched_cells_match_standalone_cells() {
        let cfg = quick(BuiltinGame::MyAliensV1, VariantTag::Base, Algorithm::QLearn);
        let batched = run_cells(&cfg, &VariantTag::ALL).unwrap();
        for rec in &batched {
            let mut single = cfg.clone();
            single.variant = rec.config.variant;
            let alone = run_experiment(&single).unwrap();
            assert_eq!(alone.points, rec.points, "{}", rec.config.variant);
            assert_eq!(alone.skipped, rec.skipped);
        }
    }
}
