//! Tabular Q-learning over packed state keys.
//!
//! One update per environment step, on the latest transition only. The
//! table is sparse: anything never visited reads as zero.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::encoder::EncoderConfig;
use crate::engine::Env;
use crate::perception::CategoryModel;
use crate::pipeline::frame_state;
use crate::rng::mix;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    values: BTreeMap<(u64, usize), f64>,
    visits: BTreeMap<(u64, usize), u32>,
}

impl QTable {
    pub fn get(&self, state: u64, action: usize) -> f64 {
        self.values.get(&(state, action)).copied().unwrap_or(0.0)
    }

    pub fn visits(&self, state: u64, action: usize) -> u32 {
        self.visits.get(&(state, action)).copied().unwrap_or(0)
    }

    pub fn max_value(&self, state: u64, actions: usize) -> f64 {
        (0..actions)
            .map(|a| self.get(state, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether this state was ever updated under any action.
    pub fn knows_state(&self, state: u64) -> bool {
        self.visits
            .range((state, 0)..=(state, usize::MAX))
            .next()
            .is_some()
    }

    pub fn entry_count(&self) -> usize {
        self.visits.len()
    }

    /// Distinct states with at least one updated cell, ascending.
    pub fn states(&self) -> impl Iterator<Item = u64> + '_ {
        let mut last = None;
        self.visits.keys().filter_map(move |&(s, _)| {
            if last == Some(s) {
                None
            } else {
                last = Some(s);
                Some(s)
            }
        })
    }

    /// One Bellman backup on one cell. `next` carries the successor state
    /// for non-terminal transitions; terminal targets are the bare reward.
    pub fn update(
        &mut self,
        state: u64,
        action: usize,
        reward: f64,
        next: Option<u64>,
        actions: usize,
        cfg: &LearnerConfig,
    ) {
        let target = match next {
            Some(s2) => reward + cfg.gamma * self.max_value(s2, actions),
            None => reward,
        };
        let cell = self.values.entry((state, action)).or_insert(0.0);
        *cell = (1.0 - cfg.alpha) * *cell + cfg.alpha * target;
        *self.visits.entry((state, action)).or_insert(0) += 1;
    }

    /// Sorted text lines "state action value count"; stable for diffing
    /// and golden tests. f64 display is shortest-round-trip, so import
    /// reproduces the table exactly.
    pub fn export(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for (&(s, a), &v) in &self.values {
            let n = self.visits(s, a);
            let _ = writeln!(out, "{s} {a} {v} {n}");
        }
        out
    }

    pub fn import(text: &str) -> Result<QTable, String> {
        let mut q = QTable::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let bad = || format!("line {}: expected `state action value count`", no + 1);
            let s: u64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            let a: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            let v: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            let n: u32 = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            if it.next().is_some() {
                return Err(bad());
            }
            q.values.insert((s, a), v);
            q.visits.insert((s, a), n);
        }
        Ok(q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_steps: u64,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> LearnerConfig {
        LearnerConfig {
            alpha: 0.1,
            gamma: 0.95,
            eps_start: 1.0,
            eps_end: 0.01,
            eps_decay_steps: 400_000,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    /// Linear anneal: start at t=0, end from `eps_decay_steps` onward.
    pub fn epsilon(&self, t: u64) -> f64 {
        let frac = if self.eps_decay_steps == 0 {
            1.0
        } else {
            (t as f64 / self.eps_decay_steps as f64).min(1.0)
        };
        self.eps_start - (self.eps_start - self.eps_end) * frac
    }
}

/// Epsilon-greedy with uniform tie-breaking among equal argmax cells.
pub fn select_action(
    q: &QTable,
    state: u64,
    actions: usize,
    epsilon: f64,
    rng: &mut impl Rng,
) -> usize {
    assert!(actions > 0, "empty action set");
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return rng.random_range(0..actions);
    }
    let best = q.max_value(state, actions);
    let tied: Vec<usize> = (0..actions).filter(|&a| q.get(state, a) == best).collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.random_range(0..tied.len())]
    }
}

/// One point on a learning curve: normalized evaluation scores at a given
/// training epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub epoch: u64,
    pub per_run: Vec<f64>,
    pub mean: f64,
}

/// Runs exactly `epochs` environment steps with one table update each.
/// `probe` sees the empty table at epoch 0 and the table so far after
/// every step, with the count of completed steps; returning Some records
/// a curve point (callers decide the interval and how to evaluate).
pub fn train(
    env: &mut dyn Env,
    enc: &EncoderConfig,
    model: &CategoryModel,
    cfg: &LearnerConfig,
    epochs: u64,
    mut probe: impl FnMut(u64, &QTable) -> Option<CurvePoint>,
) -> (QTable, Vec<CurvePoint>) {
    let mut q = QTable::default();
    let mut curve = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0x91e));
    let grid_width = env.grid_size().0;
    let actions = env.action_count();
    let mut episode = 0u64;
    env.reset(mix(cfg.seed, episode));
    let mut state = frame_state(enc, grid_width, model, &env.observe()).expect("agent at reset");
    if let Some(point) = probe(0, &q) {
        curve.push(point);
    }
    for t in 0..epochs {
        if !env.running() {
            episode += 1;
            env.reset(mix(cfg.seed, episode));
            state = frame_state(enc, grid_width, model, &env.observe()).expect("agent at reset");
        }
        let eps = cfg.epsilon(t);
        let action = select_action(&q, state, actions, eps, &mut rng);
        let tr = env.step(action);
        if tr.terminal {
            q.update(state, action, tr.reward as f64, None, actions, cfg);
        } else {
            let next = frame_state(enc, grid_width, model, &env.observe())
                .expect("agent visible while the episode runs");
            q.update(state, action, tr.reward as f64, Some(next), actions, cfg);
            state = next;
        }
        if let Some(point) = probe(t + 1, &q) {
            curve.push(point);
        }
    }
    (q, curve)
}
