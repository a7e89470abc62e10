//! Finding the player among the pixels.
//!
//! Three filters run in priority order, stopping as soon as exactly one
//! signature survives: the agent should look unlike everything else
//! (uniqueness), it should be on screen the whole time (permanence), and
//! it should move the way the keys say (motion binding). After that, each
//! key is probed to learn what it does, including fire detection by
//! watching for objects that pop into existence next to the agent.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{Env, ObservedObject};
use crate::perception::{box_chebyshev, track, Signature};
use crate::rng::mix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum KeyAction {
    MoveLeft,
    MoveRight,
    MoveUp,
    MoveDown,
    Fire,
    NoEffect,
}

impl KeyAction {
    pub fn as_str(self) -> &'static str {
        match self {
            KeyAction::MoveLeft => "move_left",
            KeyAction::MoveRight => "move_right",
            KeyAction::MoveUp => "move_up",
            KeyAction::MoveDown => "move_down",
            KeyAction::Fire => "fire",
            KeyAction::NoEffect => "no_effect",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentProfile {
    pub signature: Signature,
    pub instance_handle: u64,
    /// Action index → discovered semantics; covers every key.
    pub key_map: BTreeMap<usize, KeyAction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bias {
    Uniqueness,
    Permanence,
    MotionBinding,
}

impl Bias {
    pub fn as_str(self) -> &'static str {
        match self {
            Bias::Uniqueness => "uniqueness",
            Bias::Permanence => "permanence",
            Bias::MotionBinding => "motion-binding",
        }
    }
}

/// Which filter settled the question, and the trail of candidate sets it
/// took to get there. Candidate counts never increase stage to stage.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub bias_used: Bias,
    pub candidates_after_each_stage: Vec<Vec<Signature>>,
}

impl BiasReport {
    pub fn render_text(&self) -> String {
        use std::fmt::Write as _;
        let stages = [Bias::Uniqueness, Bias::Permanence, Bias::MotionBinding];
        let mut out = String::new();
        for (stage, set) in stages.iter().zip(&self.candidates_after_each_stage) {
            let list: Vec<String> = set.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(
                out,
                "after {}: {} candidate(s): {}",
                stage.as_str(),
                set.len(),
                list.join(" | ")
            );
        }
        let _ = writeln!(out, "agent identified via {}", self.bias_used.as_str());
        out
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum IdError {
    #[error("no candidate signature survived the identification filters")]
    IdentificationFailed,
    #[error("{0} candidate signatures respond to input alike")]
    AmbiguousAgent(usize),
}

/// Observation window under uniformly random actions. Episodes that end
/// early are restarted on a fresh seed so the window always fills; terminal
/// frames are skipped because play is over on them.
pub fn collect_frames(env: &mut dyn Env, seed: u64, window: usize) -> Vec<Vec<ObservedObject>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0x0bcea11));
    let mut episode = 0u64;
    env.reset(mix(seed, episode));
    let mut frames = vec![env.observe()];
    while frames.len() < window {
        if env.running() {
            let action = rng.random_range(0..env.action_count());
            env.step(action);
            if env.running() {
                frames.push(env.observe());
            }
        } else {
            episode += 1;
            env.reset(mix(seed, episode));
            frames.push(env.observe());
        }
    }
    frames
}

/// Signatures that are never duplicated on screen: every frame contains
/// either zero or one instance of them.
pub fn filter_unique(frames: &[Vec<ObservedObject>]) -> BTreeSet<Signature> {
    let mut seen = BTreeSet::new();
    let mut duplicated = BTreeSet::new();
    for frame in frames {
        let mut counts: BTreeMap<Signature, u32> = BTreeMap::new();
        for obj in frame {
            *counts.entry(Signature::of(obj)).or_default() += 1;
        }
        for (sig, n) in counts {
            seen.insert(sig);
            if n > 1 {
                duplicated.insert(sig);
            }
        }
    }
    &seen - &duplicated
}

/// Keeps only candidates present in every single frame.
pub fn filter_permanent(
    frames: &[Vec<ObservedObject>],
    candidates: &BTreeSet<Signature>,
) -> BTreeSet<Signature> {
    candidates
        .iter()
        .filter(|sig| {
            frames
                .iter()
                .all(|f| f.iter().any(|o| Signature::of(o) == **sig))
        })
        .copied()
        .collect()
}

/// One key press from a fresh reset; returns each candidate's displacement.
fn probe_once(
    env: &mut dyn Env,
    seed: u64,
    key: usize,
    candidates: &BTreeSet<Signature>,
) -> BTreeMap<Signature, (i32, i32)> {
    env.reset(seed);
    let prev = env.observe();
    if env.running() {
        env.step(key);
    }
    let cur = env.observe();
    let tracked = track(&prev, &cur);
    let mut out = BTreeMap::new();
    for (&ph, &ch) in &tracked.correspondences {
        let p = prev.iter().find(|o| o.handle == ph).expect("tracked");
        let sig = Signature::of(p);
        if !candidates.contains(&sig) {
            continue;
        }
        let c = cur.iter().find(|o| o.handle == ch).expect("tracked");
        // One instance per candidate: uniqueness already held upstream.
        out.insert(sig, (c.x - p.x, c.y - p.y));
    }
    out
}

/// Presses every key `trials` times from fresh resets and keeps the
/// signature whose motion is bound to the keys: per key the displacement
/// must be consistent (modal direction in at least 80% of trials), and at
/// least two keys must produce distinct nonzero directions. Objects that
/// drift on their own move the same way no matter the key, so they fail
/// the second condition even though they pass the first.
pub fn motion_binding_test(
    env: &mut dyn Env,
    candidates: &BTreeSet<Signature>,
    trials: u32,
    seed: u64,
) -> Result<Signature, IdError> {
    let keys = env.action_count();
    let mut samples: BTreeMap<Signature, Vec<Vec<(i32, i32)>>> = candidates
        .iter()
        .map(|&s| (s, vec![Vec::new(); keys]))
        .collect();
    for key in 0..keys {
        for trial in 0..trials {
            let probe_seed = mix(seed, (key as u64) << 16 | trial as u64);
            for (sig, d) in probe_once(env, probe_seed, key, candidates) {
                samples.get_mut(&sig).expect("candidate")[key].push(d);
            }
        }
    }

    let passers: Vec<Signature> = samples
        .into_iter()
        .filter_map(|(sig, per_key)| {
            let mut directions = BTreeSet::new();
            for observed in &per_key {
                let mode = modal(observed)?;
                let count = observed.iter().filter(|&&d| d == mode).count();
                if count * 5 < observed.len() * 4 {
                    return None;
                }
                if mode != (0, 0) {
                    directions.insert(mode);
                }
            }
            (directions.len() >= 2).then_some(sig)
        })
        .collect();

    match passers.len() {
        0 => Err(IdError::IdentificationFailed),
        1 => Ok(passers[0]),
        n => Err(IdError::AmbiguousAgent(n)),
    }
}

fn modal<T: Copy + Ord>(values: &[T]) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_default() += 1;
    }
    counts.into_iter().max_by_key(|&(_, n)| n).map(|(v, _)| v)
}

/// Runs the biases in order, stopping at the first that leaves exactly one
/// signature. The returned profile has an empty key map; see
/// `discover_key_bindings`.
pub fn identify_agent(
    env: &mut dyn Env,
    window: usize,
    trials: u32,
    seed: u64,
) -> Result<(AgentProfile, BiasReport), IdError> {
    let frames = collect_frames(env, seed, window);
    let mut stages = Vec::new();

    let unique = filter_unique(&frames);
    stages.push(unique.iter().copied().collect());
    let (signature, bias_used) = if unique.len() == 1 {
        (*unique.iter().next().unwrap(), Bias::Uniqueness)
    } else {
        let permanent = filter_permanent(&frames, &unique);
        stages.push(permanent.iter().copied().collect());
        if permanent.len() == 1 {
            (*permanent.iter().next().unwrap(), Bias::Permanence)
        } else {
            let sig = motion_binding_test(env, &permanent, trials, mix(seed, 0x3b1a5))?;
            stages.push(vec![sig]);
            (sig, Bias::MotionBinding)
        }
    };

    env.reset(seed);
    let instance_handle = env
        .observe()
        .iter()
        .find(|o| Signature::of(o) == signature)
        .map(|o| o.handle)
        .ok_or(IdError::IdentificationFailed)?;

    Ok((
        AgentProfile {
            signature,
            instance_handle,
            key_map: BTreeMap::new(),
        },
        BiasReport {
            bias_used,
            candidates_after_each_stage: stages,
        },
    ))
}

/// Presses per key during binding discovery.
const PRESSES: u32 = 5;
/// Presses that must agree before a key counts as movement.
const MOVE_MAJORITY: usize = 3;

/// Probes every key from fresh resets: a dominant nonzero displacement
/// maps to a move direction; a dominant zero displacement with objects
/// repeatedly entering right next to the agent maps to fire; anything
/// else is a no-op key.
pub fn discover_key_bindings(
    env: &mut dyn Env,
    agent: Signature,
    fire_threshold: u32,
    seed: u64,
) -> BTreeMap<usize, KeyAction> {
    let mut key_map = BTreeMap::new();
    for key in 0..env.action_count() {
        let mut displacements = Vec::new();
        let mut adjacent_spawn_presses = 0u32;
        for press in 0..PRESSES {
            let probe_seed = mix(seed, 0xd15c0 ^ (key as u64) << 16 | press as u64);
            env.reset(probe_seed);
            let prev = env.observe();
            if env.running() {
                env.step(key);
            }
            let cur = env.observe();
            let tracked = track(&prev, &cur);
            let agent_prev = prev.iter().find(|o| Signature::of(o) == agent);
            let agent_cur = agent_prev.and_then(|p| {
                tracked
                    .correspondences
                    .get(&p.handle)
                    .and_then(|ch| cur.iter().find(|o| o.handle == *ch))
            });
            if let (Some(p), Some(c)) = (agent_prev, agent_cur) {
                displacements.push((c.x - p.x, c.y - p.y));
                if tracked.entered.iter().any(|&h| {
                    let obj = cur.iter().find(|o| o.handle == h).expect("entered");
                    box_chebyshev(obj, c) <= 1
                }) {
                    adjacent_spawn_presses += 1;
                }
            }
        }
        let mode = modal(&displacements);
        let mode_count = mode
            .map(|m| displacements.iter().filter(|&&d| d == m).count())
            .unwrap_or(0);
        let action = match mode {
            Some(m) if m != (0, 0) && mode_count >= MOVE_MAJORITY => direction_of(m),
            _ if adjacent_spawn_presses >= fire_threshold => KeyAction::Fire,
            _ => KeyAction::NoEffect,
        };
        key_map.insert(key, action);
    }
    key_map
}

fn direction_of((dx, dy): (i32, i32)) -> KeyAction {
    if dx.abs() >= dy.abs() {
        if dx < 0 {
            KeyAction::MoveLeft
        } else {
            KeyAction::MoveRight
        }
    } else if dy < 0 {
        KeyAction::MoveUp
    } else {
        KeyAction::MoveDown
    }
}
