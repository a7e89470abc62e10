//! Deterministic simulation of a [`GameSpec`].
//!
//! A [`WorldState`] is a plain value: stepping it with the same spec, seed
//! and action sequence reproduces the exact trajectory, including every rng
//! draw. All randomness comes from the ChaCha stream seeded at [`reset`].
//!
//! Step order within one tick:
//!   player action, dynamics rules in declared order, contact resolution,
//!   reward rules, win/lose checks, timeout. Objects spawned during a tick
//!   do not move until the next tick, but they do take part in contacts.

mod render;
mod session;

pub use render::{render, PixelFrame};
pub use session::{Env, Session, Transition};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gamespec::{
    ActionSem, Color, DynamicsRule, FallDir, GameSpec, RewardRule, TimeoutOutcome, WinCondition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Won,
    Lost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub id: u64,
    pub class_idx: usize,
    pub x: i32,
    pub y: i32,
    /// Displacement over the last tick; nominal rule velocity at spawn.
    pub vx: i32,
    pub vy: i32,
    alive: bool,
}

/// Per-dynamics-rule mutable state, indexed parallel to `spec.dynamics`.
#[derive(Debug, Clone, PartialEq)]
enum RuleState {
    Inert,
    March { dir: i32 },
    Shoot { countdown: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub level_index: usize,
    pub objects: Vec<ObjectInstance>,
    pub score: i64,
    pub step_count: u32,
    pub status: Status,
    /// Count of win-condition objects collected this level.
    pub collected: u32,
    rng: ChaCha8Rng,
    rule_states: Vec<RuleState>,
    next_instance_id: u64,
    player_class_idx: usize,
    player_id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Contact { a: u64, b: u64 },
    Spawned { id: u64 },
    Despawned { id: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: i64,
    pub status: Status,
    pub events: Vec<Event>,
}

/// What downstream modules are allowed to see: appearance and motion, no
/// class identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservedObject {
    pub handle: u64,
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
    pub color: Color,
    pub vx: i32,
    pub vy: i32,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("level {level} out of range (spec has {count})")]
    LevelOutOfRange { level: usize, count: usize },
    #[error("action index {index} out of range (spec has {count})")]
    BadAction { index: usize, count: usize },
    #[error("cannot step a terminal state")]
    SteppedTerminal,
}

impl WorldState {
    pub fn player(&self) -> Option<&ObjectInstance> {
        self.objects
            .iter()
            .find(|o| o.alive && o.id == self.player_id)
    }

    pub fn live_count(&self, spec: &GameSpec, class: &str) -> usize {
        let Some(idx) = class_index(spec, class) else {
            return 0;
        };
        self.objects
            .iter()
            .filter(|o| o.alive && o.class_idx == idx)
            .count()
    }
}

fn class_index(spec: &GameSpec, class: &str) -> Option<usize> {
    spec.classes.iter().position(|c| c.id == class)
}

fn effective_u32(spec: &GameSpec, level: usize, key: &str, base: u32) -> u32 {
    spec.level_param(level, key, base as f64).round() as u32
}

fn effective_rate(spec: &GameSpec, level: usize, key: &str, base: f64) -> f64 {
    spec.level_param(level, key, base)
}

/// Builds the starting state for one level. The caller carries score across
/// levels; see [`advance_level`].
pub fn reset(spec: &GameSpec, level: usize, seed: u64) -> Result<WorldState, EngineError> {
    if level >= spec.levels.len() {
        return Err(EngineError::LevelOutOfRange {
            level,
            count: spec.levels.len(),
        });
    }
    let rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = WorldState {
        level_index: level,
        objects: Vec::new(),
        score: 0,
        step_count: 0,
        status: Status::Running,
        collected: 0,
        rng,
        rule_states: Vec::new(),
        next_instance_id: 0,
        player_class_idx: 0,
        player_id: 0,
    };
    populate(spec, &mut state, level);
    Ok(state)
}

/// Starts the next level of a running episode: fresh layout, but score, rng
/// stream and instance-id counter continue from the previous level.
pub fn advance_level(
    spec: &GameSpec,
    prev: &WorldState,
    level: usize,
) -> Result<WorldState, EngineError> {
    if level >= spec.levels.len() {
        return Err(EngineError::LevelOutOfRange {
            level,
            count: spec.levels.len(),
        });
    }
    let mut state = WorldState {
        level_index: level,
        objects: Vec::new(),
        score: prev.score,
        step_count: 0,
        status: Status::Running,
        collected: 0,
        rng: prev.rng.clone(),
        rule_states: Vec::new(),
        next_instance_id: prev.next_instance_id,
        player_class_idx: 0,
        player_id: 0,
    };
    populate(spec, &mut state, level);
    Ok(state)
}

fn populate(spec: &GameSpec, state: &mut WorldState, level: usize) {
    let player_class = spec.player_class().to_string();
    state.player_class_idx = class_index(spec, &player_class).expect("validated");

    for p in &spec.levels[level].placements {
        let class_idx = class_index(spec, &p.class).expect("validated");
        let id = spawn_object(spec, state, class_idx, p.x, p.y);
        if class_idx == state.player_class_idx {
            state.player_id = id;
        }
    }

    state.rule_states = spec
        .dynamics
        .iter()
        .map(|rule| match rule {
            DynamicsRule::March { .. } => RuleState::March { dir: 1 },
            DynamicsRule::Shoot { class, cadence, .. } => RuleState::Shoot {
                countdown: effective_u32(spec, level, &format!("shoot_cadence.{class}"), *cadence)
                    .max(1),
            },
            _ => RuleState::Inert,
        })
        .collect();

    // Lane rules seed the road with traffic so the first seconds are not
    // trivially safe.
    for rule in &spec.dynamics {
        if let DynamicsRule::Lane { class, prefill, .. } = rule {
            let class_idx = class_index(spec, class).expect("validated");
            let (w, h) = spec.classes[class_idx].size;
            let (w, h) = (w as i32, h as i32);
            let band = (spec.grid_height / 2).max(h);
            for _ in 0..*prefill {
                for _attempt in 0..20 {
                    let x = state.rng.random_range(0..=(spec.grid_width - w));
                    let y = state.rng.random_range(0..=(band - h).max(0));
                    let clash = state.objects.iter().any(|o| {
                        let (ow, oh) = spec.classes[o.class_idx].size;
                        boxes_overlap(x, y, w, h, o.x, o.y, ow as i32, oh as i32)
                    });
                    if !clash {
                        spawn_object(spec, state, class_idx, x, y);
                        break;
                    }
                }
            }
        }
    }
}

/// Nominal velocity for a class that has not moved yet: falling and lane
/// classes are already in flight the step they appear.
fn nominal_velocity(spec: &GameSpec, class_idx: usize) -> (i32, i32) {
    let id = &spec.classes[class_idx].id;
    for rule in &spec.dynamics {
        match rule {
            DynamicsRule::Fall { class, speed, dir } if class == id => {
                let sign = match dir {
                    FallDir::Down => 1,
                    FallDir::Up => -1,
                };
                return (0, sign * *speed as i32);
            }
            DynamicsRule::Lane { class, speed, .. } if class == id => {
                return (0, *speed as i32);
            }
            _ => {}
        }
    }
    (0, 0)
}

fn spawn_object(spec: &GameSpec, state: &mut WorldState, class_idx: usize, x: i32, y: i32) -> u64 {
    let id = state.next_instance_id;
    state.next_instance_id += 1;
    let (vx, vy) = nominal_velocity(spec, class_idx);
    state.objects.push(ObjectInstance {
        id,
        class_idx,
        x,
        y,
        vx,
        vy,
        alive: true,
    });
    id
}

fn boxes_overlap(ax: i32, ay: i32, aw: i32, ah: i32, bx: i32, by: i32, bw: i32, bh: i32) -> bool {
    ax < bx + bw && bx < ax + aw && ay < by + bh && by < ay + ah
}

/// Advances the world one tick. Errors if the state is terminal or the
/// action index is out of range; never panics on valid input.
pub fn step(spec: &GameSpec, state: &mut WorldState, action: usize) -> Result<StepOutcome, EngineError> {
    if state.status != Status::Running {
        return Err(EngineError::SteppedTerminal);
    }
    if action >= spec.actions.len() {
        return Err(EngineError::BadAction {
            index: action,
            count: spec.actions.len(),
        });
    }

    let mut events = Vec::new();
    let mut reward = 0i64;
    let mut spawned_now: Vec<u64> = Vec::new();
    let level = state.level_index;

    apply_player_action(spec, state, action, &mut events, &mut spawned_now);
    run_dynamics(spec, state, &mut events, &mut spawned_now);
    let lost = resolve_contacts(spec, state, &mut events, &mut reward);

    if lost {
        state.status = Status::Lost;
    } else {
        for rule in &spec.rewards {
            if let RewardRule::StepSurvived { reward: r } = rule {
                reward += r;
            }
        }
        let won = match &spec.termination.win {
            WinCondition::None => false,
            WinCondition::Collected { count, .. } => state.collected >= *count,
            WinCondition::Cleared { class } => state.live_count(spec, class) == 0,
        };
        if won {
            state.status = Status::Won;
            for rule in &spec.rewards {
                if let RewardRule::LevelWin { reward: r } = rule {
                    reward += r;
                }
            }
        }
    }

    state.step_count += 1;
    if state.status == Status::Running {
        let timeout = effective_u32(spec, level, "timeout", spec.termination.timeout).max(1);
        if state.step_count >= timeout {
            reward += spec.termination.timeout_reward;
            match spec.termination.on_timeout {
                TimeoutOutcome::Win => {
                    state.status = Status::Won;
                    for rule in &spec.rewards {
                        if let RewardRule::LevelWin { reward: r } = rule {
                            reward += r;
                        }
                    }
                }
                TimeoutOutcome::Lose => state.status = Status::Lost,
            }
        }
    }

    if state.status == Status::Lost {
        let pid = state.player_id;
        if let Some(p) = state.objects.iter_mut().find(|o| o.alive && o.id == pid) {
            p.alive = false;
            events.push(Event::Despawned { id: pid });
        }
    }

    state.score += reward;
    state.objects.retain(|o| o.alive);
    Ok(StepOutcome {
        reward,
        status: state.status,
        events,
    })
}

fn apply_player_action(
    spec: &GameSpec,
    state: &mut WorldState,
    action: usize,
    events: &mut Vec<Event>,
    spawned_now: &mut Vec<u64>,
) {
    let semantic = spec.actions[action].semantic;
    let pid = state.player_id;
    let pidx = state
        .objects
        .iter()
        .position(|o| o.alive && o.id == pid)
        .expect("player live while Running");
    let (pw, ph) = spec.classes[state.objects[pidx].class_idx].size;
    let (pw, ph) = (pw as i32, ph as i32);

    let control = spec.dynamics.iter().find_map(|r| match r {
        DynamicsRule::Control { speed, boundary, fire, .. } => Some((*speed, *boundary, fire)),
        _ => None,
    });
    let (speed, boundary, fire) = control.expect("validated: one control rule");
    let speed = speed as i32;

    let (mut dx, mut dy) = match semantic {
        ActionSem::MoveLeft => (-speed, 0),
        ActionSem::MoveRight => (speed, 0),
        ActionSem::MoveUp => (0, -speed),
        ActionSem::MoveDown => (0, speed),
        ActionSem::Fire | ActionSem::Noop => (0, 0),
    };

    {
        let p = &state.objects[pidx];
        let new_x = match boundary {
            crate::gamespec::Boundary::Clamp => (p.x + dx).clamp(0, spec.grid_width - pw),
            crate::gamespec::Boundary::Wrap => (p.x + dx).rem_euclid(spec.grid_width),
        };
        let new_y = (p.y + dy).clamp(0, spec.grid_height - ph);
        dx = new_x - p.x;
        dy = new_y - p.y;
        let p = &mut state.objects[pidx];
        p.x = new_x;
        p.y = new_y;
        p.vx = dx;
        p.vy = dy;
    }

    if semantic == ActionSem::Fire {
        if let Some(f) = fire {
            let child_idx = class_index(spec, &f.child).expect("validated");
            let live_children = state
                .objects
                .iter()
                .filter(|o| o.alive && o.class_idx == child_idx)
                .count();
            if live_children < f.limit as usize {
                let (cw, ch) = spec.classes[child_idx].size;
                let (cw, ch) = (cw as i32, ch as i32);
                let p = &state.objects[pidx];
                let upward = !matches!(
                    nominal_velocity(spec, child_idx),
                    (_, vy) if vy > 0
                );
                let x = p.x + (pw - cw) / 2;
                let y = if upward { p.y - ch } else { p.y + ph };
                if x >= 0 && x + cw <= spec.grid_width && y >= 0 && y + ch <= spec.grid_height {
                    let id = spawn_object(spec, state, child_idx, x, y);
                    events.push(Event::Spawned { id });
                    spawned_now.push(id);
                }
            }
        }
    }
}

fn run_dynamics(
    spec: &GameSpec,
    state: &mut WorldState,
    events: &mut Vec<Event>,
    spawned_now: &mut Vec<u64>,
) {
    let level = state.level_index;
    for (rule_idx, rule) in spec.dynamics.iter().enumerate() {
        match rule {
            DynamicsRule::Control { .. } => {}
            DynamicsRule::Fall { class, speed, dir } => {
                let class_idx = class_index(spec, class).expect("validated");
                let sign = match dir {
                    FallDir::Down => 1,
                    FallDir::Up => -1,
                };
                let d = sign * *speed as i32;
                let (_, h) = spec.classes[class_idx].size;
                let h = h as i32;
                for i in 0..state.objects.len() {
                    let o = &state.objects[i];
                    if !o.alive || o.class_idx != class_idx || spawned_now.contains(&o.id) {
                        continue;
                    }
                    let new_y = o.y + d;
                    if new_y >= 0 && new_y + h <= spec.grid_height {
                        let o = &mut state.objects[i];
                        o.y = new_y;
                        o.vx = 0;
                        o.vy = d;
                    } else {
                        let id = o.id;
                        state.objects[i].alive = false;
                        events.push(Event::Despawned { id });
                    }
                }
            }
            DynamicsRule::March { class, step, period, drop, floor } => {
                let class_idx = class_index(spec, class).expect("validated");
                let period =
                    effective_u32(spec, level, &format!("march_period.{class}"), *period).max(1);
                if (state.step_count + 1) % period != 0 {
                    continue;
                }
                let members: Vec<usize> = (0..state.objects.len())
                    .filter(|&i| {
                        let o = &state.objects[i];
                        o.alive && o.class_idx == class_idx && !spawned_now.contains(&o.id)
                    })
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let (w, h) = spec.classes[class_idx].size;
                let (w, h) = (w as i32, h as i32);
                let dir = match &state.rule_states[rule_idx] {
                    RuleState::March { dir } => *dir,
                    _ => unreachable!("rule state indexed by rule"),
                };
                let lo = members.iter().map(|&i| state.objects[i].x).min().unwrap();
                let hi = members
                    .iter()
                    .map(|&i| state.objects[i].x + w)
                    .max()
                    .unwrap();
                let bottom = members
                    .iter()
                    .map(|&i| state.objects[i].y + h - 1)
                    .max()
                    .unwrap();
                let dx = dir * *step as i32;
                if lo + dx >= 0 && hi + dx <= spec.grid_width {
                    for &i in &members {
                        let o = &mut state.objects[i];
                        o.x += dx;
                        o.vx = dx;
                        o.vy = 0;
                    }
                } else {
                    // Edge reached: descend if the floor allows, always turn.
                    let drop_ok = bottom + *drop as i32 <= *floor;
                    for &i in &members {
                        let o = &mut state.objects[i];
                        if drop_ok {
                            o.y += *drop as i32;
                            o.vx = 0;
                            o.vy = *drop as i32;
                        } else {
                            o.vx = 0;
                            o.vy = 0;
                        }
                    }
                    state.rule_states[rule_idx] = RuleState::March { dir: -dir };
                }
            }
            DynamicsRule::Lane { class, speed, rate, .. } => {
                let class_idx = class_index(spec, class).expect("validated");
                let (w, h) = spec.classes[class_idx].size;
                let (w, h) = (w as i32, h as i32);
                let d = *speed as i32;
                for i in 0..state.objects.len() {
                    let o = &state.objects[i];
                    if !o.alive || o.class_idx != class_idx || spawned_now.contains(&o.id) {
                        continue;
                    }
                    let new_y = o.y + d;
                    if new_y + h <= spec.grid_height {
                        let o = &mut state.objects[i];
                        o.y = new_y;
                        o.vx = 0;
                        o.vy = d;
                    } else {
                        let id = o.id;
                        state.objects[i].alive = false;
                        events.push(Event::Despawned { id });
                    }
                }
                let rate = effective_rate(spec, level, &format!("lane_rate.{class}"), *rate);
                if state.rng.random::<f64>() < rate {
                    let mut free = Vec::new();
                    for x in 0..=(spec.grid_width - w) {
                        let blocked = state.objects.iter().any(|o| {
                            o.alive
                                && o.class_idx == class_idx
                                && boxes_overlap(x, 0, w, h, o.x, o.y, w, h)
                        });
                        if !blocked {
                            free.push(x);
                        }
                    }
                    if !free.is_empty() {
                        let x = free[state.rng.random_range(0..free.len())];
                        let id = spawn_object(spec, state, class_idx, x, 0);
                        events.push(Event::Spawned { id });
                        spawned_now.push(id);
                    }
                }
            }
            DynamicsRule::Spawn { from, child, rate } => {
                let child_idx = class_index(spec, child).expect("validated");
                let (cw, ch) = spec.classes[child_idx].size;
                let (cw, ch) = (cw as i32, ch as i32);
                let rate = effective_rate(spec, level, &format!("spawn.{child}"), *rate);
                match from {
                    Some(portal_class) => {
                        let portal_idx = class_index(spec, portal_class).expect("validated");
                        let sites: Vec<(i32, i32)> = state
                            .objects
                            .iter()
                            .filter(|o| o.alive && o.class_idx == portal_idx)
                            .map(|o| (o.x, o.y))
                            .collect();
                        for (x, y) in sites {
                            if state.rng.random::<f64>() < rate
                                && x + cw <= spec.grid_width
                                && y + ch <= spec.grid_height
                            {
                                let id = spawn_object(spec, state, child_idx, x, y);
                                events.push(Event::Spawned { id });
                                spawned_now.push(id);
                            }
                        }
                    }
                    None => {
                        if state.rng.random::<f64>() < rate {
                            let x = state.rng.random_range(0..=(spec.grid_width - cw));
                            let id = spawn_object(spec, state, child_idx, x, 0);
                            events.push(Event::Spawned { id });
                            spawned_now.push(id);
                        }
                    }
                }
            }
            DynamicsRule::Shoot { class, child, cadence } => {
                let class_idx = class_index(spec, class).expect("validated");
                let cadence =
                    effective_u32(spec, level, &format!("shoot_cadence.{class}"), *cadence).max(1);
                let countdown = match &mut state.rule_states[rule_idx] {
                    RuleState::Shoot { countdown } => countdown,
                    _ => unreachable!("rule state indexed by rule"),
                };
                *countdown = countdown.saturating_sub(1);
                if *countdown > 0 {
                    continue;
                }
                *countdown = cadence;
                // The member whose center column is nearest the player's
                // fires; ties go to the lowest, then leftmost, member.
                let shooter = {
                    let Some(p) = state.player() else { continue };
                    let (pw, _) = spec.classes[p.class_idx].size;
                    let pc = p.x + (pw as i32 - 1) / 2;
                    let (w, h) = spec.classes[class_idx].size;
                    let (w, h) = (w as i32, h as i32);
                    state
                        .objects
                        .iter()
                        .filter(|o| {
                            o.alive && o.class_idx == class_idx && !spawned_now.contains(&o.id)
                        })
                        .min_by_key(|o| {
                            let oc = o.x + (w - 1) / 2;
                            ((oc - pc).abs(), std::cmp::Reverse(o.y), o.x)
                        })
                        .map(|o| (o.x + (w - 1) / 2, o.y + h))
                };
                if let Some((bx, by)) = shooter {
                    let child_idx = class_index(spec, child).expect("validated");
                    let (cw, ch) = spec.classes[child_idx].size;
                    let (cw, ch) = (cw as i32, ch as i32);
                    if bx >= 0 && bx + cw <= spec.grid_width && by >= 0 && by + ch <= spec.grid_height
                    {
                        let id = spawn_object(spec, state, child_idx, bx, by);
                        events.push(Event::Spawned { id });
                        spawned_now.push(id);
                    }
                }
            }
        }
    }
}

/// Applies contact reward rules to every overlapping pair. Player-involving
/// contacts resolve first; an object despawned by an earlier contact cannot
/// take part in a later one this tick. Returns whether a losing contact
/// fired.
fn resolve_contacts(
    spec: &GameSpec,
    state: &mut WorldState,
    events: &mut Vec<Event>,
    reward: &mut i64,
) -> bool {
    struct Hit {
        rule_idx: usize,
        first: u64,
        second: u64,
    }

    let mut hits = Vec::new();
    for i in 0..state.objects.len() {
        if !state.objects[i].alive {
            continue;
        }
        for j in (i + 1)..state.objects.len() {
            if !state.objects[j].alive {
                continue;
            }
            let (a, b) = (&state.objects[i], &state.objects[j]);
            let (aw, ah) = spec.classes[a.class_idx].size;
            let (bw, bh) = spec.classes[b.class_idx].size;
            if !boxes_overlap(
                a.x, a.y, aw as i32, ah as i32, b.x, b.y, bw as i32, bh as i32,
            ) {
                continue;
            }
            let a_class = &spec.classes[a.class_idx].id;
            let b_class = &spec.classes[b.class_idx].id;
            for (rule_idx, rule) in spec.rewards.iter().enumerate() {
                if let RewardRule::Contact { a: ra, b: rb, .. } = rule {
                    if ra == a_class && rb == b_class {
                        hits.push(Hit {
                            rule_idx,
                            first: a.id,
                            second: b.id,
                        });
                        break;
                    }
                    if ra == b_class && rb == a_class {
                        hits.push(Hit {
                            rule_idx,
                            first: b.id,
                            second: a.id,
                        });
                        break;
                    }
                }
            }
        }
    }

    let pid = state.player_id;
    hits.sort_by_key(|h| {
        let involves_player = h.first == pid || h.second == pid;
        (!involves_player, h.first.min(h.second), h.first.max(h.second))
    });

    let mut lost = false;
    for hit in hits {
        let first_alive = state.objects.iter().any(|o| o.alive && o.id == hit.first);
        let second_alive = state.objects.iter().any(|o| o.alive && o.id == hit.second);
        if !first_alive || !second_alive {
            continue;
        }
        let RewardRule::Contact { reward: r, despawn, lose, .. } = &spec.rewards[hit.rule_idx]
        else {
            unreachable!("hit refers to a contact rule");
        };
        *reward += r;
        events.push(Event::Contact {
            a: hit.first,
            b: hit.second,
        });
        let (kill_first, kill_second) = match despawn {
            crate::gamespec::Despawn::None => (false, false),
            crate::gamespec::Despawn::First => (true, false),
            crate::gamespec::Despawn::Second => (false, true),
            crate::gamespec::Despawn::Both => (true, true),
        };
        for (kill, id) in [(kill_first, hit.first), (kill_second, hit.second)] {
            if !kill {
                continue;
            }
            if let Some(o) = state.objects.iter_mut().find(|o| o.alive && o.id == id) {
                o.alive = false;
                events.push(Event::Despawned { id });
                if let WinCondition::Collected { class, .. } = &spec.termination.win {
                    let involves_player = hit.first == pid || hit.second == pid;
                    if involves_player && &spec.classes[o.class_idx].id == class {
                        state.collected += 1;
                    }
                }
            }
        }
        if *lose {
            lost = true;
        }
    }
    lost
}

/// Live objects as the learning stack sees them: appearance and motion only.
pub fn observe(spec: &GameSpec, state: &WorldState) -> Vec<ObservedObject> {
    state
        .objects
        .iter()
        .filter(|o| o.alive)
        .map(|o| {
            let class = &spec.classes[o.class_idx];
            ObservedObject {
                handle: o.id,
                x: o.x,
                y: o.y,
                w: class.size.0,
                h: class.size.1,
                color: class.color,
                vx: o.vx,
                vy: o.vy,
            }
        })
        .collect()
}

/// One trace line per step: plumbing for the CLI's --trace flag.
pub fn trace_line(step: u32, action_label: &str, outcome: &StepOutcome) -> String {
    let status = match outcome.status {
        Status::Running => "running",
        Status::Won => "won",
        Status::Lost => "lost",
    };
    format!("{step} {action_label} {} {status}", outcome.reward)
}

#[cfg(test)]
mod tests;
