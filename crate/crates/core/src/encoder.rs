//! Categorical state encoding.
//!
//! The learner never sees pixels or object identities, only a short bit
//! string built from the category model: for each relevant moving category
//! a window of 2k+1 orientation bits centered on the agent, two bits for
//! the grid boundary, and optionally one bit for a live agent projectile.
//!
//! An orientation bit at offset i is set when some object of that plane's
//! category is on a collision course with the column the agent could reach
//! in |i| moves: the object's vertical arrival time onto the agent's rows
//! must not exceed the agent's own travel time plus one step of slack, and
//! at arrival the object must cover that column. Everything is exact
//! integer arithmetic, so the encoding is a pure function of geometry.
//!
//! The packed-key layout lives in docs/state-layout.md; keep them in sync.

use crate::engine::ObservedObject;
use crate::perception::Category;

/// Arrival threshold grace, in steps.
const SLACK: i64 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderConfig {
    /// Horizontal half-width of the orientation window, in cells.
    pub k: u32,
    /// Which moving categories get an orientation plane, in bit order.
    pub planes: Vec<Category>,
    pub has_bullet_bit: bool,
    /// How many engine steps one cell of agent movement costs.
    pub agent_steps_per_cell: u32,
}

impl EncoderConfig {
    pub fn new(k: u32, planes: Vec<Category>) -> EncoderConfig {
        assert!(k >= 1, "k must be at least 1");
        assert!(!planes.is_empty(), "at least one plane");
        EncoderConfig {
            k,
            planes,
            has_bullet_bit: false,
            agent_steps_per_cell: 1,
        }
    }

    pub fn with_bullet_bit(mut self) -> EncoderConfig {
        self.has_bullet_bit = true;
        self
    }

    pub fn plane_width(&self) -> usize {
        (2 * self.k + 1) as usize
    }

    pub fn total_bits(&self) -> usize {
        self.planes.len() * self.plane_width() + 2 + usize::from(self.has_bullet_bit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedState {
    /// One vector per plane, indexed by offset −k..+k (index 0 is −k).
    pub orientation_bits: Vec<Vec<bool>>,
    /// (at_left, at_right)
    pub boundary_bits: (bool, bool),
    pub bullet_bit: Option<bool>,
}

/// Whether an object of `category` belongs on `plane`. Unresolved objects
/// are treated as threats rather than ignored.
fn on_plane(plane: Category, category: Category) -> bool {
    match plane {
        Category::MovingBad => matches!(category, Category::MovingBad | Category::Unknown),
        _ => category == plane,
    }
}

/// Smallest t ≥ 0 at which the object's row span intersects the agent's,
/// searched only up to `limit` since later arrivals can't set the bit.
fn arrival_time(agent: &ObservedObject, obj: &ObservedObject, limit: i64) -> Option<i64> {
    let ay0 = agent.y as i64;
    let ay1 = ay0 + agent.h as i64 - 1;
    (0..=limit).find(|&t| {
        let oy0 = obj.y as i64 + obj.vy as i64 * t;
        let oy1 = oy0 + obj.h as i64 - 1;
        oy1 >= ay0 && oy0 <= ay1
    })
}

pub fn encode(
    cfg: &EncoderConfig,
    agent: &ObservedObject,
    grid_width: u32,
    objects: &[(Category, ObservedObject)],
) -> EncodedState {
    let k = cfg.k as i64;
    let steps = cfg.agent_steps_per_cell as i64;
    let mut orientation_bits = Vec::with_capacity(cfg.planes.len());
    for &plane in &cfg.planes {
        let mut bits = vec![false; cfg.plane_width()];
        for (slot, offset) in (-k..=k).enumerate() {
            let threshold = offset.abs() * steps + SLACK;
            let target = agent.x as i64 + offset;
            bits[slot] = objects.iter().any(|&(category, obj)| {
                if !on_plane(plane, category) {
                    return false;
                }
                match arrival_time(agent, &obj, threshold) {
                    Some(t) => {
                        let x0 = obj.x as i64 + obj.vx as i64 * t;
                        let x1 = x0 + obj.w as i64 - 1;
                        x0 <= target && target <= x1
                    }
                    None => false,
                }
            });
        }
        orientation_bits.push(bits);
    }
    let at_left = agent.x == 0;
    let at_right = agent.x + agent.w as i32 == grid_width as i32;
    let bullet_bit = cfg
        .has_bullet_bit
        .then(|| objects.iter().any(|&(c, _)| c == Category::AgentObject));
    EncodedState {
        orientation_bits,
        boundary_bits: (at_left, at_right),
        bullet_bit,
    }
}

/// Packs the bits into an integer key: plane-major, offsets ascending from
/// −k (least significant), then left boundary, right boundary, bullet.
pub fn state_key(es: &EncodedState) -> u64 {
    let mut key = 0u64;
    let mut slot = 0;
    let mut push = |bit: bool| {
        assert!(slot < 64, "state wider than a key");
        if bit {
            key |= 1 << slot;
        }
        slot += 1;
    };
    for plane in &es.orientation_bits {
        for &bit in plane {
            push(bit);
        }
    }
    push(es.boundary_bits.0);
    push(es.boundary_bits.1);
    if let Some(bullet) = es.bullet_bit {
        push(bullet);
    }
    key
}

/// Inverse of `state_key` for a given config shape.
pub fn unpack_key(cfg: &EncoderConfig, key: u64) -> EncodedState {
    let mut slot = 0;
    let mut pull = || {
        let bit = key >> slot & 1 == 1;
        slot += 1;
        bit
    };
    let orientation_bits = (0..cfg.planes.len())
        .map(|_| (0..cfg.plane_width()).map(|_| pull()).collect())
        .collect();
    let boundary_bits = (pull(), pull());
    let bullet_bit = cfg.has_bullet_bit.then(&mut pull);
    EncodedState {
        orientation_bits,
        boundary_bits,
        bullet_bit,
    }
}

/// The window sizes each built-in game trains with. Roadrash only has four
/// lanes so a narrow window covers the whole road; SpaceInvaders needs the
/// bullet bit to learn not to mash fire.
pub fn builtin_config(game: crate::gamespec::BuiltinGame) -> EncoderConfig {
    use crate::gamespec::BuiltinGame::*;
    match game {
        MyAliensV1 => EncoderConfig::new(4, vec![Category::MovingBad]),
        MyAliensV2 => EncoderConfig::new(4, vec![Category::MovingBad, Category::MovingGood]),
        Roadrash => EncoderConfig::new(2, vec![Category::MovingBad]),
        SpaceInvaders => EncoderConfig::new(4, vec![Category::MovingBad]).with_bullet_bit(),
    }
}
