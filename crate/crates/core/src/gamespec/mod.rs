//! Game definitions and the text format they are written in.
//!
//! A [`GameSpec`] is the single source of truth for one game: grid size,
//! object classes with their on-screen appearance, dynamics rules, reward
//! rules, termination conditions, level layouts, and the appearance-variant
//! hooks used by the generalization experiments. Specs round-trip through a
//! line-oriented text format (see `docs/gamespec.md`); [`serialize`] emits a
//! canonical form and `parse(serialize(s)) == s` holds for every valid spec.

mod builtin;
mod parse;
mod variant;

pub use builtin::{builtin_names, builtin_spec, BuiltinGame};
pub use parse::{parse, serialize};
pub use variant::{apply_variant, variant_applicable, VariantTag};

use std::collections::BTreeMap;

/// RGB color of a class, also its primary appearance feature.
pub type Color = (u8, u8, u8);

/// Width and height of a class bounding box, in grid cells.
pub type Size = (u32, u32);

/// One object class: identity plus appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectClassDef {
    pub id: String,
    pub color: Color,
    pub size: Size,
    /// Sprite drawn when the spec uses the `sprites` renderer. Ignored by
    /// `flat_rect`, but kept so image substitutions stay representable.
    pub sprite: String,
}

/// What a key does inside the engine. The pipeline never reads this; it
/// rediscovers the mapping from observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionSem {
    MoveLeft,
    MoveRight,
    MoveUp,
    MoveDown,
    Fire,
    Noop,
}

impl ActionSem {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionSem::MoveLeft => "move_left",
            ActionSem::MoveRight => "move_right",
            ActionSem::MoveUp => "move_up",
            ActionSem::MoveDown => "move_down",
            ActionSem::Fire => "fire",
            ActionSem::Noop => "noop",
        }
    }
}

/// A key the player can press: a display label plus engine semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDef {
    pub label: String,
    pub semantic: ActionSem,
}

/// What happens when a moving object would leave the grid horizontally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Clamp,
    Wrap,
}

/// Vertical travel direction for projectile-style motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallDir {
    Down,
    Up,
}

/// Player-spawned projectile wiring on a `control` rule.
#[derive(Debug, Clone, PartialEq)]
pub struct FireSpec {
    pub child: String,
    pub speed: u32,
    /// Maximum simultaneously live projectiles; extra fire presses are inert.
    pub limit: u32,
}

/// One dynamics rule. Rules execute every step in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsRule {
    /// Marks the player-controlled class and wires up its movement keys.
    Control {
        class: String,
        speed: u32,
        boundary: Boundary,
        fire: Option<FireSpec>,
    },
    /// Straight vertical motion; objects despawn on leaving the grid.
    Fall { class: String, speed: u32, dir: FallDir },
    /// Block-wise horizontal march that reverses at the grid edge and drops
    /// one row per reversal until the block floor is reached.
    March {
        class: String,
        step: u32,
        period: u32,
        drop: u32,
        floor: i32,
    },
    /// Lane traffic: existing objects advance down their lane, new ones
    /// enter at the top of a uniformly drawn free lane.
    Lane {
        class: String,
        speed: u32,
        rate: f64,
        prefill: u32,
    },
    /// Bernoulli spawning of `child`, either at every placed `from` object
    /// or (without `from`) at a uniformly drawn top-row column.
    Spawn {
        from: Option<String>,
        child: String,
        rate: f64,
    },
    /// Periodic aimed fire: every `cadence` steps the live instance of
    /// `class` nearest the player column emits one `child` below itself.
    Shoot {
        class: String,
        child: String,
        cadence: u32,
    },
}

impl DynamicsRule {
    /// Class whose instances this rule moves or spawns from.
    pub fn class(&self) -> &str {
        match self {
            DynamicsRule::Control { class, .. }
            | DynamicsRule::Fall { class, .. }
            | DynamicsRule::March { class, .. }
            | DynamicsRule::Lane { class, .. }
            | DynamicsRule::Shoot { class, .. } => class,
            DynamicsRule::Spawn { from, child, .. } => from.as_deref().unwrap_or(child),
        }
    }
}

/// Which contact participants despawn after the rule fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Despawn {
    None,
    First,
    Second,
    Both,
}

/// One reward rule.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardRule {
    /// Bounding-box contact between an `a` instance and a `b` instance.
    Contact {
        a: String,
        b: String,
        reward: i64,
        despawn: Despawn,
        lose: bool,
    },
    /// Credited every step the episode is still running afterwards.
    StepSurvived { reward: i64 },
    /// Credited once whenever a level is won.
    LevelWin { reward: i64 },
}

/// Win condition checked after contacts resolve.
#[derive(Debug, Clone, PartialEq)]
pub enum WinCondition {
    /// Only the timeout can end the level in the player's favor.
    None,
    /// Player has collected `count` objects of `class` this level.
    Collected { class: String, count: u32 },
    /// No live instances of `class` remain.
    Cleared { class: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeoutOutcome {
    Win,
    Lose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminationDef {
    /// Steps per level; reaching it resolves via `on_timeout`.
    pub timeout: u32,
    pub on_timeout: TimeoutOutcome,
    /// Extra reward applied when the timeout resolves the level.
    pub timeout_reward: i64,
    pub win: WinCondition,
}

/// Initial placement of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub class: String,
    pub x: i32,
    pub y: i32,
}

/// One level: placements plus per-level overrides for rule parameters
/// (keys documented in `docs/gamespec.md`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LevelDef {
    pub params: BTreeMap<String, f64>,
    pub placements: Vec<Placement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Renderer {
    FlatRect,
    Sprites,
}

/// Position-variant declaration: which classes get re-placed and how many.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionHook {
    pub classes: Vec<String>,
    pub fraction: f64,
}

/// One color/size substitution for a non-player class.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorSizeSub {
    pub class: String,
    pub color: Option<Color>,
    pub size: Option<Size>,
}

/// One sprite substitution, keyed by the sprite currently in use.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSub {
    pub from_sprite: String,
    pub to_sprite: String,
}

/// Variant hooks shipped inside a spec: the named presets the harness uses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VariantHooks {
    pub position: Option<PositionHook>,
    pub colorsize: Vec<ColorSizeSub>,
    pub image: Vec<ImageSub>,
}

/// A full game definition.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub name: String,
    pub renderer: Renderer,
    /// Highest score a perfect run can reach; normalization denominator.
    pub max_score: i64,
    pub grid_width: i32,
    pub grid_height: i32,
    pub actions: Vec<ActionDef>,
    pub classes: Vec<ObjectClassDef>,
    pub dynamics: Vec<DynamicsRule>,
    pub rewards: Vec<RewardRule>,
    pub termination: TerminationDef,
    pub levels: Vec<LevelDef>,
    pub variants: VariantHooks,
}

impl GameSpec {
    pub fn class(&self, id: &str) -> Option<&ObjectClassDef> {
        self.classes.iter().find(|c| c.id == id)
    }

    /// The unique class named by the `control` rule.
    pub fn player_class(&self) -> &str {
        self.dynamics
            .iter()
            .find_map(|r| match r {
                DynamicsRule::Control { class, .. } => Some(class.as_str()),
                _ => None,
            })
            .expect("validated spec has a control rule")
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Per-level override with fallback to the rule's declared value.
    pub fn level_param(&self, level: usize, key: &str, default: f64) -> f64 {
        self.levels
            .get(level)
            .and_then(|l| l.params.get(key).copied())
            .unwrap_or(default)
    }

    /// Checks every cross-reference and value-range invariant.
    ///
    /// Returns the violated invariant by name so callers can surface it
    /// verbatim; `parse` runs this on every successful parse.
    pub fn validate(&self) -> Result<(), SpecError> {
        let semantic = |msg: String| Err(SpecError::Semantic { msg });
        if self.grid_width < 1 || self.grid_height < 1 {
            return semantic(format!(
                "grid dimensions must be at least 1x1, got {}x{}",
                self.grid_width, self.grid_height
            ));
        }
        if self.max_score <= 0 {
            return semantic(format!("max_score must be positive, got {}", self.max_score));
        }
        if self.name.is_empty() {
            return semantic("game name must not be empty".into());
        }
        if self.actions.is_empty() {
            return semantic("at least one action must be declared".into());
        }
        for (i, a) in self.actions.iter().enumerate() {
            if self.actions[..i].iter().any(|b| b.label == a.label) {
                return semantic(format!("duplicate action label `{}`", a.label));
            }
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].iter().any(|d| d.id == c.id) {
                return semantic(format!("duplicate class `{}`", c.id));
            }
            if c.size.0 == 0 || c.size.1 == 0 {
                return semantic(format!("class `{}` has a zero-area size", c.id));
            }
        }
        let declared = |id: &str| self.classes.iter().any(|c| c.id == id);
        let check = |id: &str, ctx: &str| -> Result<(), SpecError> {
            if declared(id) {
                Ok(())
            } else {
                Err(SpecError::Semantic {
                    msg: format!("{ctx} references undeclared class `{id}`"),
                })
            }
        };

        let mut controls = 0usize;
        for rule in &self.dynamics {
            match rule {
                DynamicsRule::Control { class, speed, boundary, fire } => {
                    controls += 1;
                    check(class, "control rule")?;
                    if *speed == 0 {
                        return semantic("control speed must be at least 1".into());
                    }
                    if *boundary == Boundary::Wrap {
                        let w = self.classes.iter().find(|c| &c.id == class).map(|c| c.size.0);
                        if w != Some(1) {
                            return semantic(
                                "wrap boundary requires a width-1 player class".into(),
                            );
                        }
                    }
                    if let Some(f) = fire {
                        check(&f.child, "control fire")?;
                        if f.speed == 0 || f.limit == 0 {
                            return semantic("fire speed and limit must be at least 1".into());
                        }
                    }
                }
                DynamicsRule::Fall { class, speed, .. } => {
                    check(class, "fall rule")?;
                    if *speed == 0 {
                        return semantic("fall speed must be at least 1".into());
                    }
                }
                DynamicsRule::March { class, step, period, floor, .. } => {
                    check(class, "march rule")?;
                    if *step == 0 || *period == 0 {
                        return semantic("march step and period must be at least 1".into());
                    }
                    if *floor < 0 || *floor >= self.grid_height {
                        return semantic(format!("march floor {floor} outside grid rows"));
                    }
                }
                DynamicsRule::Lane { class, speed, rate, .. } => {
                    check(class, "lane rule")?;
                    if *speed == 0 {
                        return semantic("lane speed must be at least 1".into());
                    }
                    if !(0.0..=1.0).contains(rate) {
                        return semantic(format!("lane rate {rate} outside [0, 1]"));
                    }
                }
                DynamicsRule::Spawn { from, child, rate } => {
                    if let Some(f) = from {
                        check(f, "spawn rule")?;
                    }
                    check(child, "spawn rule")?;
                    if !(0.0..=1.0).contains(rate) {
                        return semantic(format!("spawn rate {rate} outside [0, 1]"));
                    }
                }
                DynamicsRule::Shoot { class, child, cadence } => {
                    check(class, "shoot rule")?;
                    check(child, "shoot rule")?;
                    if *cadence == 0 {
                        return semantic("shoot cadence must be at least 1".into());
                    }
                }
            }
        }
        if controls != 1 {
            return semantic(format!(
                "exactly one player_controlled class required, found {controls} control rules"
            ));
        }

        for rule in &self.rewards {
            if let RewardRule::Contact { a, b, .. } = rule {
                check(a, "contact rule")?;
                check(b, "contact rule")?;
            }
        }

        if self.termination.timeout == 0 {
            return semantic("timeout must be positive when declared".into());
        }
        match &self.termination.win {
            WinCondition::None => {}
            WinCondition::Collected { class, count } => {
                check(class, "win condition")?;
                if *count == 0 {
                    return semantic("collected win count must be at least 1".into());
                }
            }
            WinCondition::Cleared { class } => check(class, "win condition")?,
        }

        if self.levels.is_empty() {
            return semantic("at least one level must be defined".into());
        }
        let player = self
            .dynamics
            .iter()
            .find_map(|r| match r {
                DynamicsRule::Control { class, .. } => Some(class.clone()),
                _ => None,
            })
            .unwrap();
        for (i, level) in self.levels.iter().enumerate() {
            let mut players = 0usize;
            for p in &level.placements {
                check(&p.class, "placement")?;
                let c = self.class(&p.class).unwrap();
                let (w, h) = (c.size.0 as i32, c.size.1 as i32);
                if p.x < 0 || p.y < 0 || p.x + w > self.grid_width || p.y + h > self.grid_height {
                    return semantic(format!(
                        "level {} places `{}` at ({}, {}) outside the {}x{} grid",
                        i + 1,
                        p.class,
                        p.x,
                        p.y,
                        self.grid_width,
                        self.grid_height
                    ));
                }
                if p.class == player {
                    players += 1;
                }
            }
            if players != 1 {
                return semantic(format!(
                    "level {} must place the player exactly once, found {players}",
                    i + 1
                ));
            }
        }

        if let Some(hook) = &self.variants.position {
            for c in &hook.classes {
                check(c, "mod_position hook")?;
            }
            if !(0.0..=1.0).contains(&hook.fraction) {
                return semantic(format!(
                    "mod_position fraction {} outside [0, 1]",
                    hook.fraction
                ));
            }
        }
        for sub in &self.variants.colorsize {
            check(&sub.class, "mod_colorsize hook")?;
            if sub.class == player {
                return semantic("mod_colorsize must not alter the player class".into());
            }
            if sub.color.is_none() && sub.size.is_none() {
                return semantic(format!(
                    "mod_colorsize entry for `{}` changes nothing",
                    sub.class
                ));
            }
            if let Some((w, h)) = sub.size {
                if w == 0 || h == 0 {
                    return semantic("mod_colorsize size must be non-zero".into());
                }
            }
        }
        for sub in &self.variants.image {
            if !self.classes.iter().any(|c| c.sprite == sub.from_sprite) {
                return semantic(format!(
                    "mod_image entry for unused sprite `{}`",
                    sub.from_sprite
                ));
            }
        }
        Ok(())
    }
}

/// Errors raised while reading or validating spec text.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("invalid spec: {msg}")]
    Semantic { msg: String },
}

/// Errors raised when deriving a variant spec.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VariantError {
    #[error("{kind} is not applicable to `{game}`: {reason}")]
    NotApplicable {
        game: String,
        kind: VariantTag,
        reason: String,
    },
    #[error(transparent)]
    Spec(#[from] SpecError),
}
