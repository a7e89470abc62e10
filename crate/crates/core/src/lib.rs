//! Grid-game testbed: a small spec-driven game engine plus the learning
//! stack that plays it from object observations alone.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`gamespec`] defines games as data and derives appearance/layout
//!    variants from them.
//! 2. [`engine`] steps a spec deterministically and exposes object
//!    observations and rendered frames.
//! 3. [`agent_id`] finds which observed object is the player and what the
//!    keys do, [`perception`] sorts the remaining objects into behavior
//!    categories, and [`encoder`] compresses a frame into a few bits.
//! 4. [`qlearner`] trains a tabular policy on those bits; [`dqn`] is the
//!    pixel baseline it is compared against.
//! 5. [`experiment`] runs the full train/eval grid and writes result
//!    tables.

pub mod agent_id;
pub mod dqn;
pub mod encoder;
pub mod engine;
pub mod experiment;
pub mod gamespec;
pub mod perception;
pub mod pipeline;
pub mod qlearner;
pub mod rng;

pub use engine::{Env, Session};
pub use experiment::{Algorithm, ExperimentConfig, RunRecord};
pub use gamespec::{builtin_spec, BuiltinGame, GameSpec, VariantTag};
