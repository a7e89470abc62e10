//! Episode driver: presents a multi-level game as one continuous
//! environment for the learning stack.

use std::sync::Arc;

use super::{advance_level, observe, render, reset, step, Event};
use super::{ObservedObject, PixelFrame, Status, WorldState};
use crate::gamespec::GameSpec;

/// What a learner gets back from one environment step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub reward: i64,
    pub terminal: bool,
    /// Contact pairs this step, as observation handles.
    pub contacts: Vec<(u64, u64)>,
    pub agent_died: bool,
    /// True when a level was won and the episode continued into the next.
    pub level_advanced: bool,
}

/// The surface learners are written against. Scores are cumulative over the
/// whole episode, levels included.
pub trait Env {
    fn action_count(&self) -> usize;
    fn grid_size(&self) -> (u32, u32);
    fn reset(&mut self, seed: u64);
    /// Panics if called on a terminal episode; callers gate on `running`.
    fn step(&mut self, action: usize) -> Transition;
    fn observe(&self) -> Vec<ObservedObject>;
    fn running(&self) -> bool;
    fn score(&self) -> i64;
}

/// Runs a spec level by level. A level win mid-episode is a normal
/// (non-terminal) transition; the next observation is the fresh level.
pub struct Session {
    spec: Arc<GameSpec>,
    world: WorldState,
}

impl Session {
    pub fn new(spec: Arc<GameSpec>, seed: u64) -> Session {
        let world = reset(&spec, 0, seed).expect("level 0 exists");
        Session { spec, world }
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn status(&self) -> Status {
        self.world.status
    }

    pub fn level(&self) -> usize {
        self.world.level_index
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn render_frame(&self, cell_px: u32) -> PixelFrame {
        render(&self.spec, &self.world, cell_px)
    }
}

impl Env for Session {
    fn action_count(&self) -> usize {
        self.spec.actions.len()
    }

    fn grid_size(&self) -> (u32, u32) {
        (self.spec.grid_width as u32, self.spec.grid_height as u32)
    }

    fn reset(&mut self, seed: u64) {
        self.world = reset(&self.spec, 0, seed).expect("level 0 exists");
    }

    fn step(&mut self, action: usize) -> Transition {
        let outcome = step(&self.spec, &mut self.world, action).expect("running episode");
        let contacts = outcome
            .events
            .iter()
            .filter_map(|e| match e {
                Event::Contact { a, b } => Some((*a, *b)),
                _ => None,
            })
            .collect();
        let agent_died = outcome.status == Status::Lost;
        let mut level_advanced = false;
        let terminal = match outcome.status {
            Status::Running => false,
            Status::Lost => true,
            Status::Won => {
                let next = self.world.level_index + 1;
                if next < self.spec.levels.len() {
                    self.world = advance_level(&self.spec, &self.world, next)
                        .expect("next level exists");
                    level_advanced = true;
                    false
                } else {
                    true
                }
            }
        };
        Transition {
            reward: outcome.reward,
            terminal,
            contacts,
            agent_died,
            level_advanced,
        }
    }

    fn observe(&self) -> Vec<ObservedObject> {
        observe(&self.spec, &self.world)
    }

    fn running(&self) -> bool {
        self.world.status == Status::Running
    }

    fn score(&self) -> i64 {
        self.world.score
    }
}
