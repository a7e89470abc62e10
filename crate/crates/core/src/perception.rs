//! Appearance-keyed category learning.
//!
//! Objects are known only by their appearance signature (color + size).
//! Watching how instances of a signature move, what touching them does to
//! the score, and whether they pop out of the agent right after a fire
//! press is enough to sort them into a handful of behavior categories.
//! Once a signature resolves, classification is a map lookup and the
//! assignment never changes for the rest of the run.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::ObservedObject;
use crate::gamespec::Color;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    pub color: Color,
    pub size: (u32, u32),
}

impl Signature {
    pub fn of(obj: &ObservedObject) -> Signature {
        Signature {
            color: obj.color,
            size: (obj.w, obj.h),
        }
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{},{},{} {}x{}",
            self.color.0, self.color.1, self.color.2, self.size.0, self.size.1
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Agent,
    Static,
    MovingGood,
    MovingBad,
    AgentObject,
    Unknown,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Agent => "agent",
            Category::Static => "static",
            Category::MovingGood => "moving_good",
            Category::MovingBad => "moving_bad",
            Category::AgentObject => "agent_object",
            Category::Unknown => "unknown",
        }
    }

    fn from_str(s: &str) -> Option<Category> {
        Some(match s {
            "agent" => Category::Agent,
            "static" => Category::Static,
            "moving_good" => Category::MovingGood,
            "moving_bad" => Category::MovingBad,
            "agent_object" => Category::AgentObject,
            "unknown" => Category::Unknown,
            _ => return None,
        })
    }
}

/// Per-signature counters. `moved` and `stayed` count frames (a frame in
/// which any instance of the signature moved counts as moved), the contact
/// counters count reward-signed agent contacts, and `spawned_by_agent`
/// counts fire presses that produced an adjacent newcomer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Evidence {
    pub moved: u32,
    pub stayed: u32,
    pub positive: u32,
    pub negative: u32,
    pub spawned_by_agent: u32,
}

/// Frame-to-frame object correspondence by greedy nearest neighbor, only
/// ever matching equal signatures.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrackedObjects {
    /// handle in prev frame → handle in cur frame.
    pub correspondences: BTreeMap<u64, u64>,
    pub entered: Vec<u64>,
    pub exited: Vec<u64>,
}

/// Greedy nearest-neighbor matching under the equal-signature constraint.
/// Pairs are taken cheapest Manhattan distance first; ties break on the
/// lower prev handle, then the lower cur handle, so the result is a pure
/// function of the two lists.
pub fn track(prev: &[ObservedObject], cur: &[ObservedObject]) -> TrackedObjects {
    let mut candidates = Vec::new();
    for (pi, p) in prev.iter().enumerate() {
        for (ci, c) in cur.iter().enumerate() {
            if Signature::of(p) != Signature::of(c) {
                continue;
            }
            let dist = (p.x - c.x).abs() + (p.y - c.y).abs();
            candidates.push((dist, p.handle, c.handle, pi, ci));
        }
    }
    candidates.sort_by_key(|&(dist, ph, ch, _, _)| (dist, ph, ch));

    let mut out = TrackedObjects::default();
    let mut prev_used = vec![false; prev.len()];
    let mut cur_used = vec![false; cur.len()];
    for (_, ph, ch, pi, ci) in candidates {
        if prev_used[pi] || cur_used[ci] {
            continue;
        }
        prev_used[pi] = true;
        cur_used[ci] = true;
        out.correspondences.insert(ph, ch);
    }
    for (pi, p) in prev.iter().enumerate() {
        if !prev_used[pi] {
            out.exited.push(p.handle);
        }
    }
    for (ci, c) in cur.iter().enumerate() {
        if !cur_used[ci] {
            out.entered.push(c.handle);
        }
    }
    out
}

/// Everything the model can learn from in one environment step.
pub struct StepEvidence<'a> {
    pub prev: &'a [ObservedObject],
    pub cur: &'a [ObservedObject],
    pub tracked: &'a TrackedObjects,
    /// Contact pairs this step, as handles.
    pub contacts: &'a [(u64, u64)],
    /// Total step reward; attributed to agent-involving contacts.
    pub reward: i64,
    pub agent_died: bool,
    /// Whether the action taken this step was the discovered fire key.
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryModel {
    agent: Signature,
    assignments: BTreeMap<Signature, Category>,
    evidence: BTreeMap<Signature, Evidence>,
    warned: BTreeSet<Signature>,
    warnings: Vec<String>,
    /// Stationary frames required before a signature resolves Static.
    pub static_threshold: u32,
}

impl CategoryModel {
    pub fn new(agent: Signature) -> CategoryModel {
        CategoryModel {
            agent,
            assignments: BTreeMap::new(),
            evidence: BTreeMap::new(),
            warned: BTreeSet::new(),
            warnings: Vec::new(),
            static_threshold: 10,
        }
    }

    pub fn agent_signature(&self) -> Signature {
        self.agent
    }

    /// Constant-time category lookup; Unknown until resolved.
    pub fn classify(&self, sig: &Signature) -> Category {
        if *sig == self.agent {
            return Category::Agent;
        }
        self.assignments.get(sig).copied().unwrap_or(Category::Unknown)
    }

    pub fn assignments(&self) -> &BTreeMap<Signature, Category> {
        &self.assignments
    }

    pub fn evidence(&self, sig: &Signature) -> Evidence {
        self.evidence.get(sig).copied().unwrap_or_default()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Folds one step of observations into the evidence counters and
    /// resolves any signature whose evidence now suffices. Resolved
    /// assignments are never overwritten, so classification is stable.
    pub fn observe_step(&mut self, ev: &StepEvidence<'_>) {
        let mut touched = BTreeSet::new();

        let sig_of_handle = |handle: u64| -> Option<Signature> {
            ev.cur
                .iter()
                .chain(ev.prev.iter())
                .find(|o| o.handle == handle)
                .map(Signature::of)
        };

        let mut frame_motion: BTreeMap<Signature, bool> = BTreeMap::new();
        for (&ph, &ch) in &ev.tracked.correspondences {
            let p = ev.prev.iter().find(|o| o.handle == ph).expect("tracked");
            let c = ev.cur.iter().find(|o| o.handle == ch).expect("tracked");
            let sig = Signature::of(p);
            if sig == self.agent {
                continue;
            }
            *frame_motion.entry(sig).or_insert(false) |= p.x != c.x || p.y != c.y;
        }
        for (sig, any_moved) in frame_motion {
            let e = self.evidence.entry(sig).or_default();
            if any_moved {
                e.moved += 1;
            } else {
                e.stayed += 1;
            }
            touched.insert(sig);
        }

        // Contact evidence counts only for contacts the agent is part of;
        // the step reward is what touching cost or earned.
        let agent_prev = ev.prev.iter().find(|o| Signature::of(o) == self.agent);
        if let Some(agent) = agent_prev {
            for &(a, b) in ev.contacts {
                let other = if a == agent.handle {
                    b
                } else if b == agent.handle {
                    a
                } else {
                    continue;
                };
                let Some(sig) = sig_of_handle(other) else {
                    continue;
                };
                if sig == self.agent {
                    continue;
                }
                let e = self.evidence.entry(sig).or_default();
                if ev.reward > 0 {
                    e.positive += 1;
                }
                if ev.reward < 0 || ev.agent_died {
                    e.negative += 1;
                }
                touched.insert(sig);
            }
        }

        if ev.fired {
            if let Some(agent_cur) = ev.cur.iter().find(|o| Signature::of(o) == self.agent) {
                for &handle in &ev.tracked.entered {
                    let obj = ev.cur.iter().find(|o| o.handle == handle).expect("entered");
                    let sig = Signature::of(obj);
                    if sig == self.agent {
                        continue;
                    }
                    if box_chebyshev(obj, agent_cur) <= 1 {
                        self.evidence.entry(sig).or_default().spawned_by_agent += 1;
                        touched.insert(sig);
                    }
                }
            }
        }

        for sig in touched {
            self.resolve(sig);
        }
    }

    fn resolve(&mut self, sig: Signature) {
        let e = self.evidence(&sig);
        if let Some(&assigned) = self.assignments.get(&sig) {
            self.check_contradiction(sig, assigned, e);
            return;
        }
        let category = if e.spawned_by_agent >= 1 {
            Some(Category::AgentObject)
        } else if e.moved >= 1 && (e.positive >= 1 || e.negative >= 1) {
            if e.positive >= 1 && e.negative >= 1 {
                // Both kinds of contact seen before first resolution:
                // majority decides, a tie stays on the threat side.
                let majority = if e.positive > e.negative {
                    Category::MovingGood
                } else {
                    Category::MovingBad
                };
                self.warn(
                    sig,
                    format!(
                        "{sig}: contradictory contact evidence (+{} / -{}), resolved {} by majority",
                        e.positive,
                        e.negative,
                        majority.as_str()
                    ),
                );
                Some(majority)
            } else if e.positive >= 1 {
                Some(Category::MovingGood)
            } else {
                Some(Category::MovingBad)
            }
        } else if e.moved == 0 && e.stayed >= self.static_threshold {
            Some(Category::Static)
        } else {
            None
        };
        if let Some(category) = category {
            self.assignments.insert(sig, category);
        }
    }

    fn check_contradiction(&mut self, sig: Signature, assigned: Category, e: Evidence) {
        let contradicted = match assigned {
            Category::Static => e.moved > 0,
            Category::MovingGood => e.negative > 0,
            Category::MovingBad => e.positive > 0,
            _ => false,
        };
        if contradicted {
            self.warn(
                sig,
                format!(
                    "{sig}: evidence contradicts resolved category {} \
                     (moved={} stayed={} +{} -{}); keeping the assignment",
                    assigned.as_str(),
                    e.moved,
                    e.stayed,
                    e.positive,
                    e.negative
                ),
            );
        }
    }

    fn warn(&mut self, sig: Signature, msg: String) {
        if self.warned.insert(sig) {
            self.warnings.push(msg);
        }
    }

    /// Text table, one signature per line, for inspection and for carrying
    /// a trained model to a variant evaluation.
    pub fn export(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "# signature(color w,h) category evidence");
        let _ = writeln!(out, "# moved stayed positive negative spawned");
        let _ = writeln!(out, "static_threshold {}", self.static_threshold);
        let mut sigs: BTreeSet<Signature> = self.evidence.keys().copied().collect();
        sigs.extend(self.assignments.keys().copied());
        sigs.insert(self.agent);
        for sig in sigs {
            let cat = self.classify(&sig);
            let e = self.evidence(&sig);
            let _ = writeln!(
                out,
                "{},{},{} {},{} {} {} {} {} {} {}",
                sig.color.0,
                sig.color.1,
                sig.color.2,
                sig.size.0,
                sig.size.1,
                cat.as_str(),
                e.moved,
                e.stayed,
                e.positive,
                e.negative,
                e.spawned_by_agent
            );
        }
        out
    }

    pub fn import(text: &str) -> Result<CategoryModel, String> {
        let mut agent = None;
        let mut static_threshold = 10u32;
        let mut assignments = BTreeMap::new();
        let mut evidence = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "static_threshold" {
                static_threshold = fields
                    .get(1)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| format!("line {}: bad static_threshold", no + 1))?;
                continue;
            }
            if fields.len() != 8 {
                return Err(format!("line {}: expected 8 fields", no + 1));
            }
            let bad = || format!("line {}: malformed signature line", no + 1);
            let color: Vec<u8> = fields[0]
                .split(',')
                .map(|v| v.parse::<u8>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            let size: Vec<u32> = fields[1]
                .split(',')
                .map(|v| v.parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            if color.len() != 3 || size.len() != 2 {
                return Err(bad());
            }
            let sig = Signature {
                color: (color[0], color[1], color[2]),
                size: (size[0], size[1]),
            };
            let cat = Category::from_str(fields[2]).ok_or_else(bad)?;
            let nums: Vec<u32> = fields[3..8]
                .iter()
                .map(|v| v.parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            let ev = Evidence {
                moved: nums[0],
                stayed: nums[1],
                positive: nums[2],
                negative: nums[3],
                spawned_by_agent: nums[4],
            };
            if ev != Evidence::default() {
                evidence.insert(sig, ev);
            }
            match cat {
                Category::Agent => agent = Some(sig),
                Category::Unknown => {}
                other => {
                    assignments.insert(sig, other);
                }
            }
        }
        let agent = agent.ok_or("no agent line in model")?;
        Ok(CategoryModel {
            agent,
            assignments,
            evidence,
            warned: BTreeSet::new(),
            warnings: Vec::new(),
            static_threshold,
        })
    }
}

/// Chebyshev distance between two bounding boxes in cells: 0 when they
/// overlap, 1 when they touch (diagonals included).
pub(crate) fn box_chebyshev(a: &ObservedObject, b: &ObservedObject) -> i32 {
    let gap = |a0: i32, a1: i32, b0: i32, b1: i32| -> i32 { (b0 - a1).max(a0 - b1).max(0) };
    let dx = gap(a.x, a.x + a.w as i32 - 1, b.x, b.x + b.w as i32 - 1);
    let dy = gap(a.y, a.y + a.h as i32 - 1, b.y, b.y + b.h as i32 - 1);
    dx.max(dy)
}
