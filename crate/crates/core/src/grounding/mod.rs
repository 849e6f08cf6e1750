//! Verify-before-commit: resolve every hypothesis of a planned graph
//! against the world model, repairing the walk where the world disagrees.

mod memory;
mod toolkit;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::planner::hypothesize;
use crate::stg::{is_grounded, Hypothesis, HypothesisKind, Stg, Subtask, WalkStep};
use crate::world::{shortest_path, WorldError, WorldModel};

pub use memory::{MemoryKey, PersistError, SpatialMemory};
pub(crate) use memory::{read_file, write_file};
pub use toolkit::{
    doors_verify, facility_exists, path_traversable, replay, resolve_ambiguity, Evidence,
    Resolution, ToolCall, TraversalVerdict,
};

pub const DEFAULT_MAX_REPAIRS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TraceOutcome {
    Verified,
    Refuted { reason: String },
    /// The exit in the walk was replaced by `via`.
    Rerouted { via: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub hypothesis: String,
    pub kind: String,
    pub calls: u32,
    pub hits: u32,
    #[serde(flatten)]
    pub outcome: TraceOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationTrace {
    pub entries: Vec<TraceEntry>,
    /// Toolkit invocations not served from memory.
    pub total_rounds: u32,
    pub repairs: u32,
}

impl VerificationTrace {
    pub fn cache_hits(&self) -> u32 {
        self.entries.iter().map(|e| e.hits).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundFailure {
    /// First hypothesis that could not be resolved, if any.
    pub hypothesis: Option<String>,
    pub reason: String,
}

impl fmt::Display for GroundFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.hypothesis {
            Some(h) => write!(f, "grounding failed at {h}: {}", self.reason),
            None => write!(f, "grounding failed: {}", self.reason),
        }
    }
}

impl std::error::Error for GroundFailure {}

#[derive(Debug, Clone)]
pub struct GroundOutcome {
    pub result: Result<Stg, GroundFailure>,
    pub trace: VerificationTrace,
}

impl GroundOutcome {
    pub fn is_grounded(&self) -> bool {
        self.result.is_ok()
    }

    pub fn stg(&self) -> Option<&Stg> {
        self.result.as_ref().ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundOptions {
    pub max_repairs: usize,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions {
            max_repairs: DEFAULT_MAX_REPAIRS,
        }
    }
}

/// Picks one exit among several verified candidates. Returning `None`
/// falls back to the deterministic rule.
pub trait ExitChooser {
    fn choose(&mut self, toward: &str, candidates: &[String]) -> Option<String>;
}

pub fn ground(stg0: &Stg, world: &WorldModel, memory: &SpatialMemory) -> GroundOutcome {
    ground_with(stg0, world, memory, GroundOptions::default(), None)
}

pub fn ground_with(
    stg0: &Stg,
    world: &WorldModel,
    memory: &SpatialMemory,
    opts: GroundOptions,
    chooser: Option<&mut (dyn ExitChooser + '_)>,
) -> GroundOutcome {
    let mut run = Run {
        world,
        memory,
        trace: VerificationTrace::default(),
        chooser,
    };
    let result = run.ground(stg0, opts);
    GroundOutcome {
        result,
        trace: run.trace,
    }
}

struct Run<'a, 'c, 'd> {
    world: &'a WorldModel,
    memory: &'a SpatialMemory,
    trace: VerificationTrace,
    chooser: Option<&'c mut (dyn ExitChooser + 'd)>,
}

enum Step {
    Verified(Evidence),
    Refuted(String),
    /// Splice `nodes` over walk[lo..=hi]; `pin` marks a node to pin.
    Rewrite {
        lo: usize,
        hi: usize,
        nodes: Vec<String>,
        pin: Option<String>,
        refuted: Option<String>,
    },
}

fn fail(hypothesis: Option<&str>, reason: impl Into<String>) -> GroundFailure {
    GroundFailure {
        hypothesis: hypothesis.map(str::to_string),
        reason: reason.into(),
    }
}

fn world_fail(id: &str, e: WorldError) -> GroundFailure {
    fail(Some(id), e.to_string())
}

fn non_empty_list(v: &Value) -> bool {
    v.as_array().is_some_and(|a| !a.is_empty())
}

impl Run<'_, '_, '_> {
    fn ground(&mut self, stg0: &Stg, opts: GroundOptions) -> Result<Stg, GroundFailure> {
        if !stg0.sigma.is_empty() {
            return Err(fail(None, "input graph already carries directives"));
        }
        if !stg0.is_well_formed() {
            return Err(fail(None, "input graph is not well formed"));
        }
        self.memory.bind(self.world.digest());
        let mut stg = stg0.clone();
        let mut repairs = 0usize;

        while let Some(idx) = stg.hypotheses.iter().position(Hypothesis::is_unverified) {
            let h = stg.hypotheses[idx].clone();
            let mut entry = TraceEntry {
                hypothesis: h.id.clone(),
                kind: h.kind.label().to_string(),
                calls: 0,
                hits: 0,
                outcome: TraceOutcome::Verified,
            };
            let step = self.check(&h, &stg, &mut entry);
            let step = match step {
                Ok(s) => s,
                Err(e) => {
                    self.push(entry, TraceOutcome::Refuted { reason: e.to_string() });
                    return Err(world_fail(&h.id, e));
                }
            };
            match step {
                Step::Verified(ev) => {
                    stg.hypotheses[idx]
                        .verify(ev)
                        .expect("hypothesis was unverified");
                    self.push(entry, TraceOutcome::Verified);
                }
                Step::Refuted(reason) => {
                    stg.hypotheses[idx]
                        .refute(reason.clone())
                        .expect("hypothesis was unverified");
                    self.push(entry, TraceOutcome::Refuted { reason: reason.clone() });
                    return Err(fail(Some(&h.id), reason));
                }
                Step::Rewrite {
                    lo,
                    hi,
                    nodes,
                    pin,
                    refuted,
                } => {
                    match &refuted {
                        Some(reason) => {
                            self.push(entry, TraceOutcome::Refuted { reason: reason.clone() });
                            if repairs >= opts.max_repairs {
                                return Err(fail(
                                    Some(&h.id),
                                    format!("{reason}; repair budget of {} exhausted", opts.max_repairs),
                                ));
                            }
                            repairs += 1;
                            self.trace.repairs += 1;
                        }
                        None => self.push(
                            entry,
                            TraceOutcome::Rerouted {
                                via: pin.clone().unwrap_or_default(),
                            },
                        ),
                    }
                    splice(&mut stg, lo, hi, nodes, pin.as_deref());
                    rehypothesize(&mut stg, self.world);
                }
            }
        }

        if is_grounded(&stg, self.world) {
            Ok(stg)
        } else {
            let first = stg.hypotheses.iter().find(|h| !h.is_verified());
            Err(fail(first.map(|h| h.id.as_str()), "walk is not traversable"))
        }
    }

    fn push(&mut self, mut entry: TraceEntry, outcome: TraceOutcome) {
        entry.outcome = outcome;
        self.trace.total_rounds += entry.calls;
        self.trace.entries.push(entry);
    }

    fn ask(&self, call: ToolCall, entry: &mut TraceEntry) -> Result<Evidence, WorldError> {
        let (ev, hit) = self.memory.resolve(&call, self.world)?;
        if hit {
            entry.hits += 1;
        } else {
            entry.calls += 1;
        }
        Ok(ev)
    }

    fn check(&mut self, h: &Hypothesis, stg: &Stg, entry: &mut TraceEntry) -> Result<Step, WorldError> {
        Ok(match &h.kind {
            HypothesisKind::CoverageAvailable { node } => {
                let ev = self.ask(ToolCall::SensorsCovering { node: node.clone() }, entry)?;
                if non_empty_list(&ev.result) {
                    Step::Verified(ev)
                } else {
                    Step::Refuted(format!("no sensor covers {node}"))
                }
            }
            HypothesisKind::FacilityExists { scope, tag } => {
                let call = ToolCall::FacilityExists {
                    scope: scope.clone(),
                    tag: tag.clone(),
                };
                let ev = self.ask(call, entry)?;
                if non_empty_list(&ev.result) {
                    Step::Verified(ev)
                } else {
                    Step::Refuted(format!("no node tagged {tag:?} in scope"))
                }
            }
            HypothesisKind::PathTraversable { a, b } => {
                let call = ToolCall::PathTraversable {
                    a: a.clone(),
                    b: b.clone(),
                };
                let ev = self.ask(call, entry)?;
                let verdict: TraversalVerdict =
                    serde_json::from_value(ev.result.clone()).expect("verdict evidence");
                let hop = pair_index(&stg.tau_v, a, b);
                let direct = verdict.path.as_ref().is_some_and(|p| p.nodes.len() <= 2);
                if verdict.traversable && (hop.is_none() || direct) {
                    return Ok(Step::Verified(ev));
                }
                let reason = if verdict.traversable {
                    format!("edge {a}-{b} is closed")
                } else {
                    format!("no traversable path from {a} to {b}")
                };
                let Some(i) = hop else {
                    return Ok(Step::Refuted(reason));
                };
                let (lo, hi) = enclosing_pins(&stg.steps, i, i + 1);
                match shortest_path(&stg.tau_v[lo], &stg.tau_v[hi], self.world)? {
                    Some(p) if p.nodes[..] != stg.tau_v[lo..=hi] => Step::Rewrite {
                        lo,
                        hi,
                        nodes: p.nodes,
                        pin: None,
                        refuted: Some(reason),
                    },
                    _ => Step::Refuted(reason),
                }
            }
            HypothesisKind::ValidExit {
                scope,
                toward,
                door,
            } => {
                let doors_ev = self.ask(ToolCall::DoorsVerify { scope: scope.clone() }, entry)?;
                let doors: Vec<String> =
                    serde_json::from_value(doors_ev.result.clone()).expect("door list evidence");
                if doors.is_empty() {
                    return Ok(Step::Refuted("building has no usable exit".into()));
                }
                let d = stg.tau_v.iter().position(|n| n == door);
                let pinned = d.is_some_and(|d| stg.steps[d].pinned);
                if pinned && doors.contains(door) {
                    return Ok(Step::Verified(doors_ev));
                }
                let from = d.map(|d| stg.tau_v[enclosing_pins(&stg.steps, d, d).0].clone());
                let picked = match (doors.len(), self.chooser.as_mut()) {
                    (1, _) => None,
                    (_, Some(c)) => c.choose(toward, &doors),
                    _ => None,
                };
                let (chosen, ev) = if doors.len() == 1 && picked.is_none() {
                    (doors[0].clone(), doors_ev.clone())
                } else {
                    let candidates = match picked {
                        Some(p) if doors.contains(&p) => vec![p],
                        _ => doors.clone(),
                    };
                    let call = ToolCall::ResolveAmbiguity {
                        candidates,
                        from: from.clone(),
                        toward: toward.clone(),
                    };
                    let ev = self.ask(call, entry)?;
                    match serde_json::from_value(ev.result.clone()).expect("resolution evidence") {
                        Resolution::Chosen { node, .. } => (node, ev),
                        Resolution::NoSurvivor => {
                            return Ok(Step::Refuted(format!(
                                "no exit has a traversable path to {toward}"
                            )))
                        }
                    }
                };
                if &chosen == door {
                    return Ok(Step::Verified(ev));
                }
                let Some(d) = d else {
                    return Ok(Step::Refuted(format!("{door} is not on the walk")));
                };
                let (lo, hi) = enclosing_pins(&stg.steps, d, d);
                let first = shortest_path(&stg.tau_v[lo], &chosen, self.world)?;
                let second = shortest_path(&chosen, &stg.tau_v[hi], self.world)?;
                match (first, second) {
                    (Some(p), Some(q)) => {
                        let mut nodes = p.nodes;
                        nodes.extend(q.nodes.into_iter().skip(1));
                        if nodes[..] == stg.tau_v[lo..=hi] {
                            // the walk already passes the chosen exit
                            return Ok(if doors.contains(door) {
                                Step::Verified(ev)
                            } else {
                                Step::Refuted(format!("{door} is closed"))
                            });
                        }
                        Step::Rewrite {
                            lo,
                            hi,
                            nodes,
                            pin: Some(chosen),
                            refuted: None,
                        }
                    }
                    _ => Step::Refuted(format!("exit {chosen} cannot be joined to the walk")),
                }
            }
        })
    }
}

fn pair_index(walk: &[String], a: &str, b: &str) -> Option<usize> {
    walk.windows(2).position(|w| w[0] == a && w[1] == b)
}

/// Nearest pinned indices at or before `i` and at or after `j`, falling
/// back to the walk ends.
fn enclosing_pins(steps: &[WalkStep], i: usize, j: usize) -> (usize, usize) {
    let lo = (0..=i).rev().find(|&k| steps[k].pinned).unwrap_or(0);
    let hi = (j..steps.len())
        .find(|&k| steps[k].pinned)
        .unwrap_or(steps.len() - 1);
    (lo, hi)
}

/// Replace walk[lo..=hi] with `nodes` (which starts at walk[lo] and ends at
/// walk[hi]); the endpoints keep their steps.
fn splice(stg: &mut Stg, lo: usize, hi: usize, nodes: Vec<String>, pin: Option<&str>) {
    debug_assert_eq!(nodes.first(), stg.tau_v.get(lo));
    debug_assert_eq!(nodes.last(), stg.tau_v.get(hi));
    let mut walk = stg.tau_v[..lo].to_vec();
    let mut steps = stg.steps[..lo].to_vec();
    let last = nodes.len() - 1;
    for (k, n) in nodes.into_iter().enumerate() {
        let step = if k == 0 {
            stg.steps[lo].clone()
        } else if k == last {
            stg.steps[hi].clone()
        } else {
            WalkStep {
                subtask: Subtask::Traverse,
                pinned: pin == Some(n.as_str()),
            }
        };
        walk.push(n);
        steps.push(step);
    }
    walk.extend_from_slice(&stg.tau_v[hi + 1..]);
    steps.extend_from_slice(&stg.steps[hi + 1..]);
    stg.set_walk(walk, steps);
}

/// Regenerate hypotheses for the current walk, keeping the status of any
/// proposition that was already verified.
fn rehypothesize(stg: &mut Stg, world: &WorldModel) {
    let old = std::mem::take(&mut stg.hypotheses);
    let mut fresh = hypothesize(&stg.tau_v, &stg.steps, world);
    for h in &mut fresh {
        if let Some(prev) = old.iter().find(|o| o.kind == h.kind && o.is_verified()) {
            h.status = prev.status.clone();
        }
    }
    for h in &fresh {
        stg.nodes.extend(h.kind.nodes().into_iter().map(str::to_string));
    }
    stg.hypotheses = fresh;
}

/// Distinct nodes referenced by a walk and its hypotheses' walk positions;
/// the unit for the verification-round bound.
pub fn distinct_locations<'a>(walks: impl IntoIterator<Item = &'a [String]>) -> usize {
    walks
        .into_iter()
        .flatten()
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .len()
}
