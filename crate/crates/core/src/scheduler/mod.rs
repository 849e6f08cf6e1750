//! Grounded graph → camera schedule: per-node sensor selection by greedy
//! set cover, start-now trigger for the first node and arrival-time
//! triggers downstream.

mod cover;
mod pmem;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::sha256_hex;
use crate::stg::{
    evaluate_objective, is_grounded, nominal_witness, plan_from_directives, ActivationPlan,
    NodeDirective, ObjectiveParams, Score, Stg, StgError, Subtask, Trigger,
};
use crate::world::{WorldError, WorldModel};

pub use cover::{greedy_set_cover, indoor_path_camera_search, CoverRequirement, PathCover};
pub(crate) use cover::cover_observable;
pub use pmem::ProgrammingMemory;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("ungrounded graph: refusing to compile an unverified plan")]
    Ungrounded,
    #[error("no sensor covers {nodes:?}")]
    Uncoverable { nodes: Vec<String> },
    #[error("no traversable path from {from} to {to}")]
    Disconnected { from: String, to: String },
    #[error("malformed graph: {0}")]
    Malformed(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Stg(#[from] StgError),
}

/// Which scheduling policy produced a schedule. The executor adapts only
/// the schedules that ask for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    Static,
    Parallel,
    Stg,
}

impl Paradigm {
    pub const ALL: [Paradigm; 3] = [Paradigm::Static, Paradigm::Parallel, Paradigm::Stg];

    pub fn name(self) -> &'static str {
        match self {
            Paradigm::Static => "static",
            Paradigm::Parallel => "parallel",
            Paradigm::Stg => "stg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    pub params: ObjectiveParams,
    pub lead_s: f64,
    pub max_duration_s: f64,
    /// Width of the nominal witness windows used to score the plan.
    pub witness_dwell_s: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            params: ObjectiveParams::default(),
            lead_s: 5.0,
            max_duration_s: 60.0,
            witness_dwell_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMeta {
    pub cover_sizes: Vec<usize>,
    /// Walk nodes no sensor can see.
    pub gaps: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<Score>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub paradigm: Paradigm,
    pub walk: Vec<String>,
    pub start_time_s: f64,
    pub directives: Vec<NodeDirective>,
    /// The clock-triggered part of the schedule, laid out in time.
    pub static_plan: ActivationPlan,
    pub meta: ScheduleMeta,
}

impl Schedule {
    /// Assemble a schedule; `static_plan` is derived from the directives.
    pub fn new(
        paradigm: Paradigm,
        walk: Vec<String>,
        start_time_s: f64,
        directives: Vec<NodeDirective>,
        meta: ScheduleMeta,
        world: &WorldModel,
    ) -> Self {
        let fixed: Vec<NodeDirective> = directives
            .iter()
            .filter(|d| !matches!(d.trigger, Trigger::OnEta { .. }))
            .cloned()
            .collect();
        let static_plan = plan_from_directives(&walk, &fixed, start_time_s, world);
        Schedule {
            paradigm,
            walk,
            start_time_s,
            directives,
            static_plan,
            meta,
        }
    }

    /// All directives laid out at nominal speed.
    pub fn activation_plan(&self, world: &WorldModel) -> ActivationPlan {
        plan_from_directives(&self.walk, &self.directives, self.start_time_s, world)
    }

    /// Objective score of the laid-out plan against the nominal witness.
    pub fn score(&self, world: &WorldModel, params: &ObjectiveParams, dwell_s: f64) -> Result<Score, StgError> {
        let witness = nominal_witness(&self.walk, world, self.start_time_s, dwell_s);
        evaluate_objective(&self.activation_plan(world), &witness, world, params)
    }

    /// Write the directives into a graph's sigma.
    pub fn attach_to(&self, stg: Stg) -> Stg {
        stg.with_directives(&self.directives)
    }
}

fn signature(stg: &Stg, world: &WorldModel, opts: &SynthesisOptions) -> String {
    let doc = serde_json::json!({
        "walk": stg.tau_v,
        "steps": stg.steps,
        "start_time_s": stg.start_time_s,
        "world": world.digest(),
        "options": opts,
    });
    sha256_hex(doc.to_string().as_bytes())
}

/// Compile a grounded graph. Refuses ungrounded input; consults `pmem`
/// first and stores fresh results there.
pub fn synthesize(
    stg: &Stg,
    world: &WorldModel,
    opts: &SynthesisOptions,
    pmem: &ProgrammingMemory,
) -> Result<Schedule, ScheduleError> {
    if !is_grounded(stg, world) {
        return Err(ScheduleError::Ungrounded);
    }
    let sig = signature(stg, world, opts);
    if let Some(hit) = pmem.lookup(&sig) {
        return Ok(hit);
    }
    let (mut schedule, calls) = compile(stg, world, opts)?;
    pmem.count_solver_calls(calls);
    schedule.meta.signature = Some(sig.clone());
    Ok(pmem.store(sig, schedule))
}

/// Compile without the groundedness check, as if every hypothesis held.
/// This is the path an executor without verification would take.
pub fn compile_unchecked(stg: &Stg, world: &WorldModel, opts: &SynthesisOptions) -> Result<Schedule, ScheduleError> {
    compile(stg, world, opts).map(|(s, _)| s)
}

fn compile(stg: &Stg, world: &WorldModel, opts: &SynthesisOptions) -> Result<(Schedule, u64), ScheduleError> {
    let walk = &stg.tau_v;
    if walk.is_empty() || walk.len() != stg.steps.len() {
        return Err(ScheduleError::Malformed("walk and steps must align and be non-empty".into()));
    }
    let sel = select_sensors(walk, &stg.steps, world, true)?;
    let directives: Vec<NodeDirective> = walk
        .iter()
        .zip(sel.sensors)
        .enumerate()
        .map(|(k, (node, sensors))| NodeDirective {
            node: node.clone(),
            sensors,
            trigger: if k == 0 {
                Trigger::Immediate
            } else {
                Trigger::OnEta { lead_s: opts.lead_s }
            },
            max_duration_s: opts.max_duration_s,
        })
        .collect();
    let mut schedule = Schedule::new(Paradigm::Stg, walk.clone(), stg.start_time_s, directives, sel.meta, world);
    schedule.meta.score = Some(schedule.score(world, &opts.params, opts.witness_dwell_s)?);
    Ok((schedule, sel.solver_calls))
}

pub(crate) struct Selection {
    pub sensors: Vec<Vec<String>>,
    pub meta: ScheduleMeta,
    pub solver_calls: u64,
}

/// Sensors per walk position: observed nodes get their own minimal cover,
/// runs of traversed nodes share one cover of the run, covered areas get a
/// cover of the whole area. With `strict`, an unobservable observed node is
/// an error; otherwise it becomes a gap.
pub(crate) fn select_sensors(
    walk: &[String],
    steps: &[crate::stg::WalkStep],
    world: &WorldModel,
    strict: bool,
) -> Result<Selection, ScheduleError> {
    let mut calls = 0u64;
    let mut meta = ScheduleMeta::default();
    let mut sensors_at: Vec<Vec<String>> = vec![Vec::new(); walk.len()];
    let note_gaps = |meta: &mut ScheduleMeta, gaps: Vec<String>| {
        for g in gaps {
            if !meta.gaps.contains(&g) {
                meta.gaps.push(g);
            }
        }
    };

    let mut i = 0;
    while i < walk.len() {
        let observed = world.is_covered(&walk[i]);
        match &steps[i].subtask {
            Subtask::Traverse => {
                let j = (i..walk.len())
                    .find(|&k| steps[k].subtask != Subtask::Traverse)
                    .unwrap_or(walk.len());
                let (picks, gaps) = cover_observable(&walk[i..j], world)?;
                if !picks.is_empty() {
                    calls += 1;
                    meta.cover_sizes.push(picks.len());
                }
                for k in i..j {
                    let covering = world.sensors_covering(&walk[k])?;
                    sensors_at[k] = picks.iter().find(|s| covering.contains(*s)).cloned().into_iter().collect();
                }
                note_gaps(&mut meta, gaps);
                i = j;
                continue;
            }
            _ if !observed && strict => {
                return Err(ScheduleError::Uncoverable {
                    nodes: vec![walk[i].clone()],
                })
            }
            _ if !observed => note_gaps(&mut meta, vec![walk[i].clone()]),
            Subtask::Observe => {
                let req = CoverRequirement::from_coverage([&walk[i]], world);
                sensors_at[i] = greedy_set_cover(&req)?;
                calls += 1;
                meta.cover_sizes.push(sensors_at[i].len());
            }
            Subtask::CoverArea { area, .. } => {
                let mut universe = vec![walk[i].clone()];
                universe.extend(area.iter().filter(|n| **n != walk[i]).cloned());
                let (picks, gaps) = cover_observable(&universe, world)?;
                calls += 1;
                meta.cover_sizes.push(picks.len());
                sensors_at[i] = picks;
                note_gaps(&mut meta, gaps);
            }
        }
        i += 1;
    }
    Ok(Selection {
        sensors: sensors_at,
        meta,
        solver_calls: calls,
    })
}

/// Render a schedule as a readable script, one line per directive.
pub fn emit_script(schedule: &Schedule) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} schedule over {} walk nodes, start t={}",
        schedule.paradigm.name(),
        schedule.walk.len(),
        schedule.start_time_s
    );
    for d in &schedule.directives {
        let when = match d.trigger {
            Trigger::Immediate => "now".to_string(),
            Trigger::AtTime { t } => format!("at t={t}"),
            Trigger::OnEta { lead_s } => format!("when eta({}) <= {lead_s}s", d.node),
        };
        let sensors = if d.sensors.is_empty() {
            "(no sensor)".to_string()
        } else {
            d.sensors.join(", ")
        };
        let _ = writeln!(
            out,
            "{when}: activate [{sensors}] watching {} for up to {}s",
            d.node, d.max_duration_s
        );
    }
    if !schedule.meta.gaps.is_empty() {
        let _ = writeln!(out, "# unobservable: {}", schedule.meta.gaps.join(", "));
    }
    out
}
