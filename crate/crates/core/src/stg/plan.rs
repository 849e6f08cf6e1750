use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{is_grounded, Stg, StgError};
use crate::world::{shortest_path_with, Traversal, WorldModel};

/// Walking speed used to lay out placeholder intervals before execution.
pub const NOMINAL_SPEED_MPS: f64 = 1.4;

/// Hold applied on top of the nominal walk duration when bounding a plan.
const PLAN_TAIL_S: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Trigger {
    AtTime { t: f64 },
    OnEta { lead_s: f64 },
    Immediate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDirective {
    pub node: String,
    pub sensors: Vec<String>,
    pub trigger: Trigger,
    pub max_duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub sensor: String,
    pub start_s: f64,
    pub end_s: f64,
    /// Laid out from a nominal arrival estimate; the executor decides the
    /// real activation time.
    #[serde(default)]
    pub dynamic: bool,
}

impl Interval {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActivationPlan {
    pub intervals: Vec<Interval>,
}

impl ActivationPlan {
    /// Sort by (sensor, start) and merge overlapping or touching intervals
    /// of the same sensor. Empty intervals are dropped.
    pub fn normalized(&self) -> ActivationPlan {
        let mut by_sensor: BTreeMap<&str, Vec<&Interval>> = BTreeMap::new();
        for iv in &self.intervals {
            if iv.end_s > iv.start_s {
                by_sensor.entry(&iv.sensor).or_default().push(iv);
            }
        }
        let mut out = Vec::new();
        for (sensor, mut ivs) in by_sensor {
            ivs.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.end_s.total_cmp(&b.end_s)));
            let mut cur: Option<Interval> = None;
            for iv in ivs {
                match cur.as_mut() {
                    Some(c) if iv.start_s <= c.end_s => {
                        c.end_s = c.end_s.max(iv.end_s);
                        c.dynamic |= iv.dynamic;
                    }
                    _ => {
                        if let Some(done) = cur.take() {
                            out.push(done);
                        }
                        cur = Some(Interval {
                            sensor: sensor.to_string(),
                            start_s: iv.start_s,
                            end_s: iv.end_s,
                            dynamic: iv.dynamic,
                        });
                    }
                }
            }
            out.extend(cur);
        }
        ActivationPlan { intervals: out }
    }

    /// The union of sensors ever active.
    pub fn sensors(&self) -> BTreeSet<&str> {
        self.intervals.iter().map(|i| i.sensor.as_str()).collect()
    }

    pub fn sensor_seconds(&self) -> f64 {
        self.intervals.iter().map(Interval::duration).sum()
    }
}

/// Cumulative arc length at each walk node.
///
/// Consecutive nodes are normally adjacent; otherwise the floor-plan
/// shortest path length is used.
pub fn walk_arcs(walk: &[String], world: &WorldModel) -> Vec<f64> {
    let mut arcs = Vec::with_capacity(walk.len());
    let mut acc = 0.0;
    for (i, node) in walk.iter().enumerate() {
        if i > 0 {
            acc += hop_length(&walk[i - 1], node, world);
        }
        arcs.push(acc);
    }
    arcs
}

fn hop_length(a: &str, b: &str, world: &WorldModel) -> f64 {
    if a == b {
        return 0.0;
    }
    if let Some(e) = world.edge_between(a, b) {
        return e.length_m;
    }
    match shortest_path_with(a, b, world, Traversal::Topological) {
        Ok(Some(p)) => p.length_m,
        _ => match (world.node(a), world.node(b)) {
            (Some(x), Some(y)) => (x.pos[0] - y.pos[0]).hypot(x.pos[1] - y.pos[1]),
            _ => 0.0,
        },
    }
}

/// Lay out directives along `walk` as an activation plan starting at
/// `start_s`.
///
/// `AtTime` and `Immediate` become fixed intervals. `OnEta` becomes a
/// dynamic placeholder opening `lead_s` before the nominal arrival. All
/// intervals are clipped to the plan horizon (nominal walk time plus a
/// fixed tail), so whole-episode directives stay finite.
pub fn plan_from_directives(
    walk: &[String],
    directives: &[NodeDirective],
    start_s: f64,
    world: &WorldModel,
) -> ActivationPlan {
    let arcs = walk_arcs(walk, world);
    let arc_of = |node: &str| -> f64 {
        walk.iter()
            .position(|n| n == node)
            .map(|i| arcs[i])
            .unwrap_or(0.0)
    };
    let horizon = start_s + arcs.last().copied().unwrap_or(0.0) / NOMINAL_SPEED_MPS + PLAN_TAIL_S;
    let mut intervals = Vec::new();
    for d in directives {
        let (from, dynamic) = match d.trigger {
            Trigger::AtTime { t } => (t, false),
            Trigger::Immediate => (start_s, false),
            Trigger::OnEta { lead_s } => {
                let arrival = start_s + arc_of(&d.node) / NOMINAL_SPEED_MPS;
                ((arrival - lead_s).max(start_s), true)
            }
        };
        let to = (from + d.max_duration_s).min(horizon);
        if to <= from {
            continue;
        }
        for s in &d.sensors {
            intervals.push(Interval {
                sensor: s.clone(),
                start_s: from,
                end_s: to,
                dynamic,
            });
        }
    }
    ActivationPlan { intervals }.normalized()
}

/// The plan `P(t)` induced by a grounded graph's sigma.
///
/// Refuses ungrounded graphs.
pub fn induced_plan(stg: &Stg, start_time_s: f64, world: &WorldModel) -> Result<ActivationPlan, StgError> {
    if !is_grounded(stg, world) {
        return Err(StgError::Ungrounded);
    }
    let mut directives = Vec::with_capacity(stg.tau_v.len());
    let mut seen = BTreeSet::new();
    for node in &stg.tau_v {
        let d = stg
            .sigma
            .get(node)
            .ok_or_else(|| StgError::MissingDirective(node.clone()))?;
        if seen.insert(node.as_str()) {
            directives.push(d.clone());
        }
    }
    Ok(plan_from_directives(&stg.tau_v, &directives, start_time_s, world))
}
