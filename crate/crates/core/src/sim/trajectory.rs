use serde::{Deserialize, Serialize};

use super::SimError;
use crate::stg::walk_arcs;
use crate::world::WorldModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub node: String,
    pub t_s: f64,
}

/// Where the target is and when. Serialized as a bare list of waypoints.
/// A repeated node is a pause there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetTrajectory {
    pub waypoints: Vec<Waypoint>,
}

impl TargetTrajectory {
    pub fn new(waypoints: Vec<Waypoint>) -> Self {
        TargetTrajectory { waypoints }
    }

    /// The walk at a constant speed from `start_s`.
    pub fn at_speed(walk: &[String], world: &WorldModel, start_s: f64, speed_mps: f64) -> Self {
        let arcs = walk_arcs(walk, world);
        TargetTrajectory::new(
            walk.iter()
                .zip(arcs)
                .map(|(node, arc)| Waypoint {
                    node: node.clone(),
                    t_s: start_s + arc / speed_mps,
                })
                .collect(),
        )
    }

    /// Times strictly increase; consecutive distinct nodes share an edge.
    pub fn validate(&self, world: &WorldModel) -> Result<(), SimError> {
        if self.waypoints.is_empty() {
            return Err(SimError::Trajectory("no waypoints".into()));
        }
        for w in &self.waypoints {
            world.require_node(&w.node)?;
            if !w.t_s.is_finite() {
                return Err(SimError::Trajectory(format!("non-finite time at {}", w.node)));
            }
        }
        for pair in self.waypoints.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if !(b.t_s > a.t_s) {
                return Err(SimError::Trajectory(format!(
                    "time does not increase from {} to {}",
                    a.node, b.node
                )));
            }
            if a.node != b.node && world.edge_between(&a.node, &b.node).is_none() {
                return Err(SimError::Trajectory(format!("{} and {} are not adjacent", a.node, b.node)));
            }
        }
        Ok(())
    }

    pub fn start_s(&self) -> f64 {
        self.waypoints.first().map_or(0.0, |w| w.t_s)
    }

    pub fn end_s(&self) -> f64 {
        self.waypoints.last().map_or(0.0, |w| w.t_s)
    }

    pub fn final_node(&self) -> Option<&str> {
        self.waypoints.last().map(|w| w.node.as_str())
    }

    /// Distinct consecutive nodes visited.
    pub fn route(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for w in &self.waypoints {
            if out.last() != Some(&w.node) {
                out.push(w.node.clone());
            }
        }
        out
    }

    /// The node the target occupies at `t`: on a hop it is at whichever
    /// end is nearer in time. After the last waypoint it stays for
    /// `dwell_s`, then leaves.
    pub fn node_at(&self, t: f64, dwell_s: f64) -> Option<&str> {
        let first = self.waypoints.first()?;
        if t < first.t_s {
            return None;
        }
        let i = self.waypoints.partition_point(|w| w.t_s <= t);
        if i >= self.waypoints.len() {
            let last = self.waypoints.last()?;
            return (t <= last.t_s + dwell_s).then_some(last.node.as_str());
        }
        let (a, b) = (&self.waypoints[i - 1], &self.waypoints[i]);
        let f = (t - a.t_s) / (b.t_s - a.t_s);
        Some(if f < 0.5 { &a.node } else { &b.node })
    }
}
