use std::collections::BTreeSet;

use super::{SimConfig, SimError};
use crate::scheduler::{select_sensors, Paradigm, Schedule};
use crate::stg::{walk_arcs, NodeDirective, Subtask, Trigger, WalkStep};
use crate::world::{shortest_path, WorldModel};

/// Directives of a parallel schedule never expire on their own.
pub const WHOLE_EPISODE_S: f64 = 1e9;

/// Observe the endpoints, traverse the rest.
pub(crate) fn endpoint_steps(n: usize) -> Vec<WalkStep> {
    (0..n)
        .map(|i| WalkStep {
            subtask: if i == 0 || i + 1 == n {
                Subtask::Observe
            } else {
                Subtask::Traverse
            },
            pinned: i == 0 || i + 1 == n,
        })
        .collect()
}

fn check_connected(walk: &[String], world: &WorldModel) -> Result<(), SimError> {
    if walk.is_empty() {
        return Err(SimError::Malformed("empty walk".into()));
    }
    for pair in walk.windows(2) {
        if shortest_path(&pair[0], &pair[1], world)?.is_none() {
            return Err(SimError::Malformed(format!(
                "walk is disconnected between {} and {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

/// Fixed windows timed by a constant-velocity walk: node `i` is watched
/// for `static_window_s` centred on its nominal arrival; the first node
/// from `start_s`.
pub fn baseline_static(walk: &[String], world: &WorldModel, config: &SimConfig, start_s: f64) -> Result<Schedule, SimError> {
    check_connected(walk, world)?;
    let sel = select_sensors(walk, &endpoint_steps(walk.len()), world, false)?;
    let arcs = walk_arcs(walk, world);
    let w = config.static_window_s;
    let directives = walk
        .iter()
        .zip(sel.sensors)
        .enumerate()
        .map(|(i, (node, sensors))| NodeDirective {
            node: node.clone(),
            sensors,
            trigger: Trigger::AtTime {
                t: if i == 0 {
                    start_s
                } else {
                    start_s + arcs[i] / config.static_velocity_mps - w / 2.0
                },
            },
            max_duration_s: w,
        })
        .collect();
    Ok(Schedule::new(Paradigm::Static, walk.to_vec(), start_s, directives, sel.meta, world))
}

/// Every sensor that sees any walk node, on from the start until the end.
pub fn baseline_parallel(walk: &[String], world: &WorldModel, start_s: f64) -> Result<Schedule, SimError> {
    if walk.is_empty() {
        return Err(SimError::Malformed("empty walk".into()));
    }
    let mut seen = BTreeSet::new();
    let mut directives = Vec::new();
    for node in walk {
        for s in world.sensors_covering(node)? {
            if seen.insert(s.clone()) {
                directives.push(NodeDirective {
                    node: node.clone(),
                    sensors: vec![s.clone()],
                    trigger: Trigger::Immediate,
                    max_duration_s: WHOLE_EPISODE_S,
                });
            }
        }
    }
    Ok(Schedule::new(
        Paradigm::Parallel,
        walk.to_vec(),
        start_s,
        directives,
        Default::default(),
        world,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::fixtures::line_world;

    fn walk(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn static_windows_centre_on_nominal_arrival() {
        let w = line_world();
        let cfg = SimConfig::default();
        let s = baseline_static(&walk(&["n1", "n2", "n3"]), &w, &cfg, 0.0).unwrap();
        let starts: Vec<f64> = s
            .directives
            .iter()
            .map(|d| match d.trigger {
                Trigger::AtTime { t } => t,
                _ => panic!("static uses clock triggers"),
            })
            .collect();
        assert_eq!(starts[0], 0.0);
        assert!((starts[1] + 15.0 - 5.0 / 1.4).abs() < 1e-12);
        assert!((starts[2] + 15.0 - 10.0 / 1.4).abs() < 1e-12);
    }

    #[test]
    fn parallel_lists_each_sensor_once() {
        let w = line_world();
        let s = baseline_parallel(&walk(&["n1", "n2", "n3"]), &w, 0.0).unwrap();
        assert_eq!(s.directives.len(), 1);
        assert_eq!(s.directives[0].trigger, Trigger::Immediate);
        let none = baseline_parallel(&walk(&["n3"]), &w, 0.0).unwrap();
        assert!(none.directives.is_empty());
    }
}
