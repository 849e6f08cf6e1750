use std::collections::BTreeSet;

use super::{Sensor, WorldModel};

const ANGLE_EPS_DEG: f64 = 1e-9;

/// Nodes inside the sensor's viewing sector: apex at the sensor position,
/// half-angle `fov_deg / 2` around the heading, radius `range_m`.
///
/// Positions are only comparable within one building floor, so candidates
/// are restricted to the level of the mounting node. No occlusion.
pub fn derive_coverage(sensor: &Sensor, world: &WorldModel) -> BTreeSet<String> {
    let mount = world.node(&sensor.node);
    world
        .nodes()
        .filter(|n| mount.is_none_or(|m| m.same_level(n)))
        .filter(|n| in_sector(sensor, n.pos))
        .map(|n| n.id.clone())
        .collect()
}

pub(crate) fn in_sector(sensor: &Sensor, pos: [f64; 2]) -> bool {
    let dx = pos[0] - sensor.pos[0];
    let dy = pos[1] - sensor.pos[1];
    let dist = dx.hypot(dy);
    if dist > sensor.range_m {
        return false;
    }
    if dist == 0.0 {
        return true;
    }
    let bearing = dy.atan2(dx).to_degrees();
    let mut diff = (bearing - sensor.heading_deg).rem_euclid(360.0);
    if diff > 180.0 {
        diff -= 360.0;
    }
    diff.abs() <= sensor.fov_deg / 2.0 + ANGLE_EPS_DEG
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{load_world, SensorKind};
    use proptest::prelude::*;

    fn cam(heading: f64, fov: f64, range: f64) -> Sensor {
        Sensor {
            id: "c".into(),
            kind: SensorKind::Camera,
            node: "o".into(),
            pos: [0.0, 0.0],
            heading_deg: heading,
            fov_deg: fov,
            range_m: range,
            covers: BTreeSet::new(),
        }
    }

    fn plane_world() -> WorldModel {
        let doc = r#"{"meta":{"name":"p","crs":"site-local-cartesian-meters"},
          "nodes":[
            {"id":"o","name":"O","kind":"room","pos":[0,0],"tags":[]},
            {"id":"east","name":"E","kind":"room","pos":[5,0],"tags":[]},
            {"id":"north","name":"N","kind":"room","pos":[0,5],"tags":[]},
            {"id":"far","name":"F","kind":"room","pos":[10.000001,0],"tags":[]},
            {"id":"edge","name":"R","kind":"room","pos":[10,0],"tags":[]},
            {"id":"upstairs","name":"U","kind":"room","floor":2,"pos":[5,0],"tags":[]}
          ]}"#;
        load_world(doc.as_bytes()).unwrap()
    }

    #[test]
    fn hand_trigonometry_cases() {
        let w = plane_world();
        let got = derive_coverage(&cam(0.0, 90.0, 10.0), &w);
        // (5,0) bearing 0 inside; (0,5) bearing 90 > 45 outside; (10,0) on the
        // radius boundary inside; 10 + 1e-6 outside; other floor skipped
        let want: BTreeSet<String> = ["o", "east", "edge"].iter().map(|s| s.to_string()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn apex_is_always_covered() {
        let w = plane_world();
        for fov in [1.0, 45.0, 180.0] {
            assert!(derive_coverage(&cam(270.0, fov, 0.5), &w).contains("o"));
        }
    }

    #[test]
    fn sector_wraps_around_north() {
        let s = cam(350.0, 40.0, 10.0);
        assert!(in_sector(&s, [5.0, 0.0]));
        assert!(in_sector(&s, [5.0, -1.0]));
        assert!(!in_sector(&s, [0.0, 5.0]));
    }

    proptest! {
        #[test]
        fn invariant_under_full_turns(heading in 0.0f64..360.0, fov in 1.0f64..180.0,
                                      x in -20.0f64..20.0, y in -20.0f64..20.0, turns in 1u32..4) {
            let a = cam(heading, fov, 12.0);
            let b = cam(heading + 360.0 * turns as f64, fov, 12.0);
            prop_assert_eq!(in_sector(&a, [x, y]), in_sector(&b, [x, y]));
        }
    }
}
