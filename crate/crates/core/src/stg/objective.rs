use serde::{Deserialize, Serialize};

use super::plan::{walk_arcs, ActivationPlan, NOMINAL_SPEED_MPS};
use super::StgError;
use crate::world::WorldModel;

/// Weights of the fidelity-cost trade-off. The defaults are configuration,
/// chosen so a minimal fully covering plan scores above zero on the
/// generated campuses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParams {
    pub lambda: f64,
    pub cost_per_sensor_second: f64,
    pub overlap_weight: f64,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        ObjectiveParams {
            lambda: 0.1,
            cost_per_sensor_second: 0.01,
            overlap_weight: 0.05,
        }
    }
}

impl ObjectiveParams {
    pub fn is_valid(&self) -> bool {
        [self.lambda, self.cost_per_sensor_second, self.overlap_weight]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0)
    }
}

/// A witness node and the time span during which it must be observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessWindow {
    pub node: String,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub fidelity: f64,
    pub cost: f64,
    pub score: f64,
}

/// Fidelity is the fraction of witness nodes seen by a covering sensor at
/// some point inside their window. Cost is sensor-seconds plus, per witness
/// node, the peak number of simultaneously active covering sensors beyond
/// the first.
pub fn evaluate_objective(
    plan: &ActivationPlan,
    witness: &[WitnessWindow],
    world: &WorldModel,
    params: &ObjectiveParams,
) -> Result<Score, StgError> {
    for w in witness {
        if !(w.start_s < w.end_s) {
            return Err(StgError::InvalidWindow {
                node: w.node.clone(),
            });
        }
        world.require_node(&w.node)?;
    }
    let plan = plan.normalized();

    let mut observed = 0usize;
    let mut overlap = 0.0;
    for w in witness {
        let covering = world.sensors_covering(&w.node)?;
        let spans: Vec<(f64, f64)> = plan
            .intervals
            .iter()
            .filter(|iv| covering.contains(&iv.sensor))
            .map(|iv| (iv.start_s.max(w.start_s), iv.end_s.min(w.end_s)))
            .filter(|(a, b)| a < b)
            .collect();
        if !spans.is_empty() {
            observed += 1;
        }
        overlap += peak_concurrency(&spans).saturating_sub(1) as f64;
    }
    let fidelity = if witness.is_empty() {
        0.0
    } else {
        observed as f64 / witness.len() as f64
    };
    let cost = params.cost_per_sensor_second * plan.sensor_seconds() + params.overlap_weight * overlap;
    Ok(Score {
        fidelity,
        cost,
        score: fidelity - params.lambda * cost,
    })
}

/// Maximum number of open spans at any instant; touching spans do not
/// overlap.
fn peak_concurrency(spans: &[(f64, f64)]) -> usize {
    let mut events: Vec<(f64, i32)> = spans
        .iter()
        .flat_map(|&(a, b)| [(a, 1), (b, -1)])
        .collect();
    // closings sort before openings at equal times
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut open = 0i32;
    let mut peak = 0i32;
    for (_, delta) in events {
        open += delta;
        peak = peak.max(open);
    }
    peak as usize
}

/// Witness windows for a walk traversed at the nominal speed: node `i` is
/// due at its arc length divided by the speed and must be seen within
/// `dwell_s` of that.
pub fn nominal_witness(
    walk: &[String],
    world: &WorldModel,
    start_s: f64,
    dwell_s: f64,
) -> Vec<WitnessWindow> {
    walk_arcs(walk, world)
        .into_iter()
        .zip(walk)
        .map(|(arc, node)| {
            let t = start_s + arc / NOMINAL_SPEED_MPS;
            WitnessWindow {
                node: node.clone(),
                start_s: t,
                end_s: t + dwell_s,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stg::Interval;
    use crate::world::load_world;

    /// Three rooms, each watched by its own camera; c_all sees n1.
    fn world() -> WorldModel {
        let doc = r#"{"meta":{"name":"o","crs":"site-local-cartesian-meters"},
          "nodes":[
            {"id":"n1","name":"1","kind":"room","pos":[0,0],"tags":[]},
            {"id":"n2","name":"2","kind":"room","pos":[5,0],"tags":[]},
            {"id":"n3","name":"3","kind":"room","pos":[10,0],"tags":[]}],
          "edges":[
            {"a":"n1","b":"n2","kind":"intra_floor","traversable":true,"length_m":5},
            {"a":"n2","b":"n3","kind":"intra_floor","traversable":true,"length_m":5}],
          "sensors":[
            {"id":"c1","kind":"camera","node":"n1","pos":[0,0],"heading_deg":0,"fov_deg":10,"range_m":1,"covers":["n1"]},
            {"id":"c2","kind":"camera","node":"n2","pos":[5,0],"heading_deg":0,"fov_deg":10,"range_m":1,"covers":["n2"]},
            {"id":"c3","kind":"camera","node":"n3","pos":[10,0],"heading_deg":0,"fov_deg":10,"range_m":1,"covers":["n3"]},
            {"id":"c_all","kind":"camera","node":"n1","pos":[0,0],"heading_deg":0,"fov_deg":10,"range_m":1,"covers":["n1"]}]}"#;
        load_world(doc.as_bytes()).unwrap()
    }

    fn iv(sensor: &str, a: f64, b: f64) -> Interval {
        Interval {
            sensor: sensor.into(),
            start_s: a,
            end_s: b,
            dynamic: false,
        }
    }

    fn win(node: &str, a: f64, b: f64) -> WitnessWindow {
        WitnessWindow {
            node: node.into(),
            start_s: a,
            end_s: b,
        }
    }

    #[test]
    fn each_node_once_for_one_second() {
        let plan = ActivationPlan {
            intervals: vec![iv("c1", 0.0, 1.0), iv("c2", 1.0, 2.0), iv("c3", 2.0, 3.0)],
        };
        let witness = [win("n1", 0.0, 1.0), win("n2", 1.0, 2.0), win("n3", 2.0, 3.0)];
        let params = ObjectiveParams {
            lambda: 0.1,
            cost_per_sensor_second: 1.0,
            overlap_weight: 0.0,
        };
        let s = evaluate_objective(&plan, &witness, &world(), &params).unwrap();
        assert_eq!(s.fidelity, 1.0);
        assert_eq!(s.cost, 3.0);
        assert!((s.score - 0.7).abs() < 1e-12);
    }

    #[test]
    fn empty_plan_scores_zero() {
        let s = evaluate_objective(
            &ActivationPlan::default(),
            &[win("n1", 0.0, 1.0)],
            &world(),
            &ObjectiveParams::default(),
        )
        .unwrap();
        assert_eq!((s.fidelity, s.cost, s.score), (0.0, 0.0, 0.0));
    }

    #[test]
    fn simultaneous_coverage_costs_one_overlap() {
        let plan = ActivationPlan {
            intervals: vec![iv("c1", 0.0, 1.0), iv("c_all", 0.0, 1.0)],
        };
        let params = ObjectiveParams {
            lambda: 1.0,
            cost_per_sensor_second: 0.0,
            overlap_weight: 1.0,
        };
        let s = evaluate_objective(&plan, &[win("n1", 0.0, 1.0)], &world(), &params).unwrap();
        assert_eq!(s.cost, 1.0);
        // back to back is not simultaneous
        let plan = ActivationPlan {
            intervals: vec![iv("c1", 0.0, 0.5), iv("c_all", 0.5, 1.0)],
        };
        let s = evaluate_objective(&plan, &[win("n1", 0.0, 1.0)], &world(), &params).unwrap();
        assert_eq!(s.cost, 0.0);
    }

    #[test]
    fn inverted_window_is_rejected() {
        let r = evaluate_objective(
            &ActivationPlan::default(),
            &[win("n1", 2.0, 2.0)],
            &world(),
            &ObjectiveParams::default(),
        );
        assert!(matches!(r, Err(StgError::InvalidWindow { .. })));
    }

    #[test]
    fn lambda_zero_is_pure_fidelity() {
        let plan = ActivationPlan {
            intervals: vec![iv("c1", 0.0, 10.0), iv("c_all", 0.0, 10.0)],
        };
        let params = ObjectiveParams {
            lambda: 0.0,
            ..ObjectiveParams::default()
        };
        let witness = [win("n1", 0.0, 1.0), win("n2", 0.0, 1.0)];
        let s = evaluate_objective(&plan, &witness, &world(), &params).unwrap();
        assert_eq!(s.score, s.fidelity);
        assert_eq!(s.fidelity, 0.5);
    }
}
