//! Discrete-time replay of a schedule against a moving target: Bernoulli
//! detections through active cameras, a Kalman arrival-time estimate
//! driving just-in-time activation, and frame accounting.

mod baselines;
mod kalman;
mod trajectory;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scheduler::{Paradigm, Schedule, ScheduleError};
use crate::stg::{walk_arcs, Trigger};
use crate::world::{WorldError, WorldModel};

pub use baselines::{baseline_parallel, baseline_static, WHOLE_EPISODE_S};
pub use kalman::{eta, kalman_step, Eta, KalmanEtaState, KalmanParams, V_MIN_MPS};
pub use trajectory::{TargetTrajectory, Waypoint};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("invalid trajectory: {0}")]
    Trajectory(String),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("malformed schedule: {0}")]
    Malformed(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt_s: f64,
    pub p_detect: f64,
    pub frame_size_mb: f64,
    pub eta_lead_s: f64,
    pub kalman: KalmanParams,
    pub static_velocity_mps: f64,
    pub seed: u64,
    /// Mixed into the seed so each episode draws its own stream.
    pub episode: u64,
    pub timeout_s: f64,
    /// Activation fires when `mean - k * std` of the ETA is within the lead.
    pub eta_sigma_k: f64,
    pub static_window_s: f64,
    /// How long the target lingers at its last waypoint before leaving.
    pub final_dwell_s: f64,
    /// Longest tolerated stretch without any detection.
    pub track_loss_s: f64,
    pub initial_var_s: f64,
    pub initial_var_v: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt_s: 1.0,
            p_detect: 0.9,
            frame_size_mb: 0.8,
            eta_lead_s: 5.0,
            kalman: KalmanParams::default(),
            static_velocity_mps: 1.4,
            seed: 0,
            episode: 0,
            timeout_s: 900.0,
            eta_sigma_k: 1.0,
            static_window_s: 30.0,
            final_dwell_s: 10.0,
            track_loss_s: 30.0,
            initial_var_s: 1.0,
            initial_var_v: 0.25,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::InvalidConfig(what.to_string()));
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return bad("dt_s must be positive");
        }
        if !(0.0..=1.0).contains(&self.p_detect) {
            return bad("p_detect must lie in [0, 1]");
        }
        let non_negative = [
            self.frame_size_mb,
            self.eta_lead_s,
            self.kalman.q_process,
            self.kalman.r_meas,
            self.timeout_s,
            self.eta_sigma_k,
            self.static_window_s,
            self.final_dwell_s,
            self.track_loss_s,
            self.initial_var_s,
            self.initial_var_v,
        ];
        if non_negative.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return bad("noise terms, durations and sizes must be non-negative");
        }
        if !(self.static_velocity_mps > 0.0) {
            return bad("static_velocity_mps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub t_s: f64,
    pub node: String,
    pub sensor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub paradigm: Paradigm,
    pub completed: bool,
    pub detections: Vec<Detection>,
    pub latency_s: f64,
    pub bandwidth_mb: f64,
    pub tfp: u64,
    pub terminated_early: bool,
    /// Longest stretch without a detection, counted from the start.
    pub max_track_gap_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SimEvent {
    Activate { t_s: f64, node: String, sensors: Vec<String> },
    Release { t_s: f64, node: String, reason: String },
    Detect { t_s: f64, node: String, sensor: String },
    Step { t_s: f64, target: Option<String>, active: usize },
    End { t_s: f64, completed: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DState {
    Pending,
    Active { since: f64 },
    Done,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Detection draws indexed by (step, sensor), so every paradigm replaying
/// the same episode sees the same coin flips.
struct Draws {
    rng: ChaCha8Rng,
    n_sensors: u128,
}

impl Draws {
    fn new(seed: u64, episode: u64, n_sensors: usize) -> Self {
        Draws {
            rng: ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(episode))),
            n_sensors: n_sensors.max(1) as u128,
        }
    }

    fn uniform(&mut self, step: u64, sensor: usize) -> f64 {
        self.rng
            .set_word_pos((step as u128 * self.n_sensors + sensor as u128) * 2);
        self.rng.random::<f64>()
    }
}

pub fn run_episode(
    schedule: &Schedule,
    world: &WorldModel,
    trajectory: &TargetTrajectory,
    config: &SimConfig,
) -> Result<ExecutionReport, SimError> {
    run_episode_with(schedule, world, trajectory, config, &mut |_| {})
}

/// As [`run_episode`], streaming events to `sink`.
pub fn run_episode_with(
    schedule: &Schedule,
    world: &WorldModel,
    trajectory: &TargetTrajectory,
    config: &SimConfig,
    sink: &mut dyn FnMut(&SimEvent),
) -> Result<ExecutionReport, SimError> {
    config.validate()?;
    trajectory.validate(world)?;
    let walk = &schedule.walk;
    if walk.is_empty() {
        return Err(SimError::Malformed("empty walk".into()));
    }
    for d in &schedule.directives {
        world.require_node(&d.node)?;
        for s in &d.sensors {
            if world.sensor(s).is_none() {
                return Err(SimError::Malformed(format!("unknown sensor {s}")));
            }
        }
    }
    let arcs = walk_arcs(walk, world);
    let last = walk.len() - 1;
    let aligned = schedule.directives.len() == walk.len()
        && schedule.directives.iter().zip(walk).all(|(d, n)| &d.node == n);
    let walk_idx: Vec<usize> = if aligned {
        (0..walk.len()).collect()
    } else {
        let mut from = 0;
        schedule
            .directives
            .iter()
            .map(|d| {
                let i = (from..walk.len())
                    .find(|&i| walk[i] == d.node)
                    .or_else(|| walk.iter().position(|n| n == &d.node))
                    .unwrap_or(0);
                from = i;
                i
            })
            .collect()
    };
    let entry_arc: Vec<f64> = walk_idx
        .iter()
        .map(|&i| if i == 0 { 0.0 } else { 0.5 * (arcs[i - 1] + arcs[i]) })
        .collect();
    let sensor_ix: Vec<Vec<usize>> = schedule
        .directives
        .iter()
        .map(|d| d.sensors.iter().filter_map(|s| world.sensor_index(s)).collect())
        .collect();
    let all_sensors: Vec<&str> = world.sensors().map(|s| s.id.as_str()).collect();
    let releases_on_pass = schedule.paradigm != Paradigm::Parallel;
    let adaptive = schedule.paradigm == Paradigm::Stg;

    let t0 = schedule.start_time_s;
    let dt = config.dt_s;
    let mut draws = Draws::new(config.seed, config.episode, all_sensors.len());
    let mut kf = KalmanEtaState::new(0.0, config.static_velocity_mps, config.initial_var_s, config.initial_var_v, t0);
    let mut state = vec![DState::Pending; schedule.directives.len()];
    let mut last_idx: Option<usize> = None;
    let mut seen_idx: BTreeSet<usize> = BTreeSet::new();
    let mut detections = Vec::new();
    let mut last_detect_t = t0;
    let mut max_gap = 0.0f64;
    let mut tfp: u64 = 0;
    let mut completed = false;
    let mut early = false;
    let mut t_end = t0;
    let gone_after = trajectory.end_s() + config.final_dwell_s;

    let mut k: u64 = 0;
    loop {
        k += 1;
        let t = t0 + k as f64 * dt;
        if t - t0 > config.timeout_s + 1e-9 {
            break;
        }
        t_end = t;
        kf = kalman_step(&kf, dt, None, &config.kalman)?;

        // triggers
        let after = last_idx.map_or(0, |l| l + 1);
        let mut frontier: BTreeSet<usize> = BTreeSet::new();
        if adaptive {
            // the next directives past the last confirmed node, up to the
            // first one that can actually see something
            let mut ahead: Vec<usize> = (0..state.len())
                .filter(|&j| walk_idx[j] >= after && state[j] != DState::Done)
                .collect();
            ahead.sort_by_key(|&j| walk_idx[j]);
            for j in ahead {
                frontier.insert(j);
                if !sensor_ix[j].is_empty() {
                    break;
                }
            }
        }
        // no sighting for a while: look again where the target was last seen
        let lost = adaptive && t - last_detect_t >= 2.0 * config.eta_lead_s;
        if lost {
            for j in 0..state.len() {
                if last_idx == Some(walk_idx[j]) && state[j] == DState::Done {
                    state[j] = DState::Pending;
                }
            }
        }
        let held = |j: usize| frontier.contains(&j) || last_idx == Some(walk_idx[j]);
        for j in 0..state.len() {
            let d = &schedule.directives[j];
            match state[j] {
                DState::Pending => {
                    let fire = match d.trigger {
                        Trigger::Immediate => Some(t0),
                        Trigger::AtTime { t: at } => {
                            if t >= at + d.max_duration_s {
                                state[j] = DState::Done;
                                None
                            } else {
                                (t >= at).then_some(at)
                            }
                        }
                        Trigger::OnEta { lead_s } => {
                            let wi = walk_idx[j];
                            match last_idx {
                                Some(l) if l > wi => {
                                    state[j] = DState::Done;
                                    None
                                }
                                _ if held(j) => Some(t),
                                _ => {
                                    let e = eta(&kf, entry_arc[j]);
                                    (e.is_known() && e.mean_s - config.eta_sigma_k * e.std_s <= lead_s)
                                        .then_some(t)
                                }
                            }
                        }
                    };
                    if let Some(since) = fire {
                        state[j] = DState::Active { since };
                        sink(&SimEvent::Activate {
                            t_s: t,
                            node: d.node.clone(),
                            sensors: d.sensors.clone(),
                        });
                    }
                }
                DState::Active { since } if t - since >= d.max_duration_s && !held(j) => {
                    // a speculative activation that ran out re-arms unless passed
                    let passed = last_idx.is_some_and(|l| l >= walk_idx[j]);
                    state[j] = if adaptive && !passed {
                        DState::Pending
                    } else {
                        DState::Done
                    };
                    sink(&SimEvent::Release {
                        t_s: t,
                        node: d.node.clone(),
                        reason: "expired".into(),
                    });
                }
                _ => {}
            }
        }

        let active: BTreeSet<usize> = state
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, DState::Active { .. }))
            .flat_map(|(j, _)| sensor_ix[j].iter().copied())
            .collect();
        tfp += active.len() as u64;

        let target = trajectory.node_at(t, config.final_dwell_s);
        sink(&SimEvent::Step {
            t_s: t,
            target: target.map(str::to_string),
            active: active.len(),
        });

        let mut hit = false;
        if let Some(x) = target {
            let covering = world.sensors_covering(x)?;
            for &si in &active {
                let sid = all_sensors[si];
                if covering.contains(sid) && draws.uniform(k, si) < config.p_detect {
                    hit = true;
                    detections.push(Detection {
                        t_s: t,
                        node: x.to_string(),
                        sensor: sid.to_string(),
                    });
                    sink(&SimEvent::Detect {
                        t_s: t,
                        node: x.to_string(),
                        sensor: sid.to_string(),
                    });
                }
            }
            if hit {
                max_gap = max_gap.max(t - last_detect_t);
                last_detect_t = t;
                let from = last_idx.unwrap_or(0);
                if let Some(i) = (from..walk.len()).find(|&i| walk[i] == x) {
                    kf = kalman::update(&kf, arcs[i], config.kalman.r_meas);
                    last_idx = Some(i);
                    seen_idx.insert(i);
                    if i == last {
                        completed = max_gap <= config.track_loss_s;
                        early = true;
                        break;
                    }
                }
            }
        }

        // releases
        if releases_on_pass {
            for j in 0..state.len() {
                if !matches!(state[j], DState::Active { .. }) {
                    continue;
                }
                let wi = walk_idx[j];
                let passed = last_idx.is_some_and(|l| l > wi)
                    || (adaptive
                        && !lost
                        && seen_idx.contains(&wi)
                        && wi < last
                        && eta(&kf, arcs[wi + 1]).mean_s <= 0.0);
                if passed {
                    state[j] = DState::Done;
                    sink(&SimEvent::Release {
                        t_s: t,
                        node: schedule.directives[j].node.clone(),
                        reason: "passed".into(),
                    });
                }
            }
        }

        if t > gone_after {
            break;
        }
    }
    if !completed {
        max_gap = max_gap.max(t_end - last_detect_t);
    }
    sink(&SimEvent::End {
        t_s: t_end,
        completed,
    });
    Ok(ExecutionReport {
        paradigm: schedule.paradigm,
        completed,
        detections,
        latency_s: t_end - t0,
        bandwidth_mb: tfp as f64 * config.frame_size_mb,
        tfp,
        terminated_early: early,
        max_track_gap_s: max_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::{ground, SpatialMemory};
    use crate::planner::plan_text;
    use crate::scheduler::{synthesize, ProgrammingMemory, SynthesisOptions};
    use crate::world::load_world;

    /// Three corridor nodes `hop` metres apart; each has its own camera,
    /// plus a wide camera seeing all three.
    fn corridor(hop: f64) -> WorldModel {
        let doc = format!(
            r#"{{"meta":{{"name":"c","crs":"site-local-cartesian-meters"}},
          "nodes":[
            {{"id":"a","name":"A","kind":"corridor","pos":[0,0],"tags":[]}},
            {{"id":"b","name":"B","kind":"corridor","pos":[{h},0],"tags":[]}},
            {{"id":"c","name":"C","kind":"corridor","pos":[{h2},0],"tags":[]}}],
          "edges":[
            {{"a":"a","b":"b","kind":"intra_floor","traversable":true,"length_m":{h}}},
            {{"a":"b","b":"c","kind":"intra_floor","traversable":true,"length_m":{h}}}],
          "sensors":[
            {{"id":"ca","kind":"camera","node":"a","pos":[0,0],"heading_deg":0,"fov_deg":1,"range_m":1,"covers":["a"]}},
            {{"id":"cb","kind":"camera","node":"b","pos":[{h},0],"heading_deg":0,"fov_deg":1,"range_m":1,"covers":["b"]}},
            {{"id":"cc","kind":"camera","node":"c","pos":[{h2},0],"heading_deg":0,"fov_deg":1,"range_m":1,"covers":["c"]}},
            {{"id":"wide","kind":"camera","node":"b","pos":[{h},0],"heading_deg":0,"fov_deg":1,"range_m":1,"covers":["a","b","c"]}}]}}"#,
            h = hop,
            h2 = 2.0 * hop
        );
        load_world(doc.as_bytes()).unwrap()
    }

    fn walk() -> Vec<String> {
        vec!["a".into(), "b".into(), "c".into()]
    }

    fn at_speed(hop: f64, v: f64) -> TargetTrajectory {
        TargetTrajectory::new(
            walk()
                .into_iter()
                .enumerate()
                .map(|(i, node)| Waypoint {
                    node,
                    t_s: hop * i as f64 / v,
                })
                .collect(),
        )
    }

    fn certain() -> SimConfig {
        SimConfig {
            p_detect: 1.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn parallel_accounting() {
        let w = corridor(14.0);
        let s = baseline_parallel(&walk(), &w, 0.0).unwrap();
        let r = run_episode(&s, &w, &at_speed(14.0, 1.4), &certain()).unwrap();
        assert!(r.completed);
        assert_eq!(r.tfp as f64, 4.0 * r.latency_s / 1.0);
        assert_eq!(r.bandwidth_mb, r.tfp as f64 * 0.8);
    }

    #[test]
    fn static_catches_a_nominal_target() {
        let w = corridor(50.0);
        let s = baseline_static(&walk(), &w, &certain(), 0.0).unwrap();
        let r = run_episode(&s, &w, &at_speed(50.0, 1.4), &certain()).unwrap();
        assert!(r.completed);
    }

    #[test]
    fn static_misses_a_fast_target() {
        let w = corridor(50.0);
        let s = baseline_static(&walk(), &w, &certain(), 0.0).unwrap();
        // windows: b [20.7, 50.7], c [56.4, 86.4]. At 2.8 m/s the target
        // holds c from 26.8 until 45.7 after dwelling, before c's window opens.
        let r = run_episode(&s, &w, &at_speed(50.0, 2.8), &certain()).unwrap();
        assert!(!r.completed);
        assert!(r.detections.iter().all(|d| d.node != "c"));
    }

    #[test]
    fn stg_completes_with_fewer_frames_than_parallel() {
        let w = corridor(50.0);
        let g0 = plan_text(r#"TRACK "x" FROM "A" TO "C""#, &w).unwrap().into_stg();
        let g = ground(&g0, &w, &SpatialMemory::new()).result.unwrap();
        let s = synthesize(&g, &w, &SynthesisOptions::default(), &ProgrammingMemory::new()).unwrap();
        let traj = at_speed(50.0, 1.4);
        let stg = run_episode(&s, &w, &traj, &certain()).unwrap();
        let par = run_episode(&baseline_parallel(&walk(), &w, 0.0).unwrap(), &w, &traj, &certain()).unwrap();
        assert!(stg.completed && par.completed);
        assert!(stg.tfp < par.tfp, "stg {} vs parallel {}", stg.tfp, par.tfp);
    }

    #[test]
    fn determinism() {
        let w = corridor(14.0);
        let s = baseline_parallel(&walk(), &w, 0.0).unwrap();
        let cfg = SimConfig {
            p_detect: 0.5,
            seed: 9,
            ..SimConfig::default()
        };
        let a = run_episode(&s, &w, &at_speed(14.0, 1.4), &cfg).unwrap();
        let b = run_episode(&s, &w, &at_speed(14.0, 1.4), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let w = corridor(14.0);
        let s = baseline_parallel(&walk(), &w, 0.0).unwrap();
        let cfg = SimConfig {
            p_detect: 1.5,
            ..SimConfig::default()
        };
        assert!(run_episode(&s, &w, &at_speed(14.0, 1.4), &cfg).is_err());
    }
}
