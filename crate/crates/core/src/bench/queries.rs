use std::collections::BTreeMap;
use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::sim::{TargetTrajectory, Waypoint};
use crate::world::{shortest_path, NodeKind, SpatialNode, WorldModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "T1.a")]
    T1a,
    #[serde(rename = "T1.b")]
    T1b,
    #[serde(rename = "T2")]
    T2,
    #[serde(rename = "T3.a")]
    T3a,
    #[serde(rename = "T3.b")]
    T3b,
}

impl Tier {
    pub const ALL: [Tier; 5] = [Tier::T1a, Tier::T1b, Tier::T2, Tier::T3a, Tier::T3b];

    pub fn name(self) -> &'static str {
        match self {
            Tier::T1a => "T1.a",
            Tier::T1b => "T1.b",
            Tier::T2 => "T2",
            Tier::T3a => "T3.a",
            Tier::T3b => "T3.b",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Relative tier weights, in [`Tier::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TierMix(pub [f64; 5]);

impl Default for TierMix {
    fn default() -> Self {
        TierMix([27.3, 21.5, 18.8, 18.0, 14.4])
    }
}

impl TierMix {
    /// Only the tiers whose targets move.
    pub fn moving() -> Self {
        TierMix([0.0, 0.0, 18.8, 18.0, 14.4])
    }

    pub fn cross_building() -> Self {
        TierMix([0.0, 0.0, 0.0, 18.0, 14.4])
    }

    /// Largest-remainder split of `count` queries.
    pub fn allocate(&self, count: usize) -> Result<[usize; 5], BenchError> {
        let total: f64 = self.0.iter().sum();
        if self.0.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || !(total > 0.0) {
            return Err(BenchError::InvalidSpec("tier weights must be non-negative with a positive sum".into()));
        }
        let quotas: Vec<f64> = self.0.iter().map(|w| w / total * count as f64).collect();
        let mut out = [0usize; 5];
        for (o, q) in out.iter_mut().zip(&quotas) {
            *o = q.floor() as usize;
        }
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let short = count - out.iter().sum::<usize>();
        for &i in order.iter().take(short) {
            out[i] += 1;
        }
        Ok(out)
    }
}

/// How simulated people walk. Everyone gets a speed factor and may stop
/// at intermediate nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Behavior {
    pub speed_mps: f64,
    /// Speed factor drawn uniformly from `1 ± speed_jitter`.
    pub speed_jitter: f64,
    pub pause_prob: f64,
    pub pause_s: (f64, f64),
    /// Fraction of moving-target trajectories that deviate from plan.
    pub deviation_rate: f64,
}

impl Default for Behavior {
    fn default() -> Self {
        Behavior {
            speed_mps: 1.4,
            speed_jitter: 0.25,
            pause_prob: 0.2,
            pause_s: (5.0, 20.0),
            deviation_rate: 0.0,
        }
    }
}

impl Behavior {
    /// Half of the moving targets change speed by 1.5x or more, or step off
    /// the route for a while.
    pub fn trap() -> Self {
        Behavior {
            deviation_rate: 0.5,
            ..Behavior::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Deviation {
    Speed { factor: f64 },
    Detour { at: String, via: String, linger_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteSpec {
    pub count: usize,
    pub seed: u64,
    pub mix: TierMix,
    pub behavior: Behavior,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec {
            count: 120,
            seed: 0,
            mix: TierMix::default(),
            behavior: Behavior::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCase {
    pub id: String,
    pub tier: Tier,
    pub query: String,
    /// Ground-truth route between the query's endpoints.
    pub walk: Vec<String>,
    pub witness: TargetTrajectory,
    pub solvable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<Deviation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySuite {
    pub seed: u64,
    pub cases: Vec<BenchCase>,
}

impl QuerySuite {
    pub fn tier(&self, tier: Tier) -> impl Iterator<Item = &BenchCase> {
        self.cases.iter().filter(move |c| c.tier == tier)
    }

    pub fn solvable(&self) -> impl Iterator<Item = &BenchCase> {
        self.cases.iter().filter(|c| c.solvable)
    }
}

const TARGETS: &[&str] = &["visitor", "courier", "student", "technician"];

struct Pools<'w> {
    spots: Vec<&'w SpatialNode>,
    rooms_by_building: BTreeMap<&'w str, Vec<&'w SpatialNode>>,
    ground_corridors: BTreeMap<&'w str, Vec<&'w SpatialNode>>,
}

impl<'w> Pools<'w> {
    fn new(world: &'w WorldModel) -> Self {
        let mut p = Pools {
            spots: Vec::new(),
            rooms_by_building: BTreeMap::new(),
            ground_corridors: BTreeMap::new(),
        };
        let ground = |b: &str| {
            world
                .building_nodes(b)
                .into_iter()
                .filter_map(|n| n.floor)
                .min()
        };
        for n in world.nodes() {
            if matches!(n.kind, NodeKind::Room | NodeKind::Corridor) {
                p.spots.push(n);
            }
            let Some(b) = n.building.as_deref() else {
                continue;
            };
            match n.kind {
                NodeKind::Room => p.rooms_by_building.entry(b).or_default().push(n),
                NodeKind::Corridor if n.floor.is_some() && n.floor == ground(b) => {
                    p.ground_corridors.entry(b).or_default().push(n)
                }
                _ => {}
            }
        }
        p
    }

    fn rooms(&self) -> Vec<&'w SpatialNode> {
        self.rooms_by_building.values().flatten().copied().collect()
    }
}

fn pick_pair<'w>(
    by_building: &BTreeMap<&'w str, Vec<&'w SpatialNode>>,
    rng: &mut ChaCha8Rng,
) -> Option<(&'w SpatialNode, &'w SpatialNode)> {
    let buildings: Vec<&&str> = by_building.keys().collect();
    if buildings.len() < 2 {
        return None;
    }
    let mut two: Vec<&&str> = buildings.choose_multiple(rng, 2).copied().collect();
    two.shuffle(rng);
    let a = *by_building[*two[0]].choose(rng)?;
    let b = *by_building[*two[1]].choose(rng)?;
    Some((a, b))
}

/// Seeded query suite with ground-truth witnesses. Tiers follow the mix;
/// each query names its endpoints by node name. A query is solvable when
/// its endpoints are observable and connected.
pub fn gen_queries(world: &WorldModel, spec: &SuiteSpec) -> Result<QuerySuite, BenchError> {
    let counts = spec.mix.allocate(spec.count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pools = Pools::new(world);
    let rooms = pools.rooms();
    let multi_room: BTreeMap<&str, Vec<&SpatialNode>> = pools
        .rooms_by_building
        .iter()
        .filter(|(_, v)| v.len() >= 2)
        .map(|(k, v)| (*k, v.clone()))
        .collect();

    let mut cases = Vec::new();
    for (tier, &n) in Tier::ALL.iter().zip(&counts) {
        if n == 0 {
            continue;
        }
        let unsatisfiable = || BenchError::TierUnsatisfiable(tier.name().to_string());
        for _ in 0..n {
            let target = *TARGETS.choose(&mut rng).expect("targets");
            let (query, from, to) = match tier {
                Tier::T1a => {
                    let s = *pools.spots.choose(&mut rng).ok_or_else(unsatisfiable)?;
                    (format!("FOCUS \"{}\"", s.name), s, s)
                }
                Tier::T1b => {
                    let s = *rooms.choose(&mut rng).ok_or_else(unsatisfiable)?;
                    (format!("WATCH \"{}\"", s.name), s, s)
                }
                Tier::T2 => {
                    let keys: Vec<&&str> = multi_room.keys().collect();
                    let b = **keys.choose(&mut rng).ok_or_else(unsatisfiable)?;
                    let two: Vec<&&SpatialNode> = multi_room[b].choose_multiple(&mut rng, 2).collect();
                    let (a, z) = (*two[0], *two[1]);
                    (format!("TRACK \"{target}\" FROM \"{}\" TO \"{}\"", a.name, z.name), a, z)
                }
                Tier::T3a => {
                    let (a, z) = pick_pair(&pools.ground_corridors, &mut rng).ok_or_else(unsatisfiable)?;
                    (format!("TRACK \"{target}\" FROM \"{}\" TO \"{}\"", a.name, z.name), a, z)
                }
                Tier::T3b => {
                    let (a, z) = pick_pair(&pools.rooms_by_building, &mut rng).ok_or_else(unsatisfiable)?;
                    (format!("ROUTE \"{}\" THEN \"{}\"", a.name, z.name), a, z)
                }
            };
            let walk = shortest_path(&from.id, &to.id, world)?.map(|p| p.nodes);
            let solvable = walk.is_some() && world.is_covered(&from.id) && world.is_covered(&to.id);
            let walk = walk.unwrap_or_else(|| vec![from.id.clone()]);
            let deviation = (walk.len() > 1 && rng.random_bool(spec.behavior.deviation_rate.clamp(0.0, 1.0)))
                .then(|| deviate(&walk, world, &mut rng))
                .flatten();
            let witness = time_walk(&walk, world, &spec.behavior, deviation.as_ref(), &mut rng);
            cases.push(BenchCase {
                id: format!("q{:04}", cases.len()),
                tier: *tier,
                query,
                walk,
                witness,
                solvable,
                deviation,
            });
        }
    }
    Ok(QuerySuite {
        seed: spec.seed,
        cases,
    })
}

fn deviate(walk: &[String], world: &WorldModel, rng: &mut ChaCha8Rng) -> Option<Deviation> {
    let side_trips: Vec<(String, String)> = walk[1..walk.len() - 1]
        .iter()
        .flat_map(|at| {
            world
                .incident(at)
                .filter(|e| e.traversable)
                .filter_map(move |e| e.other(at))
                .filter(|n| !walk.iter().any(|w| w == n))
                .map(move |n| (at.clone(), n.to_string()))
        })
        .collect();
    if !side_trips.is_empty() && rng.random_bool(0.5) {
        let (at, via) = side_trips.choose(rng)?.clone();
        return Some(Deviation::Detour {
            at,
            via,
            linger_s: rng.random_range(20.0..45.0),
        });
    }
    let factor = rng.random_range(1.5..2.0);
    Some(Deviation::Speed {
        factor: if rng.random_bool(0.5) { factor } else { 1.0 / factor },
    })
}

fn time_walk(
    walk: &[String],
    world: &WorldModel,
    behavior: &Behavior,
    deviation: Option<&Deviation>,
    rng: &mut ChaCha8Rng,
) -> TargetTrajectory {
    let jitter = behavior.speed_jitter.clamp(0.0, 0.9);
    let mut v = behavior.speed_mps * rng.random_range(1.0 - jitter..=1.0 + jitter);
    if let Some(Deviation::Speed { factor }) = deviation {
        v *= factor;
    }
    let hop = |a: &str, b: &str| world.edge_between(a, b).map_or(1.0, |e| e.length_m);
    let mut t = 0.0;
    let mut out = vec![Waypoint {
        node: walk[0].clone(),
        t_s: 0.0,
    }];
    for (i, pair) in walk.windows(2).enumerate() {
        t += hop(&pair[0], &pair[1]) / v;
        out.push(Waypoint {
            node: pair[1].clone(),
            t_s: t,
        });
        if i + 2 == walk.len() {
            break;
        }
        if let Some(Deviation::Detour { at, via, linger_s }) = deviation {
            if *at == pair[1] {
                t += hop(at, via) / v;
                out.push(Waypoint {
                    node: via.clone(),
                    t_s: t,
                });
                t += linger_s;
                out.push(Waypoint {
                    node: via.clone(),
                    t_s: t,
                });
                t += hop(via, at) / v;
                out.push(Waypoint {
                    node: at.clone(),
                    t_s: t,
                });
            }
        }
        if rng.random_bool(behavior.pause_prob.clamp(0.0, 1.0)) {
            let (lo, hi) = behavior.pause_s;
            t += if hi > lo { rng.random_range(lo..hi) } else { lo.max(0.0) };
            out.push(Waypoint {
                node: pair[1].clone(),
                t_s: t,
            });
        }
    }
    TargetTrajectory::new(out)
}
