use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::world::{
    EdgeKind, EdgeRecord, NodeKind, NodeRecord, SensorKind, SensorRecord, WorldFile, WorldMeta, WorldModel,
};

const BUILDING_PITCH_M: f64 = 120.0;
const CORRIDOR_STEP_M: f64 = 10.0;
const ROOM_OFFSET_M: f64 = 8.0;
const OUTDOOR_Y_M: f64 = -30.0;
const ELEVATOR_RISE_M: f64 = 8.0;
const STAIR_RISE_M: f64 = 12.0;
const FACILITY_TAGS: &[&str] = &["study_desk", "printer", "vending", "lab_bench", "lounge"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampusSpec {
    pub buildings: usize,
    pub floors_per_building: usize,
    pub rooms_per_floor: usize,
    pub outdoor_segments: usize,
    /// Cameras mounted at each corridor node.
    pub cameras_per_corridor: usize,
    pub cameras_per_room: usize,
    /// Fraction of nodes no camera sees.
    pub coverage_gap_rate: f64,
    pub seed: u64,
}

impl Default for CampusSpec {
    fn default() -> Self {
        CampusSpec {
            buildings: 3,
            floors_per_building: 3,
            rooms_per_floor: 4,
            outdoor_segments: 6,
            cameras_per_corridor: 1,
            cameras_per_room: 1,
            coverage_gap_rate: 0.05,
            seed: 0,
        }
    }
}

impl CampusSpec {
    /// Node count of the generated world:
    /// `B * (2FR + (F > 1 ? 2F : 0) + 2) + O`.
    pub fn node_count(&self) -> usize {
        let (b, f, r) = (self.buildings, self.floors_per_building, self.rooms_per_floor);
        let vertical = if f > 1 { 2 * f } else { 0 };
        b * (2 * f * r + vertical + 2) + self.outdoor_segments
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if !(0.0..=1.0).contains(&self.coverage_gap_rate) {
            return Err(BenchError::InvalidSpec("coverage_gap_rate must lie in [0, 1]".into()));
        }
        if self.buildings > 0 && (self.floors_per_building == 0 || self.rooms_per_floor == 0) {
            return Err(BenchError::InvalidSpec(
                "a building needs at least one floor and one room per floor".into(),
            ));
        }
        if self.node_count() == 0 {
            return Err(BenchError::EmptyWorld);
        }
        Ok(())
    }
}

struct Builder {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    pos: BTreeMap<String, [f64; 2]>,
}

impl Builder {
    fn node(&mut self, id: String, name: String, kind: NodeKind, building: Option<(usize, usize)>, pos: [f64; 2]) {
        self.pos.insert(id.clone(), pos);
        self.nodes.push(NodeRecord {
            id,
            name,
            kind,
            building: building.map(|(b, _)| format!("B{b}")),
            floor: building.map(|(_, f)| f as i32),
            pos,
            tags: Vec::new(),
        });
    }

    fn edge(&mut self, a: &str, b: &str, kind: EdgeKind, length_m: Option<f64>) {
        let length_m = length_m.unwrap_or_else(|| {
            let (p, q) = (self.pos[a], self.pos[b]);
            (p[0] - q[0]).hypot(p[1] - q[1]).max(1.0)
        });
        self.edges.push(EdgeRecord {
            a: a.to_string(),
            b: b.to_string(),
            kind,
            traversable: true,
            length_m,
        });
    }
}

pub(crate) fn room_id(b: usize, f: usize, k: usize) -> String {
    format!("b{b}-f{f}-room{k}")
}

pub(crate) fn corridor_id(b: usize, f: usize, k: usize) -> String {
    format!("b{b}-f{f}-c{k}")
}

pub(crate) fn door_id(b: usize, east: bool) -> String {
    format!("b{b}-door-{}", if east { "e" } else { "w" })
}

fn outdoor_id(j: usize) -> String {
    format!("out-{j}")
}

/// Seeded campus: per building, floors of a corridor chain with one room
/// off each corridor node, an elevator at the west end and a stair at the
/// east end when there is more than one floor, and a west and east door on
/// the ground floor leading to a chain of outdoor segments. Cameras see
/// their mount node and its same-level neighbours.
pub fn gen_campus(spec: &CampusSpec) -> Result<WorldModel, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (nb, nf, nr, no) = (
        spec.buildings,
        spec.floors_per_building,
        spec.rooms_per_floor,
        spec.outdoor_segments,
    );
    let mut w = Builder {
        nodes: Vec::new(),
        edges: Vec::new(),
        pos: BTreeMap::new(),
    };
    let east_x = CORRIDOR_STEP_M * (nr.max(1) - 1) as f64 + 5.0;

    for b in 1..=nb {
        let ox = (b - 1) as f64 * BUILDING_PITCH_M;
        for f in 1..=nf {
            let at = Some((b, f));
            for k in 1..=nr {
                let x = ox + CORRIDOR_STEP_M * (k - 1) as f64;
                w.node(corridor_id(b, f, k), format!("B{b} F{f} Corridor {k}"), NodeKind::Corridor, at, [x, 0.0]);
                w.node(room_id(b, f, k), format!("B{b} F{f} Room {k}"), NodeKind::Room, at, [x, ROOM_OFFSET_M]);
                w.edge(&corridor_id(b, f, k), &room_id(b, f, k), EdgeKind::IntraFloor, None);
                if k > 1 {
                    w.edge(&corridor_id(b, f, k - 1), &corridor_id(b, f, k), EdgeKind::IntraFloor, None);
                }
            }
            if nf > 1 {
                let elev = format!("b{b}-f{f}-elev");
                let stair = format!("b{b}-f{f}-stair");
                w.node(elev.clone(), format!("B{b} F{f} Elevator"), NodeKind::Elevator, at, [ox - 5.0, 0.0]);
                w.node(stair.clone(), format!("B{b} F{f} Stair"), NodeKind::Stair, at, [ox + east_x, 0.0]);
                w.edge(&corridor_id(b, f, 1), &elev, EdgeKind::IntraFloor, None);
                w.edge(&corridor_id(b, f, nr), &stair, EdgeKind::IntraFloor, None);
                if f > 1 {
                    w.edge(&format!("b{b}-f{}-elev", f - 1), &elev, EdgeKind::Vertical, Some(ELEVATOR_RISE_M));
                    w.edge(&format!("b{b}-f{}-stair", f - 1), &stair, EdgeKind::Vertical, Some(STAIR_RISE_M));
                }
            }
        }
        let ground = Some((b, 1));
        w.node(door_id(b, false), format!("B{b} West Door"), NodeKind::Door, ground, [ox - 5.0, -5.0]);
        w.node(door_id(b, true), format!("B{b} East Door"), NodeKind::Door, ground, [ox + east_x, -5.0]);
        w.edge(&corridor_id(b, 1, 1), &door_id(b, false), EdgeKind::IntraFloor, None);
        w.edge(&corridor_id(b, 1, nr), &door_id(b, true), EdgeKind::IntraFloor, None);
    }

    // outdoor chain spread across the campus frontage
    let span_hi = (nb.max(1) - 1) as f64 * BUILDING_PITCH_M + east_x;
    for j in 0..no {
        let x = if no == 1 {
            0.0
        } else {
            -5.0 + (span_hi + 5.0) * j as f64 / (no - 1) as f64
        };
        w.node(outdoor_id(j), format!("Outdoor {}", j + 1), NodeKind::OutdoorSegment, None, [x, OUTDOOR_Y_M]);
        if j > 0 {
            w.edge(&outdoor_id(j - 1), &outdoor_id(j), EdgeKind::IndoorOutdoor, None);
        }
    }
    if no > 0 {
        for b in 1..=nb {
            w.edge(&door_id(b, false), &outdoor_id((2 * (b - 1)) % no), EdgeKind::IndoorOutdoor, None);
            w.edge(&door_id(b, true), &outdoor_id((2 * (b - 1) + 1) % no), EdgeKind::IndoorOutdoor, None);
        }
    }

    for n in w.nodes.iter_mut().filter(|n| n.kind == NodeKind::Room) {
        if rng.random_bool(0.5) {
            n.tags.push(FACILITY_TAGS.choose(&mut rng).expect("tags").to_string());
        }
    }

    // same-level neighbours
    let mut near: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for e in w.edges.iter().filter(|e| e.kind != EdgeKind::Vertical) {
        near.entry(e.a.as_str()).or_default().insert(e.b.clone());
        near.entry(e.b.as_str()).or_default().insert(e.a.clone());
    }
    let mut ids: Vec<String> = w.nodes.iter().map(|n| n.id.clone()).collect();
    ids.shuffle(&mut rng);
    let gap_count = (spec.coverage_gap_rate * ids.len() as f64).round() as usize;
    let gaps: BTreeSet<String> = ids.into_iter().take(gap_count).collect();

    let mut sensors = Vec::new();
    for n in &w.nodes {
        let per = match n.kind {
            NodeKind::Corridor | NodeKind::OutdoorSegment => spec.cameras_per_corridor,
            NodeKind::Room => spec.cameras_per_room,
            _ => 0,
        };
        for c in 1..=per {
            let mut covers: BTreeSet<String> = near.get(n.id.as_str()).cloned().unwrap_or_default();
            covers.insert(n.id.clone());
            covers.retain(|id| !gaps.contains(id));
            sensors.push(SensorRecord {
                id: format!("cam-{}-{c}", n.id),
                kind: SensorKind::Camera,
                node: n.id.clone(),
                pos: n.pos,
                heading_deg: 0.0,
                fov_deg: 90.0,
                range_m: 15.0,
                covers: Some(covers.into_iter().collect()),
            });
        }
    }

    let file = WorldFile {
        meta: WorldMeta {
            name: format!("campus-{}x{}x{}-seed{}", nb, nf, nr, spec.seed),
            ..WorldMeta::default()
        },
        nodes: w.nodes,
        edges: w.edges,
        sensors,
    };
    Ok(WorldModel::from_file(file)?)
}

/// Closes one door per building (every edge at it becomes untraversable),
/// never the last open one. Returns the world and the closed door ids.
pub fn lock_doors(world: &WorldModel, seed: u64) -> Result<(WorldModel, Vec<String>), BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut file = world.to_file();
    let mut locked = Vec::new();
    for b in world.buildings() {
        let doors: Vec<&str> = world
            .building_nodes(b)
            .into_iter()
            .filter(|n| n.kind == NodeKind::Door)
            .map(|n| n.id.as_str())
            .collect();
        if doors.len() < 2 {
            continue;
        }
        let pick = doors[rng.random_range(0..doors.len())];
        locked.push(pick.to_string());
    }
    for e in &mut file.edges {
        if locked.iter().any(|d| *d == e.a || *d == e.b) {
            e.traversable = false;
        }
    }
    file.meta.name = format!("{}-locked", file.meta.name);
    Ok((WorldModel::from_file(file)?, locked))
}
