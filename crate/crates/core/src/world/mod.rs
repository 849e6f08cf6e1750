//! The topological world model: a spatial graph of locations, a set of
//! cameras, and the visibility links between them.
//!
//! A [`WorldModel`] is built once (from a JSON world file or a generator)
//! and is immutable afterwards. Every downstream stage reads it through
//! shared references.

mod coverage;
mod format;
mod path;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coverage::derive_coverage;
pub use format::{EdgeRecord, NodeRecord, SensorRecord, WorldFile, WorldMeta, CRS_SITE_LOCAL};
pub use path::{shortest_path, shortest_path_with, Path, Traversal};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("malformed world file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid world: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Room,
    Corridor,
    Door,
    Elevator,
    Stair,
    OutdoorSegment,
}

impl NodeKind {
    /// Doors, elevators and stairs only make sense when something connects
    /// to them.
    pub fn is_connector(self) -> bool {
        matches!(self, NodeKind::Door | NodeKind::Elevator | NodeKind::Stair)
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, NodeKind::Elevator | NodeKind::Stair)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    IntraFloor,
    Vertical,
    IndoorOutdoor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Camera,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialNode {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
    pub building: Option<String>,
    pub floor: Option<i32>,
    pub pos: [f64; 2],
    pub tags: BTreeSet<String>,
}

impl SpatialNode {
    /// Same building and floor, which is the frame in which 2-D positions
    /// are comparable.
    pub fn same_level(&self, other: &SpatialNode) -> bool {
        self.building == other.building && self.floor == other.floor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialEdge {
    pub a: String,
    pub b: String,
    pub kind: EdgeKind,
    pub traversable: bool,
    pub length_m: f64,
}

impl SpatialEdge {
    pub fn other(&self, id: &str) -> Option<&str> {
        if self.a == id {
            Some(&self.b)
        } else if self.b == id {
            Some(&self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub id: String,
    pub kind: SensorKind,
    pub node: String,
    pub pos: [f64; 2],
    pub heading_deg: f64,
    pub fov_deg: f64,
    pub range_m: f64,
    pub covers: BTreeSet<String>,
}

/// Validated, immutable world model.
#[derive(Debug, Clone)]
pub struct WorldModel {
    meta: WorldMeta,
    nodes: BTreeMap<String, SpatialNode>,
    edges: Vec<SpatialEdge>,
    adjacency: BTreeMap<String, Vec<usize>>,
    sensors: BTreeMap<String, Sensor>,
    coverage_index: BTreeMap<String, BTreeSet<String>>,
    digest: String,
}

impl PartialEq for WorldModel {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest && self.to_file() == other.to_file()
    }
}

/// Parse and validate a world document. Unknown keys are ignored.
pub fn load_world(document: &[u8]) -> Result<WorldModel, WorldError> {
    load_world_with(document, false)
}

/// Parse and validate a world document; in strict mode unknown keys are
/// reported as validation errors.
pub fn load_world_with(document: &[u8], strict: bool) -> Result<WorldModel, WorldError> {
    let value: serde_json::Value = serde_json::from_slice(document)?;
    if strict {
        let unknown = format::unknown_keys(&value);
        if !unknown.is_empty() {
            return Err(WorldError::Invalid(unknown));
        }
    }
    let file: WorldFile = serde_json::from_value(value)?;
    WorldModel::from_file(file)
}

impl WorldModel {
    pub fn from_file(file: WorldFile) -> Result<Self, WorldError> {
        let mut problems = Vec::new();

        let mut nodes = BTreeMap::new();
        for rec in file.nodes {
            if !rec.pos.iter().all(|c| c.is_finite()) {
                problems.push(format!("node {:?} has non-finite position", rec.id));
            }
            if nodes.contains_key(&rec.id) {
                problems.push(format!("duplicate node id {:?}", rec.id));
                continue;
            }
            let node = SpatialNode {
                id: rec.id.clone(),
                name: rec.name,
                kind: rec.kind,
                building: rec.building,
                floor: rec.floor,
                pos: rec.pos,
                tags: rec.tags.into_iter().collect(),
            };
            nodes.insert(rec.id, node);
        }

        let mut edges: Vec<SpatialEdge> = Vec::new();
        let mut pairs = BTreeSet::new();
        for rec in file.edges {
            let mut ok = true;
            if rec.a == rec.b {
                problems.push(format!("self-loop edge on {:?}", rec.a));
                ok = false;
            }
            for end in [&rec.a, &rec.b] {
                if !nodes.contains_key(end) {
                    problems.push(format!("edge references unknown node {end:?}"));
                    ok = false;
                }
            }
            if !(rec.length_m.is_finite() && rec.length_m > 0.0) {
                problems.push(format!(
                    "edge {:?}-{:?} has non-positive or non-finite length",
                    rec.a, rec.b
                ));
                ok = false;
            }
            let key = if rec.a <= rec.b {
                (rec.a.clone(), rec.b.clone())
            } else {
                (rec.b.clone(), rec.a.clone())
            };
            if !pairs.insert(key) {
                problems.push(format!("parallel edge between {:?} and {:?}", rec.a, rec.b));
                ok = false;
            }
            if ok {
                edges.push(SpatialEdge {
                    a: rec.a,
                    b: rec.b,
                    kind: rec.kind,
                    traversable: rec.traversable,
                    length_m: rec.length_m,
                });
            }
        }

        let mut adjacency: BTreeMap<String, Vec<usize>> =
            nodes.keys().map(|id| (id.clone(), Vec::new())).collect();
        for (i, e) in edges.iter().enumerate() {
            if let Some(list) = adjacency.get_mut(&e.a) {
                list.push(i);
            }
            if let Some(list) = adjacency.get_mut(&e.b) {
                list.push(i);
            }
        }
        for node in nodes.values() {
            if node.kind.is_connector() && adjacency[&node.id].is_empty() {
                problems.push(format!("connector node {:?} has no incident edge", node.id));
            }
        }

        let mut sensors = BTreeMap::new();
        let mut pending_geometry = Vec::new();
        for rec in file.sensors {
            if nodes.contains_key(&rec.id) {
                problems.push(format!("sensor id {:?} collides with a node id", rec.id));
            }
            if sensors.contains_key(&rec.id) {
                problems.push(format!("duplicate sensor id {:?}", rec.id));
                continue;
            }
            if !nodes.contains_key(&rec.node) {
                problems.push(format!(
                    "sensor {:?} mounted on unknown node {:?}",
                    rec.id, rec.node
                ));
            }
            if !rec.pos.iter().all(|c| c.is_finite()) {
                problems.push(format!("sensor {:?} has non-finite position", rec.id));
            }
            if !(rec.heading_deg.is_finite() && (0.0..360.0).contains(&rec.heading_deg)) {
                problems.push(format!("sensor {:?} heading outside [0, 360)", rec.id));
            }
            if !(rec.fov_deg > 0.0 && rec.fov_deg <= 180.0) {
                problems.push(format!("sensor {:?} fov outside (0, 180]", rec.id));
            }
            if !(rec.range_m.is_finite() && rec.range_m > 0.0) {
                problems.push(format!("sensor {:?} range must be positive", rec.id));
            }
            let explicit = rec.covers.is_some();
            let covers: BTreeSet<String> = rec.covers.unwrap_or_default().into_iter().collect();
            for c in &covers {
                if !nodes.contains_key(c) {
                    problems.push(format!("sensor {:?} covers unknown node {c:?}", rec.id));
                }
            }
            if !explicit {
                pending_geometry.push(rec.id.clone());
            }
            sensors.insert(
                rec.id.clone(),
                Sensor {
                    id: rec.id,
                    kind: rec.kind,
                    node: rec.node,
                    pos: rec.pos,
                    heading_deg: rec.heading_deg,
                    fov_deg: rec.fov_deg,
                    range_m: rec.range_m,
                    covers,
                },
            );
        }

        if !problems.is_empty() {
            return Err(WorldError::Invalid(problems));
        }

        let mut world = WorldModel {
            meta: file.meta,
            nodes,
            edges,
            adjacency,
            sensors,
            coverage_index: BTreeMap::new(),
            digest: String::new(),
        };
        for id in pending_geometry {
            let covers = derive_coverage(&world.sensors[&id], &world);
            world.sensors.get_mut(&id).expect("sensor present").covers = covers;
        }
        world.coverage_index = world
            .nodes
            .keys()
            .map(|id| (id.clone(), BTreeSet::new()))
            .collect();
        for s in world.sensors.values() {
            for n in &s.covers {
                world
                    .coverage_index
                    .get_mut(n)
                    .expect("covers validated")
                    .insert(s.id.clone());
            }
        }
        let canonical = serde_json::to_vec(&world.to_file()).expect("world serializes");
        world.digest = crate::digest::sha256_hex(&canonical);
        Ok(world)
    }

    /// Canonical file representation; every sensor carries an explicit
    /// `covers` list.
    pub fn to_file(&self) -> WorldFile {
        WorldFile {
            meta: self.meta.clone(),
            nodes: self
                .nodes
                .values()
                .map(|n| NodeRecord {
                    id: n.id.clone(),
                    name: n.name.clone(),
                    kind: n.kind,
                    building: n.building.clone(),
                    floor: n.floor,
                    pos: n.pos,
                    tags: n.tags.iter().cloned().collect(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    a: e.a.clone(),
                    b: e.b.clone(),
                    kind: e.kind,
                    traversable: e.traversable,
                    length_m: e.length_m,
                })
                .collect(),
            sensors: self
                .sensors
                .values()
                .map(|s| SensorRecord {
                    id: s.id.clone(),
                    kind: s.kind,
                    node: s.node.clone(),
                    pos: s.pos,
                    heading_deg: s.heading_deg,
                    fov_deg: s.fov_deg,
                    range_m: s.range_m,
                    covers: Some(s.covers.iter().cloned().collect()),
                })
                .collect(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("world serializes")
    }

    pub fn meta(&self) -> &WorldMeta {
        &self.meta
    }

    /// SHA-256 of the canonical serialization.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SpatialNode> {
        self.nodes.values()
    }

    pub fn node(&self, id: &str) -> Option<&SpatialNode> {
        self.nodes.get(id)
    }

    pub fn require_node(&self, id: &str) -> Result<&SpatialNode, WorldError> {
        self.nodes
            .get(id)
            .ok_or_else(|| WorldError::UnknownNode(id.to_string()))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[SpatialEdge] {
        &self.edges
    }

    /// Edges incident to `id`, in insertion order.
    pub fn incident(&self, id: &str) -> impl Iterator<Item = &SpatialEdge> {
        self.adjacency
            .get(id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.edges[i])
    }

    pub fn edge_between(&self, a: &str, b: &str) -> Option<&SpatialEdge> {
        self.incident(a).find(|e| e.other(a) == Some(b))
    }

    pub fn sensors(&self) -> impl Iterator<Item = &Sensor> {
        self.sensors.values()
    }

    pub fn sensor(&self, id: &str) -> Option<&Sensor> {
        self.sensors.get(id)
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    /// Position of `id` in the sorted sensor list.
    pub fn sensor_index(&self, id: &str) -> Option<usize> {
        self.sensors.keys().position(|k| k == id)
    }

    /// Inverse visibility lookup. An empty set means the node is
    /// unobservable.
    pub fn sensors_covering(&self, node: &str) -> Result<&BTreeSet<String>, WorldError> {
        self.coverage_index
            .get(node)
            .ok_or_else(|| WorldError::UnknownNode(node.to_string()))
    }

    pub fn is_covered(&self, node: &str) -> bool {
        self.coverage_index.get(node).is_some_and(|s| !s.is_empty())
    }

    pub fn coverage_index(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.coverage_index
    }

    /// Node ids belonging to `building`, sorted.
    pub fn building_nodes(&self, building: &str) -> Vec<&SpatialNode> {
        self.nodes
            .values()
            .filter(|n| n.building.as_deref() == Some(building))
            .collect()
    }

    pub fn buildings(&self) -> BTreeSet<&str> {
        self.nodes
            .values()
            .filter_map(|n| n.building.as_deref())
            .collect()
    }
}

impl fmt::Display for WorldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} nodes, {} edges, {} sensors)",
            self.meta.name,
            self.nodes.len(),
            self.edges.len(),
            self.sensors.len()
        )
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn line_world_json() -> &'static str {
        r#"{
          "meta": {"name": "line", "crs": "site-local-cartesian-meters"},
          "nodes": [
            {"id": "n1", "name": "Node 1", "kind": "room", "pos": [0, 0], "tags": []},
            {"id": "n2", "name": "Node 2", "kind": "corridor", "pos": [5, 0], "tags": []},
            {"id": "n3", "name": "Node 3", "kind": "room", "pos": [10, 0], "tags": []}
          ],
          "edges": [
            {"a": "n1", "b": "n2", "kind": "intra_floor", "traversable": true, "length_m": 5},
            {"a": "n2", "b": "n3", "kind": "intra_floor", "traversable": true, "length_m": 5}
          ],
          "sensors": [
            {"id": "c1", "kind": "camera", "node": "n1", "pos": [0, 0], "heading_deg": 0,
             "fov_deg": 90, "range_m": 10, "covers": ["n1", "n2"]}
          ]
        }"#
    }

    pub fn line_world() -> WorldModel {
        load_world(line_world_json().as_bytes()).unwrap()
    }
}
