use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{EdgeKind, NodeKind, SensorKind};

pub const CRS_SITE_LOCAL: &str = "site-local-cartesian-meters";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldMeta {
    pub name: String,
    pub crs: String,
}

impl Default for WorldMeta {
    fn default() -> Self {
        WorldMeta {
            name: "world".into(),
            crs: CRS_SITE_LOCAL.into(),
        }
    }
}

/// On-disk world document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldFile {
    pub meta: WorldMeta,
    pub nodes: Vec<NodeRecord>,
    #[serde(default)]
    pub edges: Vec<EdgeRecord>,
    #[serde(default)]
    pub sensors: Vec<SensorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub building: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<i32>,
    pub pos: [f64; 2],
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: String,
    pub b: String,
    pub kind: EdgeKind,
    pub traversable: bool,
    pub length_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRecord {
    pub id: String,
    pub kind: SensorKind,
    pub node: String,
    pub pos: [f64; 2],
    pub heading_deg: f64,
    pub fov_deg: f64,
    pub range_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covers: Option<Vec<String>>,
}

const TOP: &[&str] = &["meta", "nodes", "edges", "sensors"];
const META: &[&str] = &["name", "crs"];
const NODE: &[&str] = &["id", "name", "kind", "building", "floor", "pos", "tags"];
const EDGE: &[&str] = &["a", "b", "kind", "traversable", "length_m"];
const SENSOR: &[&str] = &[
    "id",
    "kind",
    "node",
    "pos",
    "heading_deg",
    "fov_deg",
    "range_m",
    "covers",
];

/// Keys not part of the world schema, as human-readable messages.
pub(crate) fn unknown_keys(doc: &Value) -> Vec<String> {
    let mut out = Vec::new();
    let Some(top) = doc.as_object() else {
        return out;
    };
    check(top, TOP, "top level", &mut out);
    if let Some(meta) = top.get("meta").and_then(Value::as_object) {
        check(meta, META, "meta", &mut out);
    }
    for (section, allowed) in [("nodes", NODE), ("edges", EDGE), ("sensors", SENSOR)] {
        if let Some(items) = top.get(section).and_then(Value::as_array) {
            for (i, item) in items.iter().enumerate() {
                if let Some(obj) = item.as_object() {
                    check(obj, allowed, &format!("{section}[{i}]"), &mut out);
                }
            }
        }
    }
    out
}

fn check(
    obj: &serde_json::Map<String, Value>,
    allowed: &[&str],
    at: &str,
    out: &mut Vec<String>,
) {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            out.push(format!("unknown key {key:?} at {at}"));
        }
    }
}
