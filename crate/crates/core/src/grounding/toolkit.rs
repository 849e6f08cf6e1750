//! Deterministic queries over the world model. Every call result can be
//! wrapped as [`Evidence`] and replayed later.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::world::{shortest_path, NodeKind, Path, WorldError, WorldModel};

/// A toolkit observation, tied to the world it was made against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub toolkit_op: String,
    pub inputs: Value,
    pub result: Value,
    pub world_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ToolCall {
    DoorsVerify { scope: BTreeSet<String> },
    PathTraversable { a: String, b: String },
    FacilityExists { scope: BTreeSet<String>, tag: String },
    ResolveAmbiguity {
        candidates: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<String>,
        toward: String,
    },
    SensorsCovering { node: String },
}

impl ToolCall {
    pub fn op_name(&self) -> &'static str {
        match self {
            ToolCall::DoorsVerify { .. } => "doors_verify",
            ToolCall::PathTraversable { .. } => "path_traversable",
            ToolCall::FacilityExists { .. } => "facility_exists",
            ToolCall::ResolveAmbiguity { .. } => "resolve_ambiguity",
            ToolCall::SensorsCovering { .. } => "sensors_covering",
        }
    }

    /// The location a fact is filed under in spatial memory.
    pub fn location_key(&self, world: &WorldModel) -> String {
        match self {
            ToolCall::DoorsVerify { scope } | ToolCall::FacilityExists { scope, .. } => {
                scope_label(scope, world)
            }
            ToolCall::PathTraversable { a, .. } => a.clone(),
            ToolCall::ResolveAmbiguity { toward, .. } => toward.clone(),
            ToolCall::SensorsCovering { node } => node.clone(),
        }
    }

    pub fn execute(&self, world: &WorldModel) -> Result<Value, WorldError> {
        let value = match self {
            ToolCall::DoorsVerify { scope } => serde_json::to_value(doors_verify(scope, world)?),
            ToolCall::PathTraversable { a, b } => {
                serde_json::to_value(path_traversable(a, b, world)?)
            }
            ToolCall::FacilityExists { scope, tag } => {
                serde_json::to_value(facility_exists(scope, tag, world)?)
            }
            ToolCall::ResolveAmbiguity { candidates, from, toward } => {
                serde_json::to_value(resolve_ambiguity(candidates, from.as_deref(), toward, world)?)
            }
            ToolCall::SensorsCovering { node } => {
                serde_json::to_value(world.sensors_covering(node)?)
            }
        };
        Ok(value.expect("toolkit results serialize"))
    }

    pub fn evidence(&self, world: &WorldModel) -> Result<Evidence, WorldError> {
        Ok(Evidence {
            toolkit_op: self.op_name().to_string(),
            inputs: serde_json::to_value(self).expect("tool call serializes"),
            result: self.execute(world)?,
            world_digest: world.digest().to_string(),
        })
    }
}

/// Scopes that are exactly one building's non-door nodes are filed under
/// the building name.
fn scope_label(scope: &BTreeSet<String>, world: &WorldModel) -> String {
    let buildings: BTreeSet<Option<&str>> = scope
        .iter()
        .map(|id| world.node(id).and_then(|n| n.building.as_deref()))
        .collect();
    match buildings.into_iter().collect::<Vec<_>>().as_slice() {
        [Some(b)] => format!("building:{b}"),
        _ => scope.iter().cloned().collect::<Vec<_>>().join(","),
    }
}

/// Re-run the call recorded in `evidence` and compare results.
pub fn replay(evidence: &Evidence, world: &WorldModel) -> Result<bool, WorldError> {
    let Ok(call) = serde_json::from_value::<ToolCall>(evidence.inputs.clone()) else {
        return Ok(false);
    };
    Ok(call.op_name() == evidence.toolkit_op
        && evidence.world_digest == world.digest()
        && call.execute(world)? == evidence.result)
}

fn require_all<'a>(
    scope: impl IntoIterator<Item = &'a String>,
    world: &WorldModel,
) -> Result<(), WorldError> {
    for id in scope {
        world.require_node(id)?;
    }
    Ok(())
}

/// Door nodes joined by a traversable edge to some other node of `scope`,
/// sorted by id.
pub fn doors_verify(scope: &BTreeSet<String>, world: &WorldModel) -> Result<Vec<String>, WorldError> {
    require_all(scope, world)?;
    let mut doors = BTreeSet::new();
    for id in scope {
        for e in world.incident(id).filter(|e| e.traversable) {
            let other = e.other(id).expect("incident edge");
            if world.node(other).is_some_and(|n| n.kind == NodeKind::Door) {
                doors.insert(other.to_string());
            }
        }
    }
    Ok(doors.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalVerdict {
    pub traversable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Path>,
}

pub fn path_traversable(a: &str, b: &str, world: &WorldModel) -> Result<TraversalVerdict, WorldError> {
    world.require_node(a)?;
    world.require_node(b)?;
    let direct = world
        .incident(a)
        .filter(|e| e.traversable && e.other(a) == Some(b))
        .map(|e| e.length_m)
        .min_by(f64::total_cmp);
    let path = match direct {
        Some(length_m) if a != b => Some(Path {
            nodes: vec![a.to_string(), b.to_string()],
            length_m,
        }),
        _ => shortest_path(a, b, world)?,
    };
    Ok(TraversalVerdict {
        traversable: path.is_some(),
        path,
    })
}

/// Nodes of `scope` carrying `tag`, sorted by id.
pub fn facility_exists(
    scope: &BTreeSet<String>,
    tag: &str,
    world: &WorldModel,
) -> Result<Vec<String>, WorldError> {
    require_all(scope, world)?;
    Ok(scope
        .iter()
        .filter(|id| world.node(id).is_some_and(|n| n.tags.contains(tag)))
        .cloned()
        .collect())
}

/// Outcome of a topological-consistency check between candidate exits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Resolution {
    Chosen { node: String, length_m: f64 },
    NoSurvivor,
}

/// Keep the candidates with a traversable path to `next_waypoint`, then
/// pick the shortest; ties go to the smaller id.
pub fn resolve_ambiguity(
    candidates: &[String],
    from: Option<&str>,
    next_waypoint: &str,
    world: &WorldModel,
) -> Result<Resolution, WorldError> {
    let mut best: Option<(f64, &String)> = None;
    for c in candidates {
        let lead_in = match from {
            Some(f) => match shortest_path(f, c, world)? {
                Some(p) => p.length_m,
                None => continue,
            },
            None => 0.0,
        };
        if let Some(p) = shortest_path(c, next_waypoint, world)? {
            let len = lead_in + p.length_m;
            let better = match best {
                None => true,
                Some((l, id)) => len < l || (len == l && c < id),
            };
            if better {
                best = Some((len, c));
            }
        }
    }
    Ok(match best {
        Some((length_m, node)) => Resolution::Chosen {
            node: node.clone(),
            length_m,
        },
        None => Resolution::NoSurvivor,
    })
}
