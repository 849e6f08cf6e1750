use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ScheduleError;
use crate::world::{shortest_path, Path, WorldModel};

/// Nodes to see and, per sensor, which of them it sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverRequirement {
    pub universe: Vec<String>,
    pub candidates: BTreeMap<String, BTreeSet<String>>,
}

impl CoverRequirement {
    /// Candidates from the world's coverage index. Duplicate universe
    /// entries are dropped, order kept.
    pub fn from_coverage<'a>(universe: impl IntoIterator<Item = &'a String>, world: &WorldModel) -> Self {
        let mut seen = BTreeSet::new();
        let universe: Vec<String> = universe
            .into_iter()
            .filter(|n| seen.insert(n.as_str()))
            .cloned()
            .collect();
        let mut candidates: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for n in &universe {
            for s in world.coverage_index().get(n).into_iter().flatten() {
                candidates.entry(s.clone()).or_default().insert(n.clone());
            }
        }
        CoverRequirement {
            universe,
            candidates,
        }
    }

    pub fn uncoverable(&self) -> Vec<String> {
        self.universe
            .iter()
            .filter(|n| !self.candidates.values().any(|c| c.contains(*n)))
            .cloned()
            .collect()
    }
}

/// Repeatedly take the sensor that sees the most still-unseen nodes; ties
/// go to the smaller id. Returned in pick order.
pub fn greedy_set_cover(req: &CoverRequirement) -> Result<Vec<String>, ScheduleError> {
    let missing = req.uncoverable();
    if !missing.is_empty() {
        return Err(ScheduleError::Uncoverable { nodes: missing });
    }
    let mut open: BTreeSet<&str> = req.universe.iter().map(String::as_str).collect();
    let mut picks = Vec::new();
    while !open.is_empty() {
        let mut best: Option<(&String, usize)> = None;
        for (s, covers) in &req.candidates {
            let gain = covers.iter().filter(|n| open.contains(n.as_str())).count();
            if gain > best.map_or(0, |b| b.1) {
                best = Some((s, gain));
            }
        }
        let (s, _) = best.expect("coverable universe always has a positive gain");
        for n in &req.candidates[s] {
            open.remove(n.as_str());
        }
        picks.push(s.clone());
    }
    Ok(picks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCover {
    pub path: Path,
    pub sensors: Vec<String>,
    /// Path nodes no sensor can see.
    pub gaps: Vec<String>,
}

/// Shortest traversable path from `a` to `b` and a greedy cover of its
/// observable nodes.
pub fn indoor_path_camera_search(a: &str, b: &str, world: &WorldModel) -> Result<PathCover, ScheduleError> {
    let path = shortest_path(a, b, world)?.ok_or_else(|| ScheduleError::Disconnected {
        from: a.to_string(),
        to: b.to_string(),
    })?;
    let (sensors, gaps) = cover_observable(&path.nodes, world)?;
    Ok(PathCover { path, sensors, gaps })
}

/// Cover whichever of `nodes` are observable; report the rest.
pub(crate) fn cover_observable(nodes: &[String], world: &WorldModel) -> Result<(Vec<String>, Vec<String>), ScheduleError> {
    let (seen, gaps): (Vec<&String>, Vec<&String>) = nodes.iter().partition(|n| world.is_covered(n));
    let mut dedup = BTreeSet::new();
    let gaps = gaps.into_iter().filter(|g| dedup.insert(*g)).cloned().collect();
    let sensors = if seen.is_empty() {
        Vec::new()
    } else {
        greedy_set_cover(&CoverRequirement::from_coverage(seen, world))?
    };
    Ok((sensors, gaps))
}
