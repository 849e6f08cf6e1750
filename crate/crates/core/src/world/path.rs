use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::{WorldError, WorldModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<String>,
    pub length_m: f64,
}

/// Which edges a search may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Traversal {
    /// Only edges flagged traversable: what can physically be walked now.
    Traversable,
    /// Every edge regardless of its flag: the floor-plan prior a planner
    /// reasons over before anything is verified.
    Topological,
}

/// Minimum-length path over traversable edges.
///
/// Ties on length are broken by the lexicographically smallest node-id
/// sequence. Lengths are summed from the start node in path order.
pub fn shortest_path(a: &str, b: &str, world: &WorldModel) -> Result<Option<Path>, WorldError> {
    shortest_path_with(a, b, world, Traversal::Traversable)
}

pub fn shortest_path_with(
    a: &str,
    b: &str,
    world: &WorldModel,
    mode: Traversal,
) -> Result<Option<Path>, WorldError> {
    world.require_node(a)?;
    world.require_node(b)?;

    let mut heap = BinaryHeap::new();
    let mut settled: BTreeSet<String> = BTreeSet::new();
    heap.push(Label {
        dist: 0.0,
        nodes: vec![a.to_string()],
    });
    while let Some(label) = heap.pop() {
        let here = label.nodes.last().expect("non-empty label").clone();
        if !settled.insert(here.clone()) {
            continue;
        }
        if here == b {
            return Ok(Some(Path {
                nodes: label.nodes,
                length_m: label.dist,
            }));
        }
        for e in world.incident(&here) {
            if mode == Traversal::Traversable && !e.traversable {
                continue;
            }
            let next = e.other(&here).expect("incident edge");
            if settled.contains(next) {
                continue;
            }
            let mut nodes = label.nodes.clone();
            nodes.push(next.to_string());
            heap.push(Label {
                dist: label.dist + e.length_m,
                nodes,
            });
        }
    }
    Ok(None)
}

/// Search label ordered so that `BinaryHeap` pops the smallest
/// (length, node sequence) first.
struct Label {
    dist: f64,
    nodes: Vec<String>,
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.nodes.cmp(&self.nodes))
    }
}
