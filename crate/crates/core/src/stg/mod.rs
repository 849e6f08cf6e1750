//! The spatial trajectory graph: relevant locations, a witness walk through
//! them, the hypotheses that walk rests on, and (once compiled) the
//! per-node sensor directives.

mod objective;
mod plan;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::Evidence;
use crate::world::{shortest_path, WorldError, WorldModel};

pub use objective::{evaluate_objective, nominal_witness, ObjectiveParams, Score, WitnessWindow};
pub use plan::{
    induced_plan, plan_from_directives, walk_arcs, ActivationPlan, Interval, NodeDirective,
    Trigger, NOMINAL_SPEED_MPS,
};

#[derive(Debug, Error)]
pub enum StgError {
    #[error("ungrounded graph: refusing to commit an unverified plan")]
    Ungrounded,
    #[error("no directive for walk node {0:?}")]
    MissingDirective(String),
    #[error("witness window for {node:?} is empty or inverted")]
    InvalidWindow { node: String },
    #[error("hypothesis {id} already resolved")]
    AlreadyResolved { id: String },
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HypothesisKind {
    /// The building transition at `door` has a usable exit toward `toward`.
    ValidExit {
        scope: BTreeSet<String>,
        toward: String,
        door: String,
    },
    PathTraversable {
        a: String,
        b: String,
    },
    FacilityExists {
        scope: BTreeSet<String>,
        tag: String,
    },
    CoverageAvailable {
        node: String,
    },
}

impl HypothesisKind {
    pub fn label(&self) -> &'static str {
        match self {
            HypothesisKind::ValidExit { .. } => "valid_exit",
            HypothesisKind::PathTraversable { .. } => "path_traversable",
            HypothesisKind::FacilityExists { .. } => "facility_exists",
            HypothesisKind::CoverageAvailable { .. } => "coverage_available",
        }
    }

    /// Every node id the proposition mentions.
    pub fn nodes(&self) -> Vec<&str> {
        match self {
            HypothesisKind::ValidExit {
                scope,
                toward,
                door,
            } => scope
                .iter()
                .map(String::as_str)
                .chain([toward.as_str(), door.as_str()])
                .collect(),
            HypothesisKind::PathTraversable { a, b } => vec![a, b],
            HypothesisKind::FacilityExists { scope, .. } => {
                scope.iter().map(String::as_str).collect()
            }
            HypothesisKind::CoverageAvailable { node } => vec![node],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum HypothesisStatus {
    Unverified,
    Verified { evidence: Evidence },
    Refuted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    pub kind: HypothesisKind,
    pub status: HypothesisStatus,
}

impl Hypothesis {
    pub fn new(id: impl Into<String>, kind: HypothesisKind) -> Self {
        Hypothesis {
            id: id.into(),
            kind,
            status: HypothesisStatus::Unverified,
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self.status, HypothesisStatus::Verified { .. })
    }

    pub fn is_unverified(&self) -> bool {
        matches!(self.status, HypothesisStatus::Unverified)
    }

    pub fn verify(&mut self, evidence: Evidence) -> Result<(), StgError> {
        self.transition(HypothesisStatus::Verified { evidence })
    }

    pub fn refute(&mut self, reason: impl Into<String>) -> Result<(), StgError> {
        self.transition(HypothesisStatus::Refuted {
            reason: reason.into(),
        })
    }

    fn transition(&mut self, to: HypothesisStatus) -> Result<(), StgError> {
        if !self.is_unverified() {
            return Err(StgError::AlreadyResolved {
                id: self.id.clone(),
            });
        }
        self.status = to;
        Ok(())
    }
}

/// Atomic operation attached to a walk node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Subtask {
    Observe,
    Traverse,
    CoverArea {
        area: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        facility: Option<String>,
    },
}

impl Subtask {
    pub fn observes(&self) -> bool {
        !matches!(self, Subtask::Traverse)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStep {
    pub subtask: Subtask,
    /// Anchored to a query reference; repairs may not move it.
    pub pinned: bool,
}

/// `G = (V, E, tau_V, sigma)` plus the hypotheses its walk depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stg {
    #[serde(rename = "V")]
    pub nodes: BTreeSet<String>,
    #[serde(rename = "E")]
    pub edges: BTreeSet<(String, String)>,
    #[serde(rename = "tau_V")]
    pub tau_v: Vec<String>,
    pub steps: Vec<WalkStep>,
    pub sigma: BTreeMap<String, NodeDirective>,
    pub hypotheses: Vec<Hypothesis>,
    #[serde(default)]
    pub start_time_s: f64,
}

impl Stg {
    /// A hypothesized graph over `walk`: V holds the walk plus `extra`
    /// candidates, E the consecutive walk pairs, sigma is empty.
    pub fn hypothesized(
        walk: Vec<String>,
        steps: Vec<WalkStep>,
        extra: impl IntoIterator<Item = String>,
        hypotheses: Vec<Hypothesis>,
        start_time_s: f64,
    ) -> Self {
        let mut stg = Stg {
            nodes: extra.into_iter().collect(),
            edges: BTreeSet::new(),
            tau_v: Vec::new(),
            steps: Vec::new(),
            sigma: BTreeMap::new(),
            hypotheses,
            start_time_s,
        };
        stg.set_walk(walk, steps);
        stg
    }

    /// Replace the witness walk, extending V and E to contain it.
    pub fn set_walk(&mut self, walk: Vec<String>, steps: Vec<WalkStep>) {
        debug_assert_eq!(walk.len(), steps.len());
        self.nodes.extend(walk.iter().cloned());
        self.edges = walk
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        self.tau_v = walk;
        self.steps = steps;
    }

    pub fn hypothesis(&self, id: &str) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.id == id)
    }

    /// Structural checks: tau_V within V, consecutive pairs in E, aligned
    /// step annotations.
    pub fn is_well_formed(&self) -> bool {
        !self.tau_v.is_empty()
            && self.tau_v.len() == self.steps.len()
            && self.tau_v.iter().all(|n| self.nodes.contains(n))
            && self
                .tau_v
                .windows(2)
                .all(|w| self.edges.contains(&(w[0].clone(), w[1].clone())))
    }

    /// Attach compiled directives as sigma.
    pub fn with_directives<'a>(mut self, directives: impl IntoIterator<Item = &'a NodeDirective>) -> Self {
        self.sigma = directives
            .into_iter()
            .map(|d| (d.node.clone(), d.clone()))
            .collect();
        self
    }
}

/// True iff every hypothesis is verified and every consecutive walk pair
/// is joined by a traversable path in `world`.
pub fn is_grounded(stg: &Stg, world: &WorldModel) -> bool {
    if !stg.is_well_formed() || !stg.hypotheses.iter().all(Hypothesis::is_verified) {
        return false;
    }
    stg.tau_v
        .windows(2)
        .all(|w| matches!(shortest_path(&w[0], &w[1], world), Ok(Some(_))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::fixtures::line_world;

    pub(crate) fn observe(pinned: bool) -> WalkStep {
        WalkStep {
            subtask: Subtask::Observe,
            pinned,
        }
    }

    fn evidence() -> Evidence {
        Evidence {
            toolkit_op: "test".into(),
            inputs: serde_json::json!({}),
            result: serde_json::json!(true),
            world_digest: String::new(),
        }
    }

    #[test]
    fn vacuous_grounding() {
        let stg = Stg::hypothesized(vec!["n1".into()], vec![observe(true)], [], vec![], 0.0);
        assert!(is_grounded(&stg, &line_world()));
    }

    #[test]
    fn refuted_hypothesis_blocks_grounding() {
        let mut h = Hypothesis::new(
            "h0",
            HypothesisKind::CoverageAvailable { node: "n3".into() },
        );
        h.refute("no sensor").unwrap();
        let stg = Stg::hypothesized(vec!["n3".into()], vec![observe(true)], [], vec![h], 0.0);
        assert!(!is_grounded(&stg, &line_world()));
    }

    #[test]
    fn disconnected_walk_pair_is_not_grounded() {
        let doc = crate::world::fixtures::line_world_json().replace(
            r#"{"a": "n2", "b": "n3", "kind": "intra_floor", "traversable": true"#,
            r#"{"a": "n2", "b": "n3", "kind": "intra_floor", "traversable": false"#,
        );
        let w = crate::world::load_world(doc.as_bytes()).unwrap();
        let stg = Stg::hypothesized(
            vec!["n1".into(), "n3".into()],
            vec![observe(true), observe(true)],
            [],
            vec![],
            0.0,
        );
        assert!(!is_grounded(&stg, &w));
        assert!(is_grounded(&stg, &line_world()));
    }

    #[test]
    fn status_transitions_are_one_way() {
        let mut h = Hypothesis::new("h", HypothesisKind::CoverageAvailable { node: "n1".into() });
        h.verify(evidence()).unwrap();
        assert!(h.refute("late").is_err());
        assert!(h.verify(evidence()).is_err());
        assert!(h.is_verified());
    }

    #[test]
    fn serializes_with_quadruple_field_names() {
        let stg = Stg::hypothesized(vec!["n1".into()], vec![observe(true)], [], vec![], 0.0);
        let v = serde_json::to_value(&stg).unwrap();
        for key in ["V", "E", "tau_V", "sigma", "hypotheses"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: Stg = serde_json::from_value(v).unwrap();
        assert_eq!(back, stg);
    }
}
