//! Query → hypothesized graph `G0`: anchor references to nodes, chain them
//! into a walk over the floor-plan prior, and state every assumption the
//! walk makes as a hypothesis.

mod query;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stg::{Hypothesis, HypothesisKind, Stg, Subtask, WalkStep};
use crate::world::{shortest_path_with, NodeKind, SpatialNode, Traversal, WorldError, WorldModel};

pub use query::{parse_query, ParseError, Query, Task};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no location matches {reference:?}")]
    Unresolved { reference: String },
    #[error("no route links {from:?} to {to:?}")]
    Disconnected { from: String, to: String },
    #[error("invalid blueprint: {0}")]
    Invalid(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchRule {
    ExactName,
    Substring,
    Tag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub reference: String,
    /// Sorted by id.
    pub candidates: Vec<String>,
    pub matched_by: MatchRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchoring {
    pub anchors: Vec<Anchor>,
    /// Elevators, stairs and doors implied by floor or building changes.
    pub connectors: BTreeSet<String>,
}

fn tag_form(s: &str) -> String {
    s.trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

/// Resolve one reference: exact name or id, then case-insensitive
/// substring of the name, then tag.
pub fn resolve_ref(reference: &str, world: &WorldModel) -> Option<Anchor> {
    let collect = |f: &dyn Fn(&SpatialNode) -> bool| -> Vec<String> {
        world.nodes().filter(|n| f(n)).map(|n| n.id.clone()).collect()
    };
    let exact = collect(&|n| n.name == reference || n.id == reference);
    if !exact.is_empty() {
        return Some(Anchor {
            reference: reference.to_string(),
            candidates: exact,
            matched_by: MatchRule::ExactName,
            tag: None,
        });
    }
    let needle = reference.to_lowercase();
    let sub = collect(&|n| n.name.to_lowercase().contains(&needle));
    if !sub.is_empty() {
        return Some(Anchor {
            reference: reference.to_string(),
            candidates: sub,
            matched_by: MatchRule::Substring,
            tag: None,
        });
    }
    let tag = tag_form(reference);
    let tagged = collect(&|n| n.tags.iter().any(|t| tag_form(t) == tag));
    let original = tagged.first().and_then(|id| {
        world
            .node(id)?
            .tags
            .iter()
            .find(|t| tag_form(t) == tag)
            .cloned()
    });
    (!tagged.is_empty()).then(|| Anchor {
        reference: reference.to_string(),
        candidates: tagged,
        matched_by: MatchRule::Tag,
        tag: original,
    })
}

pub fn anchor(query: &Query, world: &WorldModel) -> Result<Anchoring, PlanError> {
    let anchors = query
        .refs
        .iter()
        .map(|r| {
            resolve_ref(r, world).ok_or_else(|| PlanError::Unresolved {
                reference: r.clone(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut connectors = BTreeSet::new();
    for pair in anchors.windows(2) {
        let nodes = |a: &Anchor| -> Vec<&SpatialNode> {
            a.candidates.iter().filter_map(|id| world.node(id)).collect()
        };
        let (x, y) = (nodes(&pair[0]), nodes(&pair[1]));
        let buildings: BTreeSet<Option<&str>> = x
            .iter()
            .chain(&y)
            .map(|n| n.building.as_deref())
            .collect();
        let floors = |ns: &[&SpatialNode]| -> BTreeSet<Option<i32>> { ns.iter().map(|n| n.floor).collect() };
        match buildings.iter().collect::<Vec<_>>().as_slice() {
            [Some(b)] => {
                if floors(&x) != floors(&y) {
                    connectors.extend(
                        world
                            .building_nodes(b)
                            .into_iter()
                            .filter(|n| n.kind.is_vertical())
                            .map(|n| n.id.clone()),
                    );
                }
            }
            _ => {
                for b in buildings.iter().flatten() {
                    connectors.extend(
                        world
                            .building_nodes(b)
                            .into_iter()
                            .filter(|n| n.kind == NodeKind::Door)
                            .map(|n| n.id.clone()),
                    );
                }
            }
        }
    }
    Ok(Anchoring {
        anchors,
        connectors,
    })
}

fn prior_distance(a: &str, b: &str, world: &WorldModel) -> Result<Option<f64>, WorldError> {
    Ok(shortest_path_with(a, b, world, Traversal::Topological)?.map(|p| p.length_m))
}

/// Candidate of `from` closest (over the floor-plan prior) to any of `to`;
/// ties go to the smaller id.
fn closest(from: &[String], to: &[String], world: &WorldModel) -> Result<Option<String>, WorldError> {
    let mut best: Option<(f64, &String)> = None;
    for c in from {
        for d in to {
            if let Some(len) = prior_distance(c, d, world)? {
                if best.is_none_or(|(l, id)| len < l || (len == l && c < id)) {
                    best = Some((len, c));
                }
            }
        }
    }
    Ok(best.map(|(_, c)| c.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub walk: Vec<String>,
    pub steps: Vec<WalkStep>,
    /// The node picked for each anchor, in order.
    pub selected: Vec<String>,
}

/// Pick one candidate per anchor and chain them into a walk over the
/// floor-plan prior (lock flags are ignored here; grounding checks them).
pub fn decompose(anchoring: &Anchoring, task: &Task, world: &WorldModel) -> Result<Decomposition, PlanError> {
    let anchors = &anchoring.anchors;
    if anchors.is_empty() || anchors.iter().any(|a| a.candidates.is_empty()) {
        return Err(PlanError::Invalid("every anchor needs a candidate".into()));
    }
    let mut selected: Vec<String> = Vec::with_capacity(anchors.len());
    for (k, a) in anchors.iter().enumerate() {
        let pick = if k + 1 < anchors.len() {
            let pool: Vec<String> = match selected.last() {
                // stay reachable from what came before
                Some(prev) => {
                    let mut reach = Vec::new();
                    for c in &a.candidates {
                        if prior_distance(prev, c, world)?.is_some() {
                            reach.push(c.clone());
                        }
                    }
                    reach
                }
                None => a.candidates.clone(),
            };
            closest(&pool, &anchors[k + 1].candidates, world)?
        } else if let Some(prev) = selected.last() {
            closest(&a.candidates, std::slice::from_ref(prev), world)?
        } else {
            a.candidates.first().cloned()
        };
        let pick = pick.ok_or_else(|| {
            let (i, j) = if k + 1 < anchors.len() { (k, k + 1) } else { (k - 1, k) };
            PlanError::Disconnected {
                from: anchors[i].reference.clone(),
                to: anchors[j].reference.clone(),
            }
        })?;
        selected.push(pick);
    }

    let mut walk = vec![selected[0].clone()];
    let mut anchor_at = vec![0usize];
    for (k, pair) in selected.windows(2).enumerate() {
        let path = shortest_path_with(&pair[0], &pair[1], world, Traversal::Topological)?.ok_or_else(|| {
            PlanError::Disconnected {
                from: anchors[k].reference.clone(),
                to: anchors[k + 1].reference.clone(),
            }
        })?;
        walk.extend(path.nodes.into_iter().skip(1));
        anchor_at.push(walk.len() - 1);
    }

    let mut steps: Vec<WalkStep> = vec![
        WalkStep {
            subtask: Subtask::Traverse,
            pinned: false,
        };
        walk.len()
    ];
    for (k, &i) in anchor_at.iter().enumerate() {
        steps[i].pinned = true;
        steps[i].subtask = match task {
            Task::Panoramic { .. } => {
                let a = &anchors[k];
                let facility = a.tag.clone().or_else(|| {
                    world
                        .node(&selected[k])
                        .and_then(|n| n.tags.iter().next().cloned())
                });
                Subtask::CoverArea {
                    area: a.candidates.clone(),
                    facility,
                }
            }
            _ => Subtask::Observe,
        };
    }
    Ok(Decomposition {
        walk,
        steps,
        selected,
    })
}

fn building_of<'a>(id: &str, world: &'a WorldModel) -> Option<&'a str> {
    world.node(id).and_then(|n| n.building.as_deref())
}

/// State the walk's assumptions, in walk order:
/// an exit per building transition, traversability per consecutive pair,
/// the facility of each covered area, and sensor coverage per observed node.
pub fn hypothesize(walk: &[String], steps: &[WalkStep], world: &WorldModel) -> Vec<Hypothesis> {
    let mut kinds = Vec::new();
    for i in 0..walk.len() {
        let step = &steps[i];
        if step.subtask.observes() {
            kinds.push(HypothesisKind::CoverageAvailable {
                node: walk[i].clone(),
            });
        }
        if let Subtask::CoverArea {
            area,
            facility: Some(tag),
        } = &step.subtask
        {
            kinds.push(HypothesisKind::FacilityExists {
                scope: area.iter().cloned().collect(),
                tag: tag.clone(),
            });
        }
        if let Some(d) = exit_at(walk, steps, i, world) {
            kinds.push(d);
        }
        if i + 1 < walk.len() {
            kinds.push(HypothesisKind::PathTraversable {
                a: walk[i].clone(),
                b: walk[i + 1].clone(),
            });
        }
    }

    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    kinds
        .into_iter()
        .map(|kind| {
            let base = format!("{}:{}", kind.label(), detail(&kind));
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            let id = if *n == 1 { base } else { format!("{base}#{n}") };
            Hypothesis::new(id, kind)
        })
        .collect()
}

fn detail(kind: &HypothesisKind) -> String {
    match kind {
        HypothesisKind::ValidExit { toward, door, .. } => format!("{door}->{toward}"),
        HypothesisKind::PathTraversable { a, b } => format!("{a}->{b}"),
        HypothesisKind::FacilityExists { scope, tag } => {
            format!("{tag}@{}", scope.iter().next().map(String::as_str).unwrap_or(""))
        }
        HypothesisKind::CoverageAvailable { node } => node.clone(),
    }
}

/// A door at walk position `d` whose neighbours lie in different
/// buildings (outdoors counts as none) is a building transition. The exit
/// is judged against the next pinned non-door node.
fn exit_at(walk: &[String], steps: &[WalkStep], d: usize, world: &WorldModel) -> Option<HypothesisKind> {
    if d == 0 || d + 1 >= walk.len() {
        return None;
    }
    let door = world.node(&walk[d])?;
    if door.kind != NodeKind::Door
        || building_of(&walk[d - 1], world) == building_of(&walk[d + 1], world)
    {
        return None;
    }
    let b = door.building.as_deref()?;
    let toward = (d + 1..walk.len())
        .find(|&k| steps[k].pinned && world.node(&walk[k]).is_some_and(|n| n.kind != NodeKind::Door))
        .map_or_else(|| walk[walk.len() - 1].clone(), |k| walk[k].clone());
    Some(HypothesisKind::ValidExit {
        scope: world
            .building_nodes(b)
            .into_iter()
            .filter(|n| n.kind != NodeKind::Door)
            .map(|n| n.id.clone())
            .collect(),
        toward,
        door: walk[d].clone(),
    })
}

/// What a planner produces for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentBlueprint {
    pub query: Query,
    pub anchors: Vec<Anchor>,
    /// Inferred connectors plus the waypoints chaining the anchors.
    pub connectors: BTreeSet<String>,
    pub walk: Vec<String>,
    pub steps: Vec<WalkStep>,
    pub hypotheses: Vec<Hypothesis>,
}

impl IntentBlueprint {
    /// Every node the blueprint refers to.
    pub fn nodes(&self) -> BTreeSet<String> {
        let mut v: BTreeSet<String> = self
            .anchors
            .iter()
            .flat_map(|a| a.candidates.iter().cloned())
            .collect();
        v.extend(self.connectors.iter().cloned());
        v.extend(self.walk.iter().cloned());
        for h in &self.hypotheses {
            v.extend(h.kind.nodes().into_iter().map(str::to_string));
        }
        v
    }

    pub fn validate(&self, world: &WorldModel) -> Result<(), PlanError> {
        if self.walk.is_empty() || self.walk.len() != self.steps.len() {
            return Err(PlanError::Invalid("walk and steps must align and be non-empty".into()));
        }
        let known: BTreeSet<&String> = self
            .anchors
            .iter()
            .flat_map(|a| a.candidates.iter())
            .chain(&self.connectors)
            .collect();
        if let Some(n) = self.walk.iter().find(|n| !known.contains(n)) {
            return Err(PlanError::Invalid(format!("walk node {n} is neither anchored nor a connector")));
        }
        for n in self.nodes() {
            world.require_node(&n)?;
        }
        let pairs: Vec<(&str, &str)> = self
            .hypotheses
            .iter()
            .filter_map(|h| match &h.kind {
                HypothesisKind::PathTraversable { a, b } => Some((a.as_str(), b.as_str())),
                _ => None,
            })
            .collect();
        let expected: Vec<(&str, &str)> = self
            .walk
            .windows(2)
            .map(|w| (w[0].as_str(), w[1].as_str()))
            .collect();
        if pairs != expected {
            return Err(PlanError::Invalid("path hypotheses must match the walk pairs".into()));
        }
        if self.hypotheses.iter().any(|h| !h.is_unverified()) {
            return Err(PlanError::Invalid("planned hypotheses must start unverified".into()));
        }
        Ok(())
    }

    pub fn start_time_s(&self) -> f64 {
        self.query.time_window.map_or(0.0, |w| w.0)
    }

    /// `G0`: the walk, its hypotheses, no directives.
    pub fn into_stg(self) -> Stg {
        let start = self.start_time_s();
        let extra = self.nodes();
        Stg::hypothesized(self.walk, self.steps, extra, self.hypotheses, start)
    }
}

/// Maps a query onto a blueprint. Implementations other than the
/// reference one (for example a language-model front end) plug in here.
pub trait Planner {
    fn plan(&self, query: &Query, world: &WorldModel) -> Result<IntentBlueprint, PlanError>;
}

/// Deterministic rule-based planner.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferencePlanner;

impl Planner for ReferencePlanner {
    fn plan(&self, query: &Query, world: &WorldModel) -> Result<IntentBlueprint, PlanError> {
        let anchoring = anchor(query, world)?;
        let d = decompose(&anchoring, &query.task, world)?;
        let hypotheses = hypothesize(&d.walk, &d.steps, world);
        let anchored: BTreeSet<&String> = anchoring
            .anchors
            .iter()
            .flat_map(|a| a.candidates.iter())
            .collect();
        let mut connectors = anchoring.connectors.clone();
        connectors.extend(d.walk.iter().filter(|n| !anchored.contains(n)).cloned());
        let bp = IntentBlueprint {
            query: query.clone(),
            anchors: anchoring.anchors,
            connectors,
            walk: d.walk,
            steps: d.steps,
            hypotheses,
        };
        bp.validate(world)?;
        Ok(bp)
    }
}

/// Parse and plan in one go with the reference planner.
pub fn plan_text(text: &str, world: &WorldModel) -> Result<IntentBlueprint, PlanError> {
    ReferencePlanner.plan(&parse_query(text)?, world)
}
