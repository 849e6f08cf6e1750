//! Seeded campus worlds, tiered query suites with ground-truth witnesses,
//! and a harness running every scheduling paradigm over them.

mod campus;
mod queries;
mod run;

use thiserror::Error;

use crate::sim::SimError;
use crate::world::WorldError;

pub use campus::{gen_campus, lock_doors, CampusSpec};
pub use queries::{gen_queries, BenchCase, Behavior, Deviation, QuerySuite, SuiteSpec, Tier, TierMix};
pub use run::{aggregate, run_bench, run_bench_with, BenchConfig, BenchRun, Episode, MetricsRow};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench spec: {0}")]
    InvalidSpec(String),
    #[error("the campus description produces an empty world")]
    EmptyWorld,
    #[error("tier {0} cannot be sampled in this world")]
    TierUnsatisfiable(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
