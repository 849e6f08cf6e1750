//! Spatial trajectory graphs for semantic sensor scheduling.
//!
//! The crate turns a structured location query into a hypothesized
//! trajectory graph, verifies every assumption in it against a topological
//! world model, compiles the verified graph into a camera activation
//! schedule, and replays that schedule in a discrete-time simulator next to
//! two baseline schedulers.
//!
//! ```text
//! query ──► planner ──► Stg (G0) ──► grounding ──► Stg (G*) ──► scheduler ──► Schedule ──► sim
//!                                       ▲                            ▲
//!                                 SpatialMemory               ProgrammingMemory
//! ```
//!
//! Each stage lives in its own module; the runnable programs under
//! `examples/` walk through them one at a time.

pub mod bench;
pub mod cli;
mod digest;
pub mod grounding;
mod memo;
pub mod planner;
pub mod scheduler;
pub mod sim;
pub mod stg;
pub mod world;

pub use grounding::{ground, GroundOutcome, SpatialMemory};
pub use planner::{parse_query, Planner, ReferencePlanner};
pub use scheduler::{synthesize, ProgrammingMemory, Schedule};
pub use sim::{run_episode, ExecutionReport, SimConfig};
pub use stg::{Hypothesis, Stg};
pub use world::{load_world, WorldModel};
