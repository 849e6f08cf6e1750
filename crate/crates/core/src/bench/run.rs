use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BenchCase, BenchError, QuerySuite, Tier};
use crate::grounding::{ground, distinct_locations, SpatialMemory};
use crate::planner::plan_text;
use crate::scheduler::{compile_unchecked, synthesize, Paradigm, ProgrammingMemory, Schedule, SynthesisOptions};
use crate::sim::{baseline_parallel, baseline_static, run_episode, ExecutionReport, SimConfig};
use crate::world::WorldModel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub sim: SimConfig,
    pub synthesis: SynthesisOptions,
    /// Compile the planned graph as if every hypothesis held.
    pub skip_grounding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub paradigm: Paradigm,
    pub tier: Tier,
    pub tcr_pct: f64,
    pub mean_latency_s: f64,
    pub bandwidth_mb: f64,
    pub tfp: u64,
    pub verification_rounds: u64,
    pub cache_hit_rate: f64,
}

/// One query run under one paradigm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub case: String,
    pub tier: Tier,
    pub paradigm: Paradigm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ExecutionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub verification_rounds: u32,
    pub cache_hits: u32,
    /// Distinct nodes across the planned and grounded walks.
    pub locations: usize,
}

impl Episode {
    pub fn completed(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.completed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub rows: Vec<MetricsRow>,
    pub episodes: Vec<Episode>,
    /// Unsolvable cases are listed here and not executed.
    pub skipped: Vec<String>,
}

impl BenchRun {
    /// Task completion rate over every executed episode of `paradigm`, in [0, 1].
    pub fn tcr(&self, paradigm: Paradigm) -> f64 {
        let eps: Vec<&Episode> = self.episodes.iter().filter(|e| e.paradigm == paradigm).collect();
        if eps.is_empty() {
            return 0.0;
        }
        eps.iter().filter(|e| e.completed()).count() as f64 / eps.len() as f64
    }

    pub fn tfp(&self, paradigm: Paradigm) -> u64 {
        self.rows.iter().filter(|r| r.paradigm == paradigm).map(|r| r.tfp).sum()
    }

    pub fn bandwidth_mb(&self, paradigm: Paradigm) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.paradigm == paradigm)
            .map(|r| r.bandwidth_mb)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn reports_json(&self) -> String {
        serde_json::to_string_pretty(&self.episodes).expect("episodes serialize")
    }
}

/// Run with fresh memories.
pub fn run_bench(
    world: &WorldModel,
    suite: &QuerySuite,
    paradigms: &[Paradigm],
    config: &BenchConfig,
) -> Result<BenchRun, BenchError> {
    run_bench_with(world, suite, paradigms, config, &SpatialMemory::new(), &ProgrammingMemory::new())
}

/// Run every solvable case under every paradigm, sequentially and in
/// suite order, sharing `memory` and `pmem` across the suite.
pub fn run_bench_with(
    world: &WorldModel,
    suite: &QuerySuite,
    paradigms: &[Paradigm],
    config: &BenchConfig,
    memory: &SpatialMemory,
    pmem: &ProgrammingMemory,
) -> Result<BenchRun, BenchError> {
    config.sim.validate()?;
    let mut episodes = Vec::new();
    let mut skipped = Vec::new();
    for (k, case) in suite.cases.iter().enumerate() {
        if !case.solvable {
            skipped.push(case.id.clone());
            continue;
        }
        let sim = SimConfig {
            episode: k as u64,
            ..config.sim
        };
        for &p in paradigms {
            episodes.push(run_case(case, p, world, &sim, config, memory, pmem)?);
        }
    }
    let rows = aggregate(&episodes, paradigms, config.sim.frame_size_mb);
    Ok(BenchRun {
        rows,
        episodes,
        skipped,
    })
}

struct Prepared {
    schedule: Option<Schedule>,
    failure: Option<String>,
    rounds: u32,
    hits: u32,
    locations: usize,
}

fn prepare_stg(
    case: &BenchCase,
    world: &WorldModel,
    config: &BenchConfig,
    memory: &SpatialMemory,
    pmem: &ProgrammingMemory,
) -> Prepared {
    let failed = |why: String, rounds, hits, locations| Prepared {
        schedule: None,
        failure: Some(why),
        rounds,
        hits,
        locations,
    };
    let g0 = match plan_text(&case.query, world) {
        Ok(bp) => bp.into_stg(),
        Err(e) => return failed(e.to_string(), 0, 0, 0),
    };
    if config.skip_grounding {
        let locations = distinct_locations([g0.tau_v.as_slice()]);
        return match compile_unchecked(&g0, world, &config.synthesis) {
            Ok(s) => Prepared {
                schedule: Some(s),
                failure: None,
                rounds: 0,
                hits: 0,
                locations,
            },
            Err(e) => failed(e.to_string(), 0, 0, locations),
        };
    }
    let out = ground(&g0, world, memory);
    let (rounds, hits) = (out.trace.total_rounds, out.trace.cache_hits());
    let g = match out.result {
        Ok(g) => g,
        Err(e) => {
            let locations = distinct_locations([g0.tau_v.as_slice()]);
            return failed(e.to_string(), rounds, hits, locations);
        }
    };
    let locations = distinct_locations([g0.tau_v.as_slice(), g.tau_v.as_slice()]);
    match synthesize(&g, world, &config.synthesis, pmem) {
        Ok(s) => Prepared {
            schedule: Some(s),
            failure: None,
            rounds,
            hits,
            locations,
        },
        Err(e) => failed(e.to_string(), rounds, hits, locations),
    }
}

fn run_case(
    case: &BenchCase,
    paradigm: Paradigm,
    world: &WorldModel,
    sim: &SimConfig,
    config: &BenchConfig,
    memory: &SpatialMemory,
    pmem: &ProgrammingMemory,
) -> Result<Episode, BenchError> {
    let prepared = match paradigm {
        Paradigm::Stg => prepare_stg(case, world, config, memory, pmem),
        Paradigm::Static | Paradigm::Parallel => {
            let built = if paradigm == Paradigm::Static {
                baseline_static(&case.walk, world, sim, 0.0)
            } else {
                baseline_parallel(&case.walk, world, 0.0)
            };
            let (schedule, failure) = match built {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Prepared {
                schedule,
                failure,
                rounds: 0,
                hits: 0,
                locations: 0,
            }
        }
    };
    let report = match &prepared.schedule {
        Some(s) => Some(run_episode(s, world, &case.witness, sim)?),
        None => None,
    };
    Ok(Episode {
        case: case.id.clone(),
        tier: case.tier,
        paradigm,
        walk: prepared.schedule.map(|s| s.walk),
        report,
        failure: prepared.failure,
        verification_rounds: prepared.rounds,
        cache_hits: prepared.hits,
        locations: prepared.locations,
    })
}

/// One row per (paradigm, tier), every tier present even when empty.
pub fn aggregate(episodes: &[Episode], paradigms: &[Paradigm], frame_size_mb: f64) -> Vec<MetricsRow> {
    let mut groups: BTreeMap<(Paradigm, Tier), Vec<&Episode>> = BTreeMap::new();
    for &p in paradigms {
        for t in Tier::ALL {
            groups.insert((p, t), Vec::new());
        }
    }
    for e in episodes {
        if let Some(g) = groups.get_mut(&(e.paradigm, e.tier)) {
            g.push(e);
        }
    }
    let mut rows = Vec::new();
    for &p in paradigms {
        for t in Tier::ALL {
            let eps = &groups[&(p, t)];
            let reports: Vec<&ExecutionReport> = eps.iter().filter_map(|e| e.report.as_ref()).collect();
            let n = eps.len();
            let done = eps.iter().filter(|e| e.completed()).count();
            let tfp: u64 = reports.iter().map(|r| r.tfp).sum();
            let rounds: u64 = eps.iter().map(|e| e.verification_rounds as u64).sum();
            let hits: u64 = eps.iter().map(|e| e.cache_hits as u64).sum();
            rows.push(MetricsRow {
                paradigm: p,
                tier: t,
                tcr_pct: if n == 0 { 0.0 } else { 100.0 * done as f64 / n as f64 },
                mean_latency_s: if reports.is_empty() {
                    0.0
                } else {
                    reports.iter().map(|r| r.latency_s).sum::<f64>() / reports.len() as f64
                },
                bandwidth_mb: tfp as f64 * frame_size_mb,
                tfp,
                verification_rounds: rounds,
                cache_hit_rate: if rounds + hits == 0 {
                    0.0
                } else {
                    hits as f64 / (rounds + hits) as f64
                },
            });
        }
    }
    rows
}
