//! The `stg` command line: one subcommand per pipeline stage, JSON files
//! between them, plus `pipeline` chaining them all and `bench`.
//!
//! Exit status is 0 on success, 1 when the domain says no (a refuted
//! plan, an ungrounded graph, an unreadable file) and 2 on usage errors.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::bench::{
    gen_campus, gen_queries, lock_doors, run_bench_with, BenchConfig, BenchError, Behavior, CampusSpec, QuerySuite,
    SuiteSpec, TierMix,
};
use crate::grounding::{ground_with, ExitChooser, GroundFailure, GroundOptions, PersistError, SpatialMemory};
use crate::planner::{plan_text, PlanError};
use crate::scheduler::{emit_script, synthesize, Paradigm, ProgrammingMemory, Schedule, ScheduleError, SynthesisOptions};
use crate::sim::{run_episode_with, ExecutionReport, SimConfig, SimError, TargetTrajectory};
use crate::stg::Stg;
use crate::world::{load_world_with, WorldError, WorldModel};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path} is not a valid {what}: {source}")]
    Json {
        path: String,
        what: &'static str,
        source: serde_json::Error,
    },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Ground(#[from] GroundFailure),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stg", version, about = "Plan, verify, schedule and simulate camera tasks over a spatial world model")]
pub struct Cli {
    /// Reject unknown keys in world files.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or check world files.
    #[command(subcommand)]
    World(WorldCommand),
    /// Turn a query into a hypothesized graph (G0).
    Plan(PlanArgs),
    /// Verify every hypothesis of a graph against the world.
    Ground(GroundArgs),
    /// Compile a grounded graph into an activation schedule.
    Schedule(ScheduleArgs),
    /// Replay a schedule against a target trajectory.
    Simulate(SimulateArgs),
    /// Run all three paradigms over a generated query suite.
    Bench(BenchArgs),
    /// plan, ground, schedule and simulate in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
pub enum WorldCommand {
    /// Generate a campus world.
    Gen(WorldGenArgs),
    /// Load a world file and report what is wrong with it.
    Validate(WorldValidateArgs),
}

#[derive(Debug, Args)]
pub struct WorldGenArgs {
    /// Campus spec JSON; defaults apply to missing fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Overrides the campus file's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Lock one door per building.
    #[arg(long)]
    pub lock_doors: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorldValidateArgs {
    #[arg(long)]
    pub world: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub world: PathBuf,
    /// Query text, for example `FOCUS "Lab 1"`.
    #[arg(long)]
    pub query: String,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct MemoryArgs {
    /// Spatial memory file, read before and written after grounding.
    #[arg(long)]
    pub memory: Option<PathBuf>,
    /// Ask on stdin which exit to take when several are open.
    #[arg(long)]
    pub interactive: bool,
    /// Write the verification trace here (`-` for stdout).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = GroundOptions::default().max_repairs)]
    pub max_repairs: usize,
}

#[derive(Debug, Args)]
pub struct GroundArgs {
    #[arg(long)]
    pub world: PathBuf,
    /// Graph produced by `plan`.
    #[arg(long)]
    pub stg: PathBuf,
    #[command(flatten)]
    pub memory: MemoryArgs,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesisArgs {
    /// Programming memory file, read before and written after synthesis.
    #[arg(long)]
    pub pmem: Option<PathBuf>,
    /// Also render the schedule as a script (`-` for stdout).
    #[arg(long)]
    pub emit_script: Option<PathBuf>,
    /// Seconds of lead for arrival-triggered activation.
    #[arg(long, default_value_t = SynthesisOptions::default().lead_s)]
    pub lead_s: f64,
    #[arg(long, default_value_t = SynthesisOptions::default().max_duration_s)]
    pub max_duration_s: f64,
}

impl SynthesisArgs {
    fn options(&self) -> SynthesisOptions {
        SynthesisOptions {
            lead_s: self.lead_s,
            max_duration_s: self.max_duration_s,
            ..SynthesisOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub world: PathBuf,
    /// Grounded graph produced by `ground`.
    #[arg(long)]
    pub stg: PathBuf,
    #[command(flatten)]
    pub synthesis: SynthesisArgs,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub p_detect: Option<f64>,
    #[arg(long)]
    pub timeout_s: Option<f64>,
    /// Full simulator config JSON; the flags above override it.
    #[arg(long)]
    pub sim_config: Option<PathBuf>,
    /// Target trajectory JSON; defaults to the schedule's walk at the
    /// nominal walking speed.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Stream per-step events as NDJSON (`-` for stdout).
    #[arg(long)]
    pub events: Option<PathBuf>,
}

impl SimArgs {
    fn config(&self) -> Result<SimConfig, CliError> {
        let mut c: SimConfig = match &self.sim_config {
            Some(p) => read_json(p, "simulator config")?,
            None => SimConfig::default(),
        };
        c.seed = self.seed;
        if let Some(p) = self.p_detect {
            c.p_detect = p;
        }
        if let Some(t) = self.timeout_s {
            c.timeout_s = t;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub world: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub world: PathBuf,
    #[arg(long)]
    pub query: String,
    #[command(flatten)]
    pub memory: MemoryArgs,
    #[command(flatten)]
    pub synthesis: SynthesisArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MixArg {
    /// All five tiers in the benchmark's proportions.
    Default,
    /// Only tiers where the target moves.
    Moving,
    /// Only cross-building tiers.
    CrossBuilding,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Campus spec JSON; ignored when --world is given.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Use an existing world instead of generating a campus.
    #[arg(long, conflicts_with = "spec")]
    pub world: Option<PathBuf>,
    /// Query suite JSON; generated when absent.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    #[arg(long, default_value_t = 120)]
    pub queries: usize,
    /// Seeds the campus, the suite and the simulator.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MixArg::Default)]
    pub mix: MixArg,
    /// Make half the targets deviate from their planned route or speed.
    #[arg(long)]
    pub trap: bool,
    /// Lock one door per building.
    #[arg(long)]
    pub lock_doors: bool,
    /// Compile the planned graph without verifying it.
    #[arg(long)]
    pub skip_grounding: bool,
    #[arg(long, value_delimiter = ',', default_values_t = ["static".to_string(), "parallel".to_string(), "stg".to_string()])]
    pub paradigms: Vec<String>,
    #[arg(long)]
    pub p_detect: Option<f64>,
    #[arg(long)]
    pub memory: Option<PathBuf>,
    #[arg(long)]
    pub pmem: Option<PathBuf>,
    /// Where metrics.csv and reports.json go.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Parse the process arguments, run, and map the result to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let strict = cli.strict;
    match cli.command {
        Command::World(WorldCommand::Gen(a)) => world_gen(a, stdout),
        Command::World(WorldCommand::Validate(a)) => {
            let w = read_world(&a.world, strict)?;
            let line = format!(
                "ok: {} nodes, {} edges, {} sensors, digest {}\n",
                w.node_count(),
                w.edges().len(),
                w.sensor_count(),
                w.digest()
            );
            write_to(None, line.as_bytes(), stdout)
        }
        Command::Plan(a) => {
            let w = read_world(&a.world, strict)?;
            let g0 = plan_text(&a.query, &w)?.into_stg();
            write_json(a.out.as_deref(), &g0, stdout)
        }
        Command::Ground(a) => {
            let w = read_world(&a.world, strict)?;
            let g0: Stg = read_json(&a.stg, "graph")?;
            let g = ground_stage(&g0, &w, &a.memory, stdout)?;
            write_json(a.out.as_deref(), &g, stdout)
        }
        Command::Schedule(a) => {
            let w = read_world(&a.world, strict)?;
            let g: Stg = read_json(&a.stg, "graph")?;
            let s = schedule_stage(&g, &w, &a.synthesis, stdout)?;
            write_json(a.out.as_deref(), &s, stdout)
        }
        Command::Simulate(a) => {
            let w = read_world(&a.world, strict)?;
            let s: Schedule = read_json(&a.schedule, "schedule")?;
            let r = simulate_stage(&s, &w, &a.sim, stdout)?;
            write_json(a.out.as_deref(), &r, stdout)
        }
        Command::Pipeline(a) => {
            let w = read_world(&a.world, strict)?;
            let g0 = plan_text(&a.query, &w)?.into_stg();
            let g = ground_stage(&g0, &w, &a.memory, stdout)?;
            let s = schedule_stage(&g, &w, &a.synthesis, stdout)?;
            let r = simulate_stage(&s, &w, &a.sim, stdout)?;
            write_json(a.out.as_deref(), &r, stdout)
        }
        Command::Bench(a) => bench(a, strict, stdout),
    }
}

fn world_gen(a: WorldGenArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut spec: CampusSpec = match &a.spec {
        Some(p) => read_json(p, "campus spec")?,
        None => CampusSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let mut w = gen_campus(&spec)?;
    if a.lock_doors {
        w = lock_doors(&w, spec.seed)?.0;
    }
    let mut text = w.to_json_pretty();
    text.push('\n');
    write_to(a.out.as_deref(), text.as_bytes(), stdout)
}

struct StdinChooser;

impl ExitChooser for StdinChooser {
    fn choose(&mut self, toward: &str, candidates: &[String]) -> Option<String> {
        eprintln!("several exits lead toward {toward}:");
        for (i, c) in candidates.iter().enumerate() {
            eprintln!("  {}) {c}", i + 1);
        }
        eprint!("pick one [enter for the shortest]: ");
        let mut line = String::new();
        io::stdin().lock().read_line(&mut line).ok()?;
        let k: usize = line.trim().parse().ok()?;
        candidates.get(k.checked_sub(1)?).cloned()
    }
}

fn ground_stage(g0: &Stg, w: &WorldModel, a: &MemoryArgs, stdout: &mut dyn Write) -> Result<Stg, CliError> {
    let memory = match &a.memory {
        Some(p) => SpatialMemory::load_or_default(p)?,
        None => SpatialMemory::new(),
    };
    let opts = GroundOptions {
        max_repairs: a.max_repairs,
    };
    let mut chooser = StdinChooser;
    let outcome = ground_with(
        g0,
        w,
        &memory,
        opts,
        a.interactive.then_some(&mut chooser as &mut dyn ExitChooser),
    );
    if let Some(p) = &a.trace {
        write_json(Some(p), &outcome.trace, stdout)?;
    }
    if let Some(p) = &a.memory {
        memory.save(p)?;
    }
    Ok(outcome.result?)
}

fn schedule_stage(g: &Stg, w: &WorldModel, a: &SynthesisArgs, stdout: &mut dyn Write) -> Result<Schedule, CliError> {
    let pmem = match &a.pmem {
        Some(p) => ProgrammingMemory::load_or_default(p)?,
        None => ProgrammingMemory::new(),
    };
    let s = synthesize(g, w, &a.options(), &pmem)?;
    if let Some(p) = &a.pmem {
        pmem.save(p)?;
    }
    if let Some(p) = &a.emit_script {
        write_to(Some(p), emit_script(&s).as_bytes(), stdout)?;
    }
    Ok(s)
}

fn simulate_stage(s: &Schedule, w: &WorldModel, a: &SimArgs, stdout: &mut dyn Write) -> Result<ExecutionReport, CliError> {
    let config = a.config()?;
    let trajectory = match &a.trajectory {
        Some(p) => read_json(p, "trajectory")?,
        None => TargetTrajectory::at_speed(&s.walk, w, s.start_time_s, config.static_velocity_mps),
    };
    let Some(path) = &a.events else {
        return Ok(run_episode_with(s, w, &trajectory, &config, &mut |_| {})?);
    };
    let mut lines = Vec::new();
    let report = run_episode_with(s, w, &trajectory, &config, &mut |e| {
        // events are plain data; serialization cannot fail
        lines.extend(serde_json::to_vec(e).unwrap_or_default());
        lines.push(b'\n');
    })?;
    write_to(Some(path), &lines, stdout)?;
    Ok(report)
}

fn bench(a: BenchArgs, strict: bool, stdout: &mut dyn Write) -> Result<(), CliError> {
    let paradigms = a
        .paradigms
        .iter()
        .map(|p| match p.as_str() {
            "static" => Ok(Paradigm::Static),
            "parallel" => Ok(Paradigm::Parallel),
            "stg" => Ok(Paradigm::Stg),
            other => Err(CliError::Usage(format!("unknown paradigm {other:?}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut world = match (&a.world, &a.spec) {
        (Some(p), _) => read_world(p, strict)?,
        (None, spec) => {
            let mut spec: CampusSpec = match spec {
                Some(p) => read_json(p, "campus spec")?,
                None => CampusSpec::default(),
            };
            spec.seed = a.seed;
            gen_campus(&spec)?
        }
    };
    if a.lock_doors {
        world = lock_doors(&world, a.seed)?.0;
    }
    let suite: QuerySuite = match &a.suite {
        Some(p) => read_json(p, "query suite")?,
        None => gen_queries(
            &world,
            &SuiteSpec {
                count: a.queries,
                seed: a.seed,
                mix: match a.mix {
                    MixArg::Default => TierMix::default(),
                    MixArg::Moving => TierMix::moving(),
                    MixArg::CrossBuilding => TierMix::cross_building(),
                },
                behavior: if a.trap { Behavior::trap() } else { Behavior::default() },
            },
        )?,
    };
    let mut config = BenchConfig {
        skip_grounding: a.skip_grounding,
        ..BenchConfig::default()
    };
    config.sim.seed = a.seed;
    if let Some(p) = a.p_detect {
        config.sim.p_detect = p;
    }
    let memory = match &a.memory {
        Some(p) => SpatialMemory::load_or_default(p)?,
        None => SpatialMemory::new(),
    };
    let pmem = match &a.pmem {
        Some(p) => ProgrammingMemory::load_or_default(p)?,
        None => ProgrammingMemory::new(),
    };
    let run = run_bench_with(&world, &suite, &paradigms, &config, &memory, &pmem)?;
    if let Some(p) = &a.memory {
        memory.save(p)?;
    }
    if let Some(p) = &a.pmem {
        pmem.save(p)?;
    }
    fs::create_dir_all(&a.out_dir).map_err(|e| io_err(&a.out_dir, e))?;
    let mut csv = Vec::new();
    run.write_csv(&mut csv)?;
    write_to(Some(&a.out_dir.join("metrics.csv")), &csv, stdout)?;
    write_to(Some(&a.out_dir.join("reports.json")), run.reports_json().as_bytes(), stdout)?;
    let mut summary = String::new();
    for &p in &paradigms {
        summary.push_str(&format!(
            "{:<8} tcr {:.3}  tfp {:>8}  bandwidth {:.1} MB\n",
            p.name(),
            run.tcr(p),
            run.tfp(p),
            run.bandwidth_mb(p)
        ));
    }
    if !run.skipped.is_empty() {
        summary.push_str(&format!("{} unsolvable queries skipped\n", run.skipped.len()));
    }
    write_to(None, summary.as_bytes(), stdout)
}

fn io_err(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_world(path: &Path, strict: bool) -> Result<WorldModel, CliError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(load_world_with(&bytes, strict)?)
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &'static str) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        what,
        source,
    })
}

/// `None` or `-` means stdout.
fn write_to(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, bytes).map_err(|e| io_err(p, e)),
        _ => stdout.write_all(bytes).map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    write_to(path, text.as_bytes(), stdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("stg").chain(args.iter().copied()))
    }

    #[test]
    fn bench_requires_a_seed() {
        let e = parse(&["bench", "--queries", "5"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(parse(&["bench", "--seed", "1"]).is_ok());
    }

    #[test]
    fn paradigm_list_splits_on_commas() {
        let Command::Bench(a) = parse(&["bench", "--seed", "1", "--paradigms", "stg,static"]).unwrap().command else {
            panic!("not bench");
        };
        assert_eq!(a.paradigms, vec!["stg", "static"]);
    }

    #[test]
    fn unknown_paradigm_is_a_usage_error() {
        let cli = parse(&["bench", "--seed", "1", "--paradigms", "all-on"]).unwrap();
        let e = run(cli, &mut Vec::new()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn domain_errors_exit_one() {
        let e = CliError::Schedule(ScheduleError::Ungrounded);
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("ungrounded"));
    }
}
