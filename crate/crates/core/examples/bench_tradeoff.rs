//! Generate a campus and a tiered query suite, then compare the three
//! scheduling paradigms on completion and frames processed.

use stg::bench::{gen_campus, gen_queries, run_bench, BenchConfig, CampusSpec, SuiteSpec};
use stg::scheduler::Paradigm;

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let world = gen_campus(&CampusSpec {
        seed,
        ..CampusSpec::default()
    })?;
    let suite = gen_queries(
        &world,
        &SuiteSpec {
            count: 120,
            seed,
            ..SuiteSpec::default()
        },
    )?;
    println!(
        "{} nodes, {} cameras, {} queries ({} solvable)\n",
        world.node_count(),
        world.sensor_count(),
        suite.cases.len(),
        suite.solvable().count()
    );

    let run = run_bench(&world, &suite, &Paradigm::ALL, &BenchConfig::default())?;
    println!("{:<9} {:<5} {:>6} {:>9} {:>8}", "paradigm", "tier", "tcr%", "latency", "tfp");
    for r in &run.rows {
        println!(
            "{:<9} {:<5} {:>6.1} {:>8.1}s {:>8}",
            r.paradigm.name(),
            r.tier.name(),
            r.tcr_pct,
            r.mean_latency_s,
            r.tfp
        );
    }
    println!();
    for p in Paradigm::ALL {
        println!("{:<9} tcr {:.3}  tfp {:>7}", p.name(), run.tcr(p), run.tfp(p));
    }
    Ok(())
}
