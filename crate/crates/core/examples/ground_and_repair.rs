//! Verify a plan against a world with locked doors. Refuted exits are
//! rerouted, and a warm spatial memory answers the second run.

use stg::bench::{gen_campus, lock_doors, CampusSpec};
use stg::grounding::{ground, SpatialMemory, TraceOutcome};
use stg::planner::plan_text;

fn main() -> anyhow::Result<()> {
    let campus = gen_campus(&CampusSpec {
        buildings: 2,
        seed: 3,
        ..CampusSpec::default()
    })?;
    let (world, locked) = lock_doors(&campus, 3)?;
    println!("locked: {locked:?}");

    let g0 = plan_text(r#"TRACK "visitor" FROM "B1 F1 Room 2" TO "B2 F1 Room 3""#, &world)?.into_stg();
    let memory = SpatialMemory::new();
    let cold = ground(&g0, &world, &memory);
    for e in &cold.trace.entries {
        match &e.outcome {
            TraceOutcome::Verified => {}
            other => println!("  {:<40} {other:?}", e.hypothesis),
        }
    }
    let g = cold.result?;
    println!("planned walk:  {:?}", g0.tau_v);
    println!("grounded walk: {:?}", g.tau_v);
    println!("cold run: {} toolkit rounds, {} repairs", cold.trace.total_rounds, cold.trace.repairs);

    let warm = ground(&g0, &world, &memory);
    println!(
        "warm run: {} toolkit rounds, {} answers from memory",
        warm.trace.total_rounds,
        warm.trace.cache_hits()
    );
    Ok(())
}
