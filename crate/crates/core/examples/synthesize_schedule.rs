//! Compile a grounded graph into a camera schedule, render it as a
//! script, and show the solver being skipped on a cached signature.

use stg::bench::{gen_campus, CampusSpec};
use stg::grounding::{ground, SpatialMemory};
use stg::planner::plan_text;
use stg::scheduler::{emit_script, greedy_set_cover, synthesize, CoverRequirement, ProgrammingMemory, SynthesisOptions};

fn main() -> anyhow::Result<()> {
    let world = gen_campus(&CampusSpec::default())?;

    // the per-node choice is a set cover over the cameras that see it
    let zone: Vec<String> = ["b1-f1-c1", "b1-f1-c2", "b1-f1-room1", "b1-f1-room2"]
        .map(String::from)
        .to_vec();
    let req = CoverRequirement::from_coverage(&zone, &world);
    println!("cover for {zone:?}: {:?}\n", greedy_set_cover(&req)?);

    let g0 = plan_text(r#"ROUTE "B1 F1 Room 1" THEN "B1 F3 Room 2" THEN "B2 F1 Room 1""#, &world)?.into_stg();
    let g = ground(&g0, &world, &SpatialMemory::new()).result?;

    let pmem = ProgrammingMemory::new();
    let opts = SynthesisOptions::default();
    let schedule = synthesize(&g, &world, &opts, &pmem)?;
    print!("{}", emit_script(&schedule));
    if let Some(score) = &schedule.meta.score {
        println!("\nfidelity {:.3}, cost {:.1}, score {:.3}", score.fidelity, score.cost, score.score);
    }

    let again = synthesize(&g, &world, &opts, &pmem)?;
    assert_eq!(again, schedule);
    println!("solver calls after two syntheses: {} (cache hits {})", pmem.solver_calls(), pmem.hits());

    // an unverified graph is refused outright
    println!("G0: {}", synthesize(&g0, &world, &opts, &pmem).unwrap_err());
    Ok(())
}
