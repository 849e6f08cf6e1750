//! Run one tracking query under the static, parallel and adaptive
//! schedules, against a target that walks faster than planned.

use stg::bench::{gen_campus, CampusSpec};
use stg::grounding::{ground, SpatialMemory};
use stg::planner::plan_text;
use stg::scheduler::{synthesize, ProgrammingMemory, SynthesisOptions};
use stg::sim::{baseline_parallel, baseline_static, run_episode, SimConfig, TargetTrajectory};

fn main() -> anyhow::Result<()> {
    let world = gen_campus(&CampusSpec::default())?;
    let g0 = plan_text(r#"TRACK "runner" FROM "B1 F2 Room 3" TO "B2 F2 Room 2""#, &world)?.into_stg();
    let g = ground(&g0, &world, &SpatialMemory::new()).result?;
    let config = SimConfig {
        seed: 5,
        ..SimConfig::default()
    };

    // 1.8x the pace the static plan assumes
    let target = TargetTrajectory::at_speed(&g.tau_v, &world, 0.0, 1.8 * config.static_velocity_mps);
    println!("walk of {} nodes, target arrives at t={:.0}s\n", g.tau_v.len(), target.end_s());

    let schedules = [
        baseline_static(&g.tau_v, &world, &config, 0.0)?,
        baseline_parallel(&g.tau_v, &world, 0.0)?,
        synthesize(&g, &world, &SynthesisOptions::default(), &ProgrammingMemory::new())?,
    ];
    println!("{:<9} {:>9} {:>8} {:>7} {:>10} {:>8}", "paradigm", "completed", "latency", "tfp", "bandwidth", "max gap");
    for s in &schedules {
        let r = run_episode(s, &world, &target, &config)?;
        println!(
            "{:<9} {:>9} {:>7.0}s {:>7} {:>8.1}MB {:>7.0}s",
            s.paradigm.name(),
            r.completed,
            r.latency_s,
            r.tfp,
            r.bandwidth_mb,
            r.max_track_gap_s
        );
    }
    Ok(())
}
