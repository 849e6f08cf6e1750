//! Parse a query and plan it into a hypothesized trajectory graph.

use stg::bench::{gen_campus, CampusSpec};
use stg::planner::{parse_query, Planner, ReferencePlanner};

fn main() -> anyhow::Result<()> {
    let world = gen_campus(&CampusSpec {
        buildings: 2,
        seed: 1,
        ..CampusSpec::default()
    })?;
    let query = parse_query(r#"TRACK "courier" FROM "B1 F2 Room 1" TO "B2 F1 Room 4" BETWEEN 30 AND 600"#)?;
    println!("{query:?}\n");

    let bp = ReferencePlanner.plan(&query, &world)?;
    for a in &bp.anchors {
        println!("{:?} -> {:?}", a.reference, a.candidates);
    }
    println!("\nwalk ({} nodes):", bp.walk.len());
    for (node, step) in bp.walk.iter().zip(&bp.steps) {
        println!("  {node:<16} {:?}{}", step.subtask, if step.pinned { "  (pinned)" } else { "" });
    }

    let g0 = bp.into_stg();
    println!("\n{} hypotheses, all unverified:", g0.hypotheses.len());
    for h in g0.hypotheses.iter().take(8) {
        println!("  {}", h.id);
    }
    println!("  ...");
    Ok(())
}
