//! Load a small world, inspect coverage and route around a closed door.

use stg::world::{load_world, shortest_path};

const WORLD: &str = r#"{
  "meta": {"name": "annex", "crs": "site-local-cartesian-meters"},
  "nodes": [
    {"id": "lab", "name": "Lab", "kind": "room", "building": "annex", "floor": 1, "pos": [0, 0], "tags": ["lab"]},
    {"id": "hall", "name": "Hall", "kind": "corridor", "building": "annex", "floor": 1, "pos": [10, 0], "tags": []},
    {"id": "door-n", "name": "North Door", "kind": "door", "building": "annex", "floor": 1, "pos": [10, 5], "tags": []},
    {"id": "door-s", "name": "South Door", "kind": "door", "building": "annex", "floor": 1, "pos": [10, -5], "tags": []},
    {"id": "yard", "name": "Yard", "kind": "outdoor_segment", "pos": [30, 0], "tags": []}
  ],
  "edges": [
    {"a": "lab", "b": "hall", "kind": "intra_floor", "traversable": true, "length_m": 10},
    {"a": "hall", "b": "door-n", "kind": "intra_floor", "traversable": true, "length_m": 5},
    {"a": "hall", "b": "door-s", "kind": "intra_floor", "traversable": true, "length_m": 5},
    {"a": "door-n", "b": "yard", "kind": "indoor_outdoor", "traversable": true, "length_m": 20},
    {"a": "door-s", "b": "yard", "kind": "indoor_outdoor", "traversable": true, "length_m": 25}
  ],
  "sensors": [
    {"id": "cam-lab", "kind": "camera", "node": "lab", "pos": [0, 0], "heading_deg": 0, "fov_deg": 90, "range_m": 12},
    {"id": "cam-yard", "kind": "camera", "node": "yard", "pos": [30, 0], "heading_deg": 180, "fov_deg": 60, "range_m": 25}
  ]
}"#;

fn main() -> anyhow::Result<()> {
    let world = load_world(WORLD.as_bytes())?;
    println!("{} nodes, {} sensors, digest {}", world.node_count(), world.sensor_count(), &world.digest()[..12]);

    // cameras without an explicit `covers` list get one from their field of view
    for s in world.sensors() {
        println!("{} covers {:?}", s.id, s.covers);
    }

    let p = shortest_path("lab", "yard", &world)?.expect("connected");
    println!("lab -> yard: {:?} ({} m)", p.nodes, p.length_m);

    let mut file = world.to_file();
    for e in &mut file.edges {
        if e.a == "door-n" || e.b == "door-n" {
            e.traversable = false;
        }
    }
    let closed = stg::world::WorldModel::from_file(file)?;
    let p = shortest_path("lab", "yard", &closed)?.expect("still connected");
    println!("with the north door closed: {:?} ({} m)", p.nodes, p.length_m);
    Ok(())
}
