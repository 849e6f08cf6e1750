//! Property tests over generated worlds, queries and schedules.

mod common;

use proptest::prelude::*;
use stg::bench::{aggregate, gen_queries, run_bench, run_bench_with, BenchCase, BenchConfig, QuerySuite, SuiteSpec, Tier};
use stg::grounding::{ground, replay, SpatialMemory, ToolCall};
use stg::planner::{plan_text, MatchRule, Planner, ReferencePlanner};
use stg::scheduler::{synthesize, Paradigm, ProgrammingMemory, SynthesisOptions};
use stg::sim::{baseline_parallel, run_episode, SimConfig, TargetTrajectory};
use stg::stg::{
    evaluate_objective, induced_plan, is_grounded, nominal_witness, ActivationPlan, HypothesisKind, HypothesisStatus,
    Interval, ObjectiveParams,
};
use stg::world::{derive_coverage, load_world, WorldModel};

use common::{brute_shortest, campus, graph_world, node_id, random_graph};

fn suite(world: &WorldModel, seed: u64, count: usize) -> QuerySuite {
    gen_queries(
        world,
        &SuiteSpec {
            count,
            seed,
            ..SuiteSpec::default()
        },
    )
    .unwrap()
}

fn pick(suite: &QuerySuite, k: usize) -> &BenchCase {
    let solvable: Vec<&BenchCase> = suite.solvable().collect();
    solvable[k % solvable.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coverage_index_mirrors_sensor_covers(seed in 0u64..1000) {
        let w = campus(seed);
        for s in w.sensors() {
            for n in &s.covers {
                prop_assert!(w.sensors_covering(n).unwrap().contains(&s.id));
            }
        }
        for (n, sensors) in w.coverage_index() {
            for s in sensors {
                prop_assert!(w.sensor(s).unwrap().covers.contains(n));
            }
        }
    }

    #[test]
    fn coverage_ignores_full_turns(seed in 0u64..1000, turns in -3i32..4) {
        let w = campus(seed);
        for s in w.sensors().take(20) {
            let mut turned = s.clone();
            turned.heading_deg += 360.0 * turns as f64;
            prop_assert_eq!(derive_coverage(s, &w), derive_coverage(&turned, &w));
        }
    }

    #[test]
    fn world_round_trips_through_json(seed in 0u64..1000) {
        let w = campus(seed);
        let text = w.to_json_pretty();
        let a = load_world(text.as_bytes()).unwrap();
        let b = load_world(text.as_bytes()).unwrap();
        prop_assert_eq!(a.digest(), w.digest());
        prop_assert_eq!(&a, &b);
    }

    #[test]
    fn shortest_path_is_never_beaten(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (n, edges) = random_graph(&mut rng, 8);
        let w = graph_world(n, &edges);
        for a in 0..n {
            for b in 0..n {
                let got = stg::world::shortest_path(&node_id(a), &node_id(b), &w).unwrap();
                let want = brute_shortest(n, &edges, a, b);
                prop_assert_eq!(got.map(|p| p.length_m), want.map(|(l, _)| l as f64));
            }
        }
    }

    #[test]
    fn planned_graphs_start_unverified_and_pair_up(seed in 0u64..200, k in 0usize..120) {
        let w = campus(seed % 20);
        let s = suite(&w, seed, 40);
        let case = pick(&s, k);
        let bp = ReferencePlanner.plan(&stg::planner::parse_query(&case.query).unwrap(), &w).unwrap();
        let again = plan_text(&case.query, &w).unwrap();
        prop_assert_eq!(serde_json::to_string(&bp).unwrap(), serde_json::to_string(&again).unwrap());
        let g0 = bp.clone().into_stg();
        prop_assert!(g0.sigma.is_empty());
        prop_assert!(g0.hypotheses.iter().all(|h| h.is_unverified()));
        for pair in g0.tau_v.windows(2) {
            let n = g0.hypotheses.iter().filter(|h| matches!(&h.kind,
                HypothesisKind::PathTraversable { a, b } if *a == pair[0] && *b == pair[1])).count();
            prop_assert_eq!(n, 1, "pair {:?}", pair);
        }
        for a in &bp.anchors {
            for c in &a.candidates {
                let node = w.node(c).unwrap();
                let ok = match a.matched_by {
                    MatchRule::ExactName => node.name == a.reference || node.id == a.reference,
                    MatchRule::Substring => node.name.to_lowercase().contains(&a.reference.to_lowercase()),
                    MatchRule::Tag => a.tag.as_ref().is_some_and(|t| node.tags.contains(t)),
                };
                prop_assert!(ok, "{} does not match {:?}", c, a.reference);
            }
        }
    }

    #[test]
    fn grounding_is_sound_and_cache_coherent(seed in 0u64..200, k in 0usize..120) {
        let w = campus(seed % 20);
        let s = suite(&w, seed, 40);
        let g0 = plan_text(&pick(&s, k).query, &w).unwrap().into_stg();
        let memory = SpatialMemory::new();
        let cold = ground(&g0, &w, &memory);
        let warm = ground(&g0, &w, &memory);
        prop_assert!(warm.trace.total_rounds <= cold.trace.total_rounds);
        prop_assert_eq!(warm.trace.total_rounds, 0);
        match (&cold.result, &warm.result) {
            (Ok(a), Ok(b)) => {
                prop_assert!(is_grounded(a, &w));
                prop_assert_eq!(a, b);
                for h in &a.hypotheses {
                    let HypothesisStatus::Verified { evidence } = &h.status else {
                        return Err(TestCaseError::fail(format!("{} not verified", h.id)));
                    };
                    prop_assert!(replay(evidence, &w).unwrap(), "{} does not replay", h.id);
                    let call: ToolCall = serde_json::from_value(evidence.inputs.clone()).unwrap();
                    prop_assert_eq!(&call.evidence(&w).unwrap(), evidence);
                }
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            _ => prop_assert!(false, "cold and warm runs disagree"),
        }
    }

    #[test]
    fn flipped_graphs_are_refused(seed in 0u64..200, k in 0usize..120, h in any::<prop::sample::Index>(), refute in any::<bool>()) {
        let w = campus(seed % 20);
        let s = suite(&w, seed, 40);
        let g0 = plan_text(&pick(&s, k).query, &w).unwrap().into_stg();
        let Ok(g) = ground(&g0, &w, &SpatialMemory::new()).result else { return Ok(()) };
        let sched = synthesize(&g, &w, &SynthesisOptions::default(), &ProgrammingMemory::new()).unwrap();
        let mut bad = sched.attach_to(g);
        let i = h.index(bad.hypotheses.len());
        bad.hypotheses[i].status = if refute {
            HypothesisStatus::Refuted { reason: "flipped".into() }
        } else {
            HypothesisStatus::Unverified
        };
        prop_assert!(induced_plan(&bad, 0.0, &w).is_err());
        prop_assert!(synthesize(&bad, &w, &SynthesisOptions::default(), &ProgrammingMemory::new()).is_err());
        prop_assert!(synthesize(&g0, &w, &SynthesisOptions::default(), &ProgrammingMemory::new()).is_err());
    }

    #[test]
    fn directives_cover_their_nodes_and_beat_parallel(seed in 0u64..200, k in 0usize..120) {
        let w = campus(seed % 20);
        let s = suite(&w, seed, 40);
        let g0 = plan_text(&pick(&s, k).query, &w).unwrap().into_stg();
        let Ok(g) = ground(&g0, &w, &SpatialMemory::new()).result else { return Ok(()) };
        let opts = SynthesisOptions::default();
        let sched = synthesize(&g, &w, &opts, &ProgrammingMemory::new()).unwrap();
        for d in &sched.directives {
            if w.is_covered(&d.node) {
                prop_assert!(d.sensors.iter().any(|s| w.sensor(s).unwrap().covers.contains(&d.node)),
                    "{} unseen by {:?}", d.node, d.sensors);
            } else {
                prop_assert!(sched.meta.gaps.contains(&d.node));
            }
        }
        let par = baseline_parallel(&g.tau_v, &w, 0.0).unwrap();
        let (a, b) = (sched.score(&w, &opts.params, opts.witness_dwell_s).unwrap(),
                      par.score(&w, &opts.params, opts.witness_dwell_s).unwrap());
        if a.fidelity == 1.0 && b.fidelity == 1.0 {
            prop_assert!(a.score >= b.score, "stg {:?} vs parallel {:?}", a, b);
        }
    }

    #[test]
    fn episodes_account_and_stg_never_outspends_parallel(seed in 0u64..200, k in 0usize..120, sim_seed in any::<u64>()) {
        let w = campus(seed % 20);
        let s = suite(&w, seed, 40);
        let case = pick(&s, k);
        let g0 = plan_text(&case.query, &w).unwrap().into_stg();
        let Ok(g) = ground(&g0, &w, &SpatialMemory::new()).result else { return Ok(()) };
        let sched = synthesize(&g, &w, &SynthesisOptions::default(), &ProgrammingMemory::new()).unwrap();
        let par = baseline_parallel(&g.tau_v, &w, 0.0).unwrap();
        let config = SimConfig { seed: sim_seed, ..SimConfig::default() };
        let traj = TargetTrajectory::at_speed(&g.tau_v, &w, 0.0, config.static_velocity_mps);
        let a = run_episode(&sched, &w, &traj, &config).unwrap();
        let b = run_episode(&par, &w, &traj, &config).unwrap();
        prop_assert_eq!(&a, &run_episode(&sched, &w, &traj, &config).unwrap());
        prop_assert_eq!(a.bandwidth_mb, a.tfp as f64 * config.frame_size_mb);
        prop_assert_eq!(b.bandwidth_mb, b.tfp as f64 * config.frame_size_mb);
        prop_assert!(a.tfp <= b.tfp, "stg {} vs parallel {}", a.tfp, b.tfp);

        // every node observable and detection certain: both paradigms finish
        let certain = SimConfig { p_detect: 1.0, ..config };
        if g.tau_v.iter().all(|n| w.is_covered(n)) {
            prop_assert!(run_episode(&par, &w, &traj, &certain).unwrap().completed);
            prop_assert!(run_episode(&sched, &w, &traj, &certain).unwrap().completed);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_properties(
        seed in 0u64..20,
        raw in prop::collection::vec((0usize..78, 0.0f64..300.0, 1.0f64..60.0), 0..12),
        extra in (0usize..78, 0.0f64..300.0, 1.0f64..60.0),
        rotate in any::<prop::sample::Index>(),
        lambda in 0.0f64..2.0,
    ) {
        let w = campus(seed);
        let sensors: Vec<String> = w.sensors().map(|s| s.id.clone()).collect();
        let iv = |(s, t, d): (usize, f64, f64)| Interval {
            sensor: sensors[s % sensors.len()].clone(),
            start_s: t,
            end_s: t + d,
            dynamic: false,
        };
        let plan = ActivationPlan { intervals: raw.iter().copied().map(iv).collect() };
        let walk = w.nodes().take(12).map(|n| n.id.clone()).collect::<Vec<_>>();
        let walk: Vec<String> = stg::world::shortest_path(&walk[0], &walk[walk.len() - 1], &w).unwrap().unwrap().nodes;
        let witness = nominal_witness(&walk, &w, 0.0, 20.0);
        let params = ObjectiveParams { lambda, ..ObjectiveParams::default() };

        let base = evaluate_objective(&plan, &witness, &w, &params).unwrap();
        let zero = evaluate_objective(&plan, &witness, &w, &ObjectiveParams { lambda: 0.0, ..params }).unwrap();
        prop_assert_eq!(zero.score, zero.fidelity);

        let mut shuffled = plan.clone();
        if !shuffled.intervals.is_empty() {
            let r = rotate.index(shuffled.intervals.len());
            shuffled.intervals.rotate_left(r);
            shuffled.intervals.reverse();
        }
        prop_assert_eq!(evaluate_objective(&shuffled, &witness, &w, &params).unwrap(), base);

        let mut more = plan.clone();
        more.intervals.push(iv(extra));
        let grown = evaluate_objective(&more, &witness, &w, &params).unwrap();
        prop_assert!(grown.fidelity >= base.fidelity);
        prop_assert!(grown.cost >= base.cost);
    }

    #[test]
    fn witnesses_are_valid_trajectories(seed in 0u64..50) {
        let w = campus(seed % 10);
        let s = gen_queries(&w, &SuiteSpec { count: 30, seed, behavior: stg::bench::Behavior::trap(), ..SuiteSpec::default() }).unwrap();
        for c in &s.cases {
            prop_assert!(c.witness.validate(&w).is_ok(), "{}", c.id);
        }
    }
}

#[test]
fn aggregate_rows_sum_their_episodes() {
    let w = campus(3);
    let s = suite(&w, 3, 40);
    let config = BenchConfig::default();
    let run = run_bench(&w, &s, &Paradigm::ALL, &config).unwrap();
    assert_eq!(run.rows.len(), 15);
    for row in &run.rows {
        let eps: Vec<_> = run
            .episodes
            .iter()
            .filter(|e| e.paradigm == row.paradigm && e.tier == row.tier)
            .collect();
        let tfp: u64 = eps.iter().filter_map(|e| e.report.as_ref()).map(|r| r.tfp).sum();
        assert_eq!(row.tfp, tfp);
        assert_eq!(row.bandwidth_mb, config.sim.frame_size_mb * row.tfp as f64);
        let done = eps.iter().filter(|e| e.completed()).count();
        if !eps.is_empty() {
            assert_eq!(row.tcr_pct, 100.0 * done as f64 / eps.len() as f64);
        }
    }
    assert_eq!(aggregate(&run.episodes, &Paradigm::ALL, config.sim.frame_size_mb), run.rows);
}

#[test]
fn second_pass_needs_no_toolkit_calls() {
    let w = campus(5);
    let s = suite(&w, 5, 40);
    let (m, p) = (SpatialMemory::new(), ProgrammingMemory::new());
    let c = BenchConfig::default();
    let first = run_bench_with(&w, &s, &[Paradigm::Stg], &c, &m, &p).unwrap();
    let second = run_bench_with(&w, &s, &[Paradigm::Stg], &c, &m, &p).unwrap();
    assert!(first.episodes.iter().any(|e| e.verification_rounds > 0));
    assert!(second.episodes.iter().all(|e| e.verification_rounds == 0));
    assert_eq!(first.rows.iter().map(|r| r.tcr_pct).collect::<Vec<_>>(), second.rows.iter().map(|r| r.tcr_pct).collect::<Vec<_>>());
    assert!(s.cases.iter().any(|c| c.tier == Tier::T3b));
}
