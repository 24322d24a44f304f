//! End-to-end acceptance checks, one per criterion, each printing a PASS or
//! FAIL line. Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines directly.

mod common;

use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use common::*;
use pddlgen::fusion::{fuse_pair, GenerationParams, TraceEvent};
use pddlgen::harness::{
    run_depth, run_sweep, solved_fractions, sweep_csv, BaseTask, ExperimentConfig, ItemStatus,
};
use pddlgen::model::{apply, is_applicable, satisfies, GroundAtom};
use pddlgen::parser::{parse_domain, parse_problem, print_domain};
use pddlgen::planner::{
    ground, h_ff_with_plan, search, SearchOutcome, DEFAULT_GROUND_CAP, INFINITY,
};
use pddlgen::probgen::generate;
use pddlgen::seed::{derive, rng_from};
use pddlgen::validator::{validate_plan, Validation};
use rand::Rng;

fn criterion(name: &str, f: impl FnOnce()) {
    let result = catch_unwind(AssertUnwindSafe(f));
    let status = if result.is_ok() { "PASS" } else { "FAIL" };
    println!("[acceptance] {name}: {status}");
    if let Err(e) = result {
        resume_unwind(e);
    }
}

fn batch_params() -> GenerationParams {
    GenerationParams {
        prob_add_pre: 0.5,
        prob_add_eff: 0.5,
        prob_rem_pre: 0.0,
        prob_rem_eff: 0.3,
        prob_neg: 0.5,
        num_objs: Some(5),
        rev_flag: false,
        walk_len: 20,
        goal_prob: 0.3,
        seed: 42,
    }
}

fn five_pairs() -> Vec<(&'static str, &'static str)> {
    vec![
        ("gripper", "blocks"),
        ("gripper", "depot"),
        ("blocks", "grid"),
        ("depot", "satellite"),
        ("grid", "satellite"),
    ]
}

#[test]
fn criterion_1_batch_generation_all_witness_valid() {
    criterion("1 batch-generation: 500 records, all witness-valid, <60s", || {
        let start = Instant::now();
        let pairs = five_pairs();
        let jobs: Vec<(usize, u64)> = (0..pairs.len())
            .flat_map(|p| (0..100u64).map(move |s| (p, s)))
            .collect();
        let failures: Vec<String> = jobs
            .par_iter()
            .filter_map(|&(p, s)| {
                let (a, b) = pairs[p];
                let (d1, p1) = load_fixture(a);
                let (d2, p2) = load_fixture(b);
                let params = batch_params();
                let master = derive(42, &[p as u64, s]);
                let mut rng = rng_from(master);
                let (fused, _, renames) = fuse_pair(&d1, &d2, &params, &mut rng).ok()?;
                let gen = generate(&fused, &p1, &p2, &renames, &params, master, 1, 0);
                let label = format!("{a}-{b} seed {s}");
                match gen {
                    Err(e) => Some(format!("{label}: generation failed: {e}")),
                    Ok((problem, witness)) => {
                        match validate_plan(&fused, &problem, &witness) {
                            Ok(Validation::Valid { .. }) => None,
                            other => Some(format!("{label}: witness invalid: {other:?}")),
                        }
                    }
                }
            })
            .collect();
        assert!(failures.is_empty(), "{} failures, first: {}", failures.len(), failures[0]);
        assert_eq!(jobs.len(), 500);
        assert!(
            start.elapsed() < Duration::from_secs(60),
            "took {:?}",
            start.elapsed()
        );
    });
}

#[test]
fn criterion_2_printer_roundtrip_fixpoint() {
    criterion("2 round-trip: print then parse is a fixpoint", || {
        for name in FIXTURES {
            let (domain, _) = load_fixture(name);
            let text = print_domain(&domain);
            let reparsed = parse_domain(&text).unwrap();
            assert_eq!(reparsed, domain, "fixture {name}");
            assert_eq!(print_domain(&reparsed), text, "fixture {name}");
        }
        let mut checked = 0;
        for (pi, ((d1, _), (d2, _), pair)) in fixture_pairs().into_iter().enumerate() {
            for s in 0..20u64 {
                let mut rng = rng_from(derive(7, &[pi as u64, s]));
                let (fused, _, _) =
                    fuse_pair(&d1, &d2, &GenerationParams::default(), &mut rng).unwrap();
                let text = print_domain(&fused);
                let reparsed =
                    parse_domain(&text).unwrap_or_else(|r| panic!("{pair} seed {s}: {r}"));
                assert_eq!(reparsed, fused, "{pair} seed {s}");
                assert_eq!(print_domain(&reparsed), text, "{pair} seed {s}");
                checked += 1;
            }
        }
        assert_eq!(checked, 200);
    });
}

#[test]
fn criterion_3_search_agrees_with_bfs_oracle() {
    criterion("3 planner vs breadth-first oracle agreement", || {
        let start = Instant::now();
        let check = |domain: &pddlgen::model::Domain,
                     problem: &pddlgen::model::Problem,
                     label: &str|
         -> bool {
            match bfs_oracle(domain, problem, 100_000) {
                OracleOutcome::Exhausted => false,
                oracle => {
                    let task = ground(domain, problem, DEFAULT_GROUND_CAP).unwrap();
                    let result = search(&task, None, 5_000_000);
                    match (&oracle, &result.outcome) {
                        (OracleOutcome::Solvable(_), SearchOutcome::Solved { plan }) => {
                            match validate_plan(domain, problem, plan) {
                                Ok(Validation::Valid { .. }) => {}
                                other => panic!("{label}: found plan invalid: {other:?}"),
                            }
                        }
                        (OracleOutcome::Unsolvable, SearchOutcome::Unsolvable) => {}
                        other => panic!("{label}: disagreement: {other:?}"),
                    }
                    true
                }
            }
        };
        for name in FIXTURES {
            let (domain, problem) = load_fixture(name);
            assert!(check(&domain, &problem, name), "{name}: oracle exhausted");
        }
        let params = GenerationParams {
            num_objs: Some(3),
            walk_len: 8,
            ..batch_params()
        };
        let pairs = fixture_pairs();
        let mut checked = 0;
        let mut attempt = 0u64;
        while checked < 50 {
            let ((d1, p1), (d2, p2), pair) = &pairs[attempt as usize % pairs.len()];
            let master = derive(11, &[attempt]);
            attempt += 1;
            let mut rng = rng_from(master);
            let Ok((fused, _, renames)) = fuse_pair(d1, d2, &params, &mut rng) else {
                continue;
            };
            let Ok((problem, _)) = generate(&fused, p1, p2, &renames, &params, master, 1, 0)
            else {
                continue;
            };
            if check(&fused, &problem, &format!("{pair} attempt {attempt}")) {
                checked += 1;
            }
            assert!(attempt < 500, "too many oracle-exhausted attempts");
        }
        assert!(
            start.elapsed() < Duration::from_secs(300),
            "took {:?}",
            start.elapsed()
        );
    });
}

#[test]
fn criterion_4_heuristic_properties_on_sampled_states() {
    criterion("4 heuristic: zero iff goal, infinite iff relaxed-unreachable", || {
        let mut sampled = 0;
        for name in FIXTURES {
            let (domain, problem) = load_fixture(name);
            let task = ground(&domain, &problem, DEFAULT_GROUND_CAP).unwrap();
            let actions = naive_ground_actions(&domain, &problem);
            let index_of: std::collections::HashMap<&GroundAtom, u32> = task
                .atoms
                .iter()
                .enumerate()
                .map(|(i, a)| (a, i as u32))
                .collect();
            let mut rng = rng_from(derive(13, &[sampled as u64]));
            let mut state = problem.init.clone();
            for _ in 0..200 {
                // Advance one random applicable step, restarting at dead ends.
                let applicable: Vec<_> =
                    actions.iter().filter(|a| is_applicable(&state, a)).collect();
                state = if applicable.is_empty() {
                    problem.init.clone()
                } else {
                    apply(&state, applicable[rng.gen_range(0..applicable.len())]).unwrap()
                };

                let ids: Vec<u32> = {
                    let mut v: Vec<u32> =
                        state.atoms.iter().map(|a| index_of[a]).collect();
                    v.sort_unstable();
                    v
                };
                let (h, plan) = h_ff_with_plan(&task, &ids);
                let at_goal = satisfies(&state, &problem.goal);
                assert_eq!(h == 0, at_goal, "{name}: zero iff goal");
                let closure = relaxed_closure(&actions, &state);
                let relaxed_reachable =
                    problem.goal.iter().all(|g| closure.contains(g));
                assert_eq!(h == INFINITY, !relaxed_reachable, "{name}: infinity");
                if h != INFINITY {
                    // Replay the relaxed plan independently: adds only.
                    let mut holds: std::collections::BTreeSet<GroundAtom> =
                        state.atoms.clone();
                    for &ai in &plan {
                        let a = &task.actions[ai as usize];
                        for &p in &a.pre_pos {
                            assert!(
                                holds.contains(&task.atoms[p as usize]),
                                "{name}: relaxed plan precondition"
                            );
                        }
                        for &add in &a.add {
                            holds.insert(task.atoms[add as usize].clone());
                        }
                    }
                    for g in &problem.goal {
                        assert!(holds.contains(g), "{name}: relaxed plan reaches goal");
                    }
                }
                sampled += 1;
            }
        }
        assert_eq!(sampled, 1000);
    });
}

#[test]
fn criterion_5_mutation_rates_calibrated() {
    criterion("5 mutation gates fire at their configured rates", || {
        let (d1, _) = load_fixture("gripper");
        let (d2, _) = load_fixture("blocks");
        let actions_per_fusion = d1.actions.len() + d2.actions.len();
        let trials = 10_000usize;
        let fusions = trials.div_ceil(actions_per_fusion);
        for (pi, p) in [0.3, 0.5, 0.7].into_iter().enumerate() {
            let params = GenerationParams {
                prob_add_pre: p,
                prob_add_eff: 0.0,
                prob_rem_pre: 0.0,
                prob_rem_eff: 0.0,
                prob_neg: p,
                ..GenerationParams::default()
            };
            let mut gate_hits = 0usize;
            let mut adds = 0usize;
            let mut negs = 0usize;
            let mut n = 0usize;
            for s in 0..fusions as u64 {
                let mut rng = rng_from(derive(17, &[pi as u64, s]));
                let (_, trace, _) = fuse_pair(&d1, &d2, &params, &mut rng).unwrap();
                for e in &trace.events {
                    if let TraceEvent::AddedPrecondition { literal, .. } = e {
                        gate_hits += 1;
                        adds += 1;
                        if literal.negated {
                            negs += 1;
                        }
                    }
                }
                n += actions_per_fusion;
            }
            let check = |hits: usize, n: usize, p: f64, what: &str| {
                let freq = hits as f64 / n as f64;
                let sigma = (p * (1.0 - p) / n as f64).sqrt();
                assert!(
                    (freq - p).abs() <= 3.0 * sigma,
                    "{what} at p={p}: freq {freq:.4} outside 3 sigma ({sigma:.4})"
                );
            };
            check(gate_hits, n, p, "add-precondition gate");
            check(negs, adds, p, "negation of added literals");
        }
    });
}

fn fixture_bases() -> Vec<BaseTask> {
    FIXTURES
        .iter()
        .map(|name| {
            let (domain, problem) = load_fixture(name);
            BaseTask {
                name: name.to_string(),
                domain,
                problem,
            }
        })
        .collect()
}

#[test]
fn criterion_6_sweep_shape_and_determinism() {
    criterion("6 sweep: 54 rows, byte-identical across reruns", || {
        let start = Instant::now();
        let bases = fixture_bases();
        let cfg = ExperimentConfig {
            params: GenerationParams::default(),
            depths: vec![1],
            items_per_cell: 5,
            time_budget: None,
            node_cap: 2_000,
            num_objs: Some(5),
            seed: 42,
            jobs: None,
        };
        let rows_a = run_sweep(&bases, &cfg);
        assert_eq!(rows_a.len(), 54);
        let rows_b = run_sweep(&bases, &cfg);
        let (csv_a, csv_b) = (sweep_csv(&rows_a), sweep_csv(&rows_b));
        assert_eq!(csv_a, csv_b);
        assert_eq!(csv_a.lines().count(), 55);
        assert!(
            start.elapsed() < Duration::from_secs(30 * 60),
            "took {:?}",
            start.elapsed()
        );
    });
}

#[test]
fn criterion_7_depth_trend() {
    criterion("7 depth: solvability does not improve with depth", || {
        let bases = fixture_bases();
        let cfg = ExperimentConfig {
            params: GenerationParams::default(),
            depths: vec![1, 2, 3],
            items_per_cell: 10,
            time_budget: Some(Duration::from_secs(60)),
            node_cap: 50_000,
            num_objs: Some(5),
            seed: 42,
            jobs: None,
        };
        let results = run_depth(&bases, &cfg);
        assert_eq!(results.len(), 30);
        for r in &results {
            assert!(
                r.status != ItemStatus::GenerationFailed && r.witness_valid,
                "depth {} item {}: {:?}",
                r.depth,
                r.item,
                r.status
            );
        }
        let fractions = solved_fractions(&results);
        let at = |d: u32| fractions.iter().find(|(x, _)| *x == d).unwrap().1;
        assert!(at(1) >= 0.8, "depth 1 solved only {:.2}", at(1));
        assert!(
            at(1) >= at(3) || (at(1) == 1.0 && at(3) == 1.0),
            "depth 1 {:.2} vs depth 3 {:.2}",
            at(1),
            at(3)
        );
    });
}

#[test]
fn criterion_8_parser_fuzzing_never_panics() {
    criterion("8 fuzz: random and mutated inputs never panic the parser", || {
        // Random byte soup, biased toward structural characters.
        let alphabet: Vec<u8> =
            b"()?-:_ \t\n;abdefinopr0123456789\xff\x00\x80".to_vec();
        let panics: usize = (0..1000u64)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = rng_from(derive(23, &[chunk]));
                let mut count = 0;
                for _ in 0..1000 {
                    let len = rng.gen_range(0..64);
                    let bytes: Vec<u8> = (0..len)
                        .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                        .collect();
                    let text = String::from_utf8_lossy(&bytes).into_owned();
                    if catch_unwind(AssertUnwindSafe(|| {
                        let _ = parse_domain(&text);
                    }))
                    .is_err()
                    {
                        count += 1;
                    }
                }
                count
            })
            .sum();
        assert_eq!(panics, 0, "random-input panics");

        // Structured mutations of real fixture text.
        let (gd, _) = load_fixture("gripper");
        let sources: Vec<String> = FIXTURES
            .iter()
            .flat_map(|name| {
                let dir = fixture_dir().join(name);
                ["domain.pddl", "problem.pddl"]
                    .into_iter()
                    .map(move |f| std::fs::read_to_string(dir.join(f)).unwrap())
            })
            .collect();
        let mut rng = rng_from(29);
        let mut mutation_panics = 0;
        for _ in 0..1000 {
            let mut text: Vec<u8> =
                sources[rng.gen_range(0..sources.len())].bytes().collect();
            for _ in 0..rng.gen_range(1..4) {
                let pos = rng.gen_range(0..text.len());
                match rng.gen_range(0..3) {
                    0 => text[pos] = b"()? ;x"[rng.gen_range(0..6)],
                    1 => {
                        text.remove(pos);
                    }
                    _ => text.insert(pos, b"()"[rng.gen_range(0..2)]),
                }
            }
            let text = String::from_utf8_lossy(&text).into_owned();
            if catch_unwind(AssertUnwindSafe(|| {
                if let Ok(d) = parse_domain(&text) {
                    let _ = print_domain(&d);
                }
                let _ = parse_problem(&text, &gd);
            }))
            .is_err()
            {
                mutation_panics += 1;
            }
        }
        assert_eq!(mutation_panics, 0, "mutated-fixture panics");
    });
}
