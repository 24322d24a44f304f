//! Shared test-side machinery: fixture loading, a breadth-first search
//! oracle, and a naive ground-action enumerator. These are written
//! independently of the library's planner so the two can check each other.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::path::PathBuf;

use pddlgen::model::{
    apply, is_applicable, satisfies, Domain, GroundAction, GroundAtom, Problem, State,
    TypeHierarchy,
};
use pddlgen::parser::{parse_domain, parse_problem};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn load_fixture(name: &str) -> (Domain, Problem) {
    let dir = fixture_dir().join(name);
    let dtext = std::fs::read_to_string(dir.join("domain.pddl")).unwrap();
    let ptext = std::fs::read_to_string(dir.join("problem.pddl")).unwrap();
    let domain = parse_domain(&dtext).unwrap();
    let problem = parse_problem(&ptext, &domain).unwrap();
    (domain, problem)
}

pub const FIXTURES: [&str; 5] = ["blocks", "depot", "grid", "gripper", "satellite"];

/// Naive ground-action enumerator: type-compatible bindings by direct
/// cartesian product over a flat object list, no pruning, no recursion
/// tricks. Deliberately simple and slow.
pub fn naive_ground_actions(domain: &Domain, problem: &Problem) -> Vec<GroundAction> {
    let hierarchy = TypeHierarchy::of(domain).unwrap();
    let mut out = Vec::new();
    for schema in &domain.actions {
        let mut bindings: Vec<Vec<String>> = vec![vec![]];
        for param in &schema.params {
            let mut next = Vec::new();
            for binding in &bindings {
                for obj in &problem.objects {
                    if hierarchy.is_subtype(&obj.ty, &param.ty) {
                        let mut b = binding.clone();
                        b.push(obj.name.clone());
                        next.push(b);
                    }
                }
            }
            bindings = next;
        }
        for b in bindings {
            out.push(schema.instantiate(&b).unwrap());
        }
    }
    out
}

#[derive(Debug, PartialEq, Eq)]
pub enum OracleOutcome {
    /// Shortest plan length to a goal state.
    Solvable(usize),
    Unsolvable,
    /// The state space exceeded the cap before an answer was reached.
    Exhausted,
}

/// Breadth-first search over full states using only the lifted model
/// operations. Optimal, exhaustive, and entirely independent of the
/// library's grounding and heuristics.
pub fn bfs_oracle(domain: &Domain, problem: &Problem, state_cap: usize) -> OracleOutcome {
    let actions = naive_ground_actions(domain, problem);
    let mut seen: HashSet<BTreeSet<GroundAtom>> = HashSet::new();
    let mut queue: VecDeque<(State, usize)> = VecDeque::new();
    seen.insert(problem.init.atoms.clone());
    queue.push_back((problem.init.clone(), 0));
    while let Some((state, dist)) = queue.pop_front() {
        if satisfies(&state, &problem.goal) {
            return OracleOutcome::Solvable(dist);
        }
        for action in &actions {
            if !is_applicable(&state, action) {
                continue;
            }
            let next = apply(&state, action).unwrap();
            if seen.contains(&next.atoms) {
                continue;
            }
            if seen.len() >= state_cap {
                return OracleOutcome::Exhausted;
            }
            seen.insert(next.atoms.clone());
            queue.push_back((next, dist + 1));
        }
    }
    OracleOutcome::Unsolvable
}

/// Delete-relaxed reachability closure computed the slow way: repeatedly
/// apply every action whose positive preconditions hold, adds only, until
/// nothing changes. Independent oracle for relaxed-unreachability.
pub fn relaxed_closure(actions: &[GroundAction], init: &State) -> BTreeSet<GroundAtom> {
    let mut atoms = init.atoms.clone();
    loop {
        let before = atoms.len();
        for action in actions {
            if action.pre_pos.iter().all(|a| atoms.contains(a)) {
                atoms.extend(action.add.iter().cloned());
            }
        }
        if atoms.len() == before {
            return atoms;
        }
    }
}

/// All base pairs (unordered, no self-pairing) over the fixture corpus.
pub fn fixture_pairs() -> Vec<((Domain, Problem), (Domain, Problem), String)> {
    let mut out = Vec::new();
    for (i, a) in FIXTURES.iter().enumerate() {
        for b in FIXTURES.iter().skip(i + 1) {
            out.push((load_fixture(a), load_fixture(b), format!("{a}-{b}")));
        }
    }
    out
}

