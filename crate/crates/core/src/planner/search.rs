//! Greedy best-first search over ground states, ordered by the relaxed-plan
//! heuristic with FIFO tie-breaking, under wall-clock and expansion budgets.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use super::hff::{h_ff, INFINITY};
use super::{disjoint, subset, GroundTask};
use crate::model::{Plan, PlanStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    TimeOut,
    NodeCap,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Solved { plan: Plan },
    Unsolvable,
    Budget(Budget),
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub outcome: SearchOutcome,
    pub expansions: u64,
    pub elapsed: Duration,
}

struct Node {
    state: Vec<u32>,
    parent: Option<(usize, u32)>, // (node index, action index)
}

/// Greedy best-first search. `time_budget = None` means unbounded time;
/// `node_cap` bounds the number of expansions.
pub fn search(task: &GroundTask, time_budget: Option<Duration>, node_cap: u64) -> SearchResult {
    let start = Instant::now();
    if task.unreachable_goal {
        return SearchResult {
            outcome: SearchOutcome::Unsolvable,
            expansions: 0,
            elapsed: start.elapsed(),
        };
    }

    let mut nodes: Vec<Node> = vec![Node {
        state: task.init.clone(),
        parent: None,
    }];
    let mut closed: HashMap<Vec<u32>, ()> = HashMap::new();
    closed.insert(task.init.clone(), ());
    // Min-heap on (h, insertion sequence): FIFO among equal h values.
    let mut open: BinaryHeap<Reverse<(u32, u64, usize)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let h0 = h_ff(task, &task.init);
    if h0 != INFINITY {
        open.push(Reverse((h0, seq, 0)));
        seq += 1;
    }

    let mut expansions = 0u64;
    while let Some(Reverse((_, _, idx))) = open.pop() {
        if task.goal_satisfied(&nodes[idx].state) {
            return SearchResult {
                outcome: SearchOutcome::Solved {
                    plan: reconstruct(task, &nodes, idx),
                },
                expansions,
                elapsed: start.elapsed(),
            };
        }
        if expansions >= node_cap {
            return SearchResult {
                outcome: SearchOutcome::Budget(Budget::NodeCap),
                expansions,
                elapsed: start.elapsed(),
            };
        }
        if let Some(budget) = time_budget {
            if expansions % 1024 == 0 && start.elapsed() > budget {
                return SearchResult {
                    outcome: SearchOutcome::Budget(Budget::TimeOut),
                    expansions,
                    elapsed: start.elapsed(),
                };
            }
        }
        expansions += 1;

        let state = nodes[idx].state.clone();
        for (ai, action) in task.actions.iter().enumerate() {
            if !subset(&action.pre_pos, &state) || !disjoint(&action.pre_neg, &state) {
                continue;
            }
            let mut next: Vec<u32> = state
                .iter()
                .copied()
                .filter(|a| action.del.binary_search(a).is_err())
                .collect();
            next.extend_from_slice(&action.add);
            next.sort_unstable();
            next.dedup();
            if closed.contains_key(&next) {
                continue;
            }
            let h = h_ff(task, &next);
            closed.insert(next.clone(), ());
            if h == INFINITY {
                continue;
            }
            nodes.push(Node {
                state: next,
                parent: Some((idx, ai as u32)),
            });
            open.push(Reverse((h, seq, nodes.len() - 1)));
            seq += 1;
        }
    }

    SearchResult {
        outcome: SearchOutcome::Unsolvable,
        expansions,
        elapsed: start.elapsed(),
    }
}

fn reconstruct(task: &GroundTask, nodes: &[Node], mut idx: usize) -> Plan {
    let mut steps = Vec::new();
    while let Some((parent, ai)) = nodes[idx].parent {
        let action = &task.actions[ai as usize];
        steps.push(PlanStep {
            action: action.name.clone(),
            args: action.args.clone(),
        });
        idx = parent;
    }
    steps.reverse();
    Plan { steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply, satisfies, Domain, Problem};
    use crate::parser::{parse_domain, parse_problem};
    use crate::planner::{enumerate_ground_actions, ground, DEFAULT_GROUND_CAP};

    fn load(domain: &str, problem: &str) -> (Domain, Problem) {
        let d = parse_domain(domain).unwrap();
        let p = parse_problem(problem, &d).unwrap();
        (d, p)
    }

    fn solve_and_replay(d: &Domain, p: &Problem) -> Plan {
        let task = ground(d, p, DEFAULT_GROUND_CAP).unwrap();
        let result = search(&task, Some(Duration::from_secs(30)), 1_000_000);
        let plan = match result.outcome {
            SearchOutcome::Solved { plan } => plan,
            other => panic!("expected a plan, got {other:?}"),
        };
        // Replay against the lifted semantics as an end-to-end check.
        let all = enumerate_ground_actions(d, &p.objects, DEFAULT_GROUND_CAP).unwrap();
        let mut state = p.init.clone();
        for step in &plan.steps {
            let ga = all
                .iter()
                .find(|a| a.schema == step.action && a.binding == step.args)
                .unwrap();
            state = apply(&state, ga).unwrap();
        }
        assert!(satisfies(&state, &p.goal));
        plan
    }

    #[test]
    fn solves_gripper_with_a_three_step_plan() {
        let (d, p) = load(
            include_str!("../../../../fixtures/gripper/domain.pddl"),
            include_str!("../../../../fixtures/gripper/problem.pddl"),
        );
        let plan = solve_and_replay(&d, &p);
        assert_eq!(plan.steps.len(), 3);
    }

    #[test]
    fn solves_blocks_fixture() {
        let (d, p) = load(
            include_str!("../../../../fixtures/blocks/domain.pddl"),
            include_str!("../../../../fixtures/blocks/problem.pddl"),
        );
        solve_and_replay(&d, &p);
    }

    #[test]
    fn solves_depot_fixture() {
        let (d, p) = load(
            include_str!("../../../../fixtures/depot/domain.pddl"),
            include_str!("../../../../fixtures/depot/problem.pddl"),
        );
        solve_and_replay(&d, &p);
    }

    #[test]
    fn solves_grid_fixture() {
        let (d, p) = load(
            include_str!("../../../../fixtures/grid/domain.pddl"),
            include_str!("../../../../fixtures/grid/problem.pddl"),
        );
        solve_and_replay(&d, &p);
    }

    #[test]
    fn solves_satellite_fixture() {
        let (d, p) = load(
            include_str!("../../../../fixtures/satellite/domain.pddl"),
            include_str!("../../../../fixtures/satellite/problem.pddl"),
        );
        solve_and_replay(&d, &p);
    }

    #[test]
    fn reports_unsolvable_without_search_when_goal_unreachable() {
        let (d, p) = load(
            "(define (domain d) (:predicates (p) (q)) \
                 (:action a :parameters () :precondition (q) :effect (q)))",
            "(define (problem pr) (:domain d) (:init) (:goal (and (p))))",
        );
        let task = ground(&d, &p, DEFAULT_GROUND_CAP).unwrap();
        let result = search(&task, None, 1000);
        assert!(matches!(result.outcome, SearchOutcome::Unsolvable));
        assert_eq!(result.expansions, 0);
    }

    #[test]
    fn dead_end_exhausts_to_unsolvable() {
        // p reachable under relaxation but not in reality: the only action
        // deletes its own precondition before the second application.
        let (d, p) = load(
            "(define (domain d) (:predicates (p) (q) (r)) \
                 (:action a :parameters () :precondition (p) :effect (and (q) (not (p)))) \
                 (:action b :parameters () :precondition (and (p) (q)) :effect (r)))",
            "(define (problem pr) (:domain d) (:init (p)) (:goal (and (r))))",
        );
        let task = ground(&d, &p, DEFAULT_GROUND_CAP).unwrap();
        let result = search(&task, None, 1000);
        assert!(matches!(result.outcome, SearchOutcome::Unsolvable));
    }

    #[test]
    fn node_cap_reports_budget() {
        let (d, p) = load(
            include_str!("../../../../fixtures/blocks/domain.pddl"),
            include_str!("../../../../fixtures/blocks/problem.pddl"),
        );
        let task = ground(&d, &p, DEFAULT_GROUND_CAP).unwrap();
        let result = search(&task, None, 0);
        assert!(matches!(
            result.outcome,
            SearchOutcome::Budget(Budget::NodeCap)
        ));
    }

    #[test]
    fn deterministic_plan_across_runs() {
        let (d, p) = load(
            include_str!("../../../../fixtures/blocks/domain.pddl"),
            include_str!("../../../../fixtures/blocks/problem.pddl"),
        );
        let task = ground(&d, &p, DEFAULT_GROUND_CAP).unwrap();
        let a = search(&task, None, 1_000_000);
        let b = search(&task, None, 1_000_000);
        match (a.outcome, b.outcome) {
            (SearchOutcome::Solved { plan: pa }, SearchOutcome::Solved { plan: pb }) => {
                assert_eq!(pa, pb);
                assert_eq!(a.expansions, b.expansions);
            }
            other => panic!("expected two solutions, got {other:?}"),
        }
    }
}
