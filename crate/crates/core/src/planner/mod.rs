//! Built-in satisficing planner: typed grounding with delete-relaxation
//! reachability pruning, the relaxed-plan heuristic, and greedy best-first
//! search under time/expansion budgets.

mod hff;
mod search;

pub use hff::{h_ff, h_ff_with_plan, relaxed_plan_valid, INFINITY};
pub use search::{search, Budget, SearchOutcome, SearchResult};

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{
    Domain, GroundAction, GroundAtom, Ident, ModelError, ObjectDecl, Problem, TypeHierarchy,
};

pub const DEFAULT_GROUND_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum GroundError {
    #[error("ground action count exceeds the cap of {cap}")]
    GroundingExplosion { cap: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Enumerates every type-consistent instantiation of every action schema.
///
/// No reachability pruning happens here; [`ground`] layers the
/// delete-relaxation fixpoint on top, and the problem generator walks over
/// this raw set directly.
pub fn enumerate_ground_actions(
    domain: &Domain,
    objects: &[ObjectDecl],
    cap: usize,
) -> Result<Vec<GroundAction>, GroundError> {
    let hierarchy = TypeHierarchy::of(domain)?;
    let mut out = Vec::new();
    for schema in &domain.actions {
        // objects compatible with each parameter position, in name order
        let pools: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|p| {
                objects
                    .iter()
                    .filter(|o| hierarchy.is_subtype(&o.ty, &p.ty))
                    .map(|o| o.name.as_str())
                    .collect()
            })
            .collect();
        if pools.iter().any(|p| p.is_empty()) && !schema.params.is_empty() {
            continue;
        }
        let mut binding: Vec<Ident> = Vec::with_capacity(pools.len());
        enumerate_bindings(schema, &pools, &mut binding, &mut out, cap)?;
    }
    Ok(out)
}

fn enumerate_bindings(
    schema: &crate::model::ActionSchema,
    pools: &[Vec<&str>],
    binding: &mut Vec<Ident>,
    out: &mut Vec<GroundAction>,
    cap: usize,
) -> Result<(), GroundError> {
    if binding.len() == pools.len() {
        if out.len() >= cap {
            return Err(GroundError::GroundingExplosion { cap });
        }
        out.push(schema.instantiate(binding)?);
        return Ok(());
    }
    for obj in &pools[binding.len()] {
        binding.push((*obj).to_string());
        enumerate_bindings(schema, pools, binding, out, cap)?;
        binding.pop();
    }
    Ok(())
}

/// A ground action over dense atom indices. Index slices are sorted.
#[derive(Debug, Clone)]
pub struct TaskAction {
    pub name: Ident,
    pub args: Vec<Ident>,
    pub pre_pos: Vec<u32>,
    pub pre_neg: Vec<u32>,
    pub add: Vec<u32>,
    pub del: Vec<u32>,
}

/// A grounded task pruned to the delete-relaxation-reachable fragment.
#[derive(Debug, Clone)]
pub struct GroundTask {
    pub atoms: Vec<GroundAtom>,
    pub actions: Vec<TaskAction>,
    pub init: Vec<u32>,
    pub goal: Vec<u32>,
    /// Actions adding each atom, by atom index.
    pub achievers: Vec<Vec<u32>>,
    /// Actions requiring each atom positively, by atom index.
    pub requirers: Vec<Vec<u32>>,
    /// Set when a goal atom fell outside the relaxed-reachable set; the
    /// task is unsolvable without any search.
    pub unreachable_goal: bool,
}

impl GroundTask {
    pub fn goal_satisfied(&self, state: &[u32]) -> bool {
        !self.unreachable_goal && subset(&self.goal, state)
    }
}

/// Sorted-slice subset test.
pub fn subset(needle: &[u32], haystack: &[u32]) -> bool {
    let mut it = haystack.iter();
    'outer: for n in needle {
        for h in it.by_ref() {
            match h.cmp(n) {
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
                std::cmp::Ordering::Less => {}
            }
        }
        return false;
    }
    true
}

/// Sorted-slice disjointness test.
pub fn disjoint(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => return false,
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    true
}

/// Grounds a type-checked pair and prunes to the relaxed-reachable
/// fragment (adds only, negative preconditions treated as free).
pub fn ground(domain: &Domain, problem: &Problem, cap: usize) -> Result<GroundTask, GroundError> {
    let lifted = enumerate_ground_actions(domain, &problem.objects, cap)?;
    let mut atom_ids: HashMap<GroundAtom, u32> = HashMap::new();
    let mut atoms: Vec<GroundAtom> = Vec::new();
    let mut intern = |atom: &GroundAtom, atoms: &mut Vec<GroundAtom>| -> u32 {
        if let Some(&id) = atom_ids.get(atom) {
            return id;
        }
        let id = atoms.len() as u32;
        atoms.push(atom.clone());
        atom_ids.insert(atom.clone(), id);
        id
    };
    let init: Vec<u32> = problem
        .init
        .atoms
        .iter()
        .map(|a| intern(a, &mut atoms))
        .collect();
    let goal: Vec<u32> = problem.goal.iter().map(|a| intern(a, &mut atoms)).collect();
    let index = |set: &std::collections::BTreeSet<GroundAtom>,
                 atoms: &mut Vec<GroundAtom>,
                 intern: &mut dyn FnMut(&GroundAtom, &mut Vec<GroundAtom>) -> u32|
     -> Vec<u32> {
        let mut v: Vec<u32> = set.iter().map(|a| intern(a, atoms)).collect();
        v.sort_unstable();
        v
    };
    let mut all: Vec<TaskAction> = Vec::with_capacity(lifted.len());
    for ga in &lifted {
        all.push(TaskAction {
            name: ga.schema.clone(),
            args: ga.binding.clone(),
            pre_pos: index(&ga.pre_pos, &mut atoms, &mut intern),
            pre_neg: index(&ga.pre_neg, &mut atoms, &mut intern),
            add: index(&ga.add, &mut atoms, &mut intern),
            del: index(&ga.del, &mut atoms, &mut intern),
        });
    }
    drop(intern);

    // Relaxed reachability fixpoint from init.
    let n_atoms = atoms.len();
    let mut reached = vec![false; n_atoms];
    for &a in &init {
        reached[a as usize] = true;
    }
    let mut unsat: Vec<usize> = all.iter().map(|a| a.pre_pos.len()).collect();
    for (i, action) in all.iter().enumerate() {
        unsat[i] = action
            .pre_pos
            .iter()
            .filter(|&&p| !reached[p as usize])
            .count();
    }
    let mut applied = vec![false; all.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for (i, action) in all.iter().enumerate() {
            if applied[i] || unsat[i] > 0 {
                continue;
            }
            applied[i] = true;
            for &a in &action.add {
                if !reached[a as usize] {
                    reached[a as usize] = true;
                    changed = true;
                    for (j, other) in all.iter().enumerate() {
                        if !applied[j] && other.pre_pos.binary_search(&a).is_ok() {
                            unsat[j] = unsat[j].saturating_sub(1);
                        }
                    }
                }
            }
        }
    }

    let unreachable_goal = goal.iter().any(|&g| !reached[g as usize]);

    // Re-index to the reachable fragment.
    let mut remap = vec![u32::MAX; n_atoms];
    let mut kept_atoms = Vec::new();
    for (old, keep) in reached.iter().enumerate() {
        if *keep {
            remap[old] = kept_atoms.len() as u32;
            kept_atoms.push(atoms[old].clone());
        }
    }
    let remap_ids = |ids: &[u32]| -> Vec<u32> {
        let mut v: Vec<u32> = ids
            .iter()
            .filter(|&&a| remap[a as usize] != u32::MAX)
            .map(|&a| remap[a as usize])
            .collect();
        v.sort_unstable();
        v
    };
    let mut actions = Vec::new();
    for (i, action) in all.into_iter().enumerate() {
        if !applied[i] {
            continue;
        }
        actions.push(TaskAction {
            pre_pos: remap_ids(&action.pre_pos),
            pre_neg: remap_ids(&action.pre_neg),
            add: remap_ids(&action.add),
            del: remap_ids(&action.del),
            ..action
        });
    }
    let mut achievers = vec![Vec::new(); kept_atoms.len()];
    let mut requirers = vec![Vec::new(); kept_atoms.len()];
    for (i, action) in actions.iter().enumerate() {
        for &a in &action.add {
            achievers[a as usize].push(i as u32);
        }
        for &p in &action.pre_pos {
            requirers[p as usize].push(i as u32);
        }
    }
    let mut init = remap_ids(&init);
    init.dedup();
    let mut goal_kept = remap_ids(&goal);
    goal_kept.dedup();
    Ok(GroundTask {
        atoms: kept_atoms,
        actions,
        init,
        goal: goal_kept,
        achievers,
        requirers,
        unreachable_goal,
    })
}
