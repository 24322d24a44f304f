//! Relaxed-plan heuristic: build the delete-relaxed planning graph from a
//! state, then extract a relaxed plan by chasing best supporters backwards.

use super::{GroundTask, TaskAction};

pub const INFINITY: u32 = u32::MAX;

/// Heuristic value only; see [`h_ff_with_plan`] for the relaxed plan.
pub fn h_ff(task: &GroundTask, state: &[u32]) -> u32 {
    h_ff_with_plan(task, state).0
}

/// Returns the relaxed-plan length and the extracted relaxed plan as action
/// indices into `task.actions`, ordered by supporter layer.
///
/// Best supporter of an atom is the first action that adds it: earliest
/// layer, lowest action index within the layer. Returns `(INFINITY, vec![])`
/// when a goal atom is unreachable under the relaxation.
pub fn h_ff_with_plan(task: &GroundTask, state: &[u32]) -> (u32, Vec<u32>) {
    let n_atoms = task.atoms.len();
    let n_actions = task.actions.len();
    if task.unreachable_goal {
        return (INFINITY, Vec::new());
    }

    // atom_layer[a]: first layer where a holds; supporter[a]: action that
    // first added it (usize::MAX for init atoms).
    let mut atom_layer = vec![INFINITY; n_atoms];
    let mut supporter = vec![u32::MAX; n_atoms];
    let mut unsat: Vec<u32> = task.actions.iter().map(|a| a.pre_pos.len() as u32).collect();
    let mut applied = vec![false; n_actions];

    let mut frontier: Vec<u32> = Vec::new();
    for &a in state {
        atom_layer[a as usize] = 0;
        frontier.push(a);
    }

    let mut layer = 0u32;
    while task
        .goal
        .iter()
        .any(|&g| atom_layer[g as usize] == INFINITY)
    {
        // Actions becoming applicable once this frontier lands.
        let mut newly: Vec<u32> = Vec::new();
        for &atom in &frontier {
            for &ai in &task.requirers[atom as usize] {
                let ai_us = ai as usize;
                if applied[ai_us] {
                    continue;
                }
                unsat[ai_us] -= 1;
                if unsat[ai_us] == 0 {
                    applied[ai_us] = true;
                    newly.push(ai);
                }
            }
        }
        if layer == 0 {
            // Zero-precondition actions fire in the first wave.
            for (i, action) in task.actions.iter().enumerate() {
                if !applied[i] && action.pre_pos.is_empty() {
                    applied[i] = true;
                    newly.push(i as u32);
                }
            }
        }
        if newly.is_empty() {
            return (INFINITY, Vec::new());
        }
        newly.sort_unstable();
        layer += 1;
        frontier.clear();
        for &ai in &newly {
            for &a in &task.actions[ai as usize].add {
                if atom_layer[a as usize] == INFINITY {
                    atom_layer[a as usize] = layer;
                    supporter[a as usize] = ai;
                    frontier.push(a);
                }
            }
        }
    }

    // Backward extraction: per-layer goal sets, supporters chosen above.
    let max_layer = task
        .goal
        .iter()
        .map(|&g| atom_layer[g as usize])
        .max()
        .unwrap_or(0) as usize;
    let mut goals_at: Vec<Vec<u32>> = vec![Vec::new(); max_layer + 1];
    let mut marked = vec![false; n_atoms];
    for &g in &task.goal {
        let l = atom_layer[g as usize] as usize;
        if l > 0 && !marked[g as usize] {
            marked[g as usize] = true;
            goals_at[l].push(g);
        }
    }
    let mut chosen: Vec<u32> = Vec::new();
    let mut in_plan = vec![false; n_actions];
    for l in (1..=max_layer).rev() {
        let goals = std::mem::take(&mut goals_at[l]);
        for g in goals {
            let ai = supporter[g as usize];
            let ai_us = ai as usize;
            if !in_plan[ai_us] {
                in_plan[ai_us] = true;
                chosen.push(ai);
            }
            for &p in &task.actions[ai_us].pre_pos {
                let pl = atom_layer[p as usize] as usize;
                if pl > 0 && !marked[p as usize] {
                    marked[p as usize] = true;
                    goals_at[pl].push(p);
                }
            }
        }
    }
    chosen.sort_unstable_by_key(|&ai| {
        let a = &task.actions[ai as usize];
        let l = a
            .add
            .iter()
            .filter(|&&x| supporter[x as usize] == ai)
            .map(|&x| atom_layer[x as usize])
            .min()
            .unwrap_or(INFINITY);
        (l, ai)
    });
    (chosen.len() as u32, chosen)
}

/// Replays a relaxed plan under the relaxed semantics (adds only) and checks
/// every precondition and the goal. Used by tests to certify extraction.
pub fn relaxed_plan_valid(task: &GroundTask, state: &[u32], plan: &[u32]) -> bool {
    let mut holds = vec![false; task.atoms.len()];
    for &a in state {
        holds[a as usize] = true;
    }
    for &ai in plan {
        let action: &TaskAction = &task.actions[ai as usize];
        if action.pre_pos.iter().any(|&p| !holds[p as usize]) {
            return false;
        }
        for &a in &action.add {
            holds[a as usize] = true;
        }
    }
    task.goal.iter().all(|&g| holds[g as usize])
}
