//! Guaranteed-solvable problem generation for a fused domain: union the base
//! objects and initial states, random-walk over applicable ground actions,
//! and extract a goal from the reached state. The walk itself is the witness
//! plan, so every emitted problem carries its own certificate.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::fusion::{FusionError, FusionTrace, GenerationParams, RenameMap};
use crate::model::{
    apply, is_applicable, Domain, GroundAction, GroundAtom, Ident, ModelError, ObjectDecl, Plan,
    PlanStep, Problem, State,
};
use crate::parser::{print_domain, print_plan, print_problem};
use crate::planner::{enumerate_ground_actions, GroundError, DEFAULT_GROUND_CAP};
use crate::seed;

pub const DEFAULT_RETRIES: u64 = 10;

#[derive(Debug, thiserror::Error)]
pub enum ProbGenError {
    #[error("no objects survive the merge for the fused domain")]
    EmptyObjectSet,
    #[error("the walk reached an empty state; no goal can be extracted")]
    EmptyFinalState,
    #[error("generation failed after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u64, last: String },
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One generated task: the fused domain, a problem over it, the witness plan
/// that certifies solvability, and the decision trace for reproduction.
#[derive(Debug, Clone)]
pub struct GenerationRecord {
    pub domain: Domain,
    pub problem: Problem,
    pub witness: Plan,
    pub params: GenerationParams,
    pub trace: FusionTrace,
    /// `<d1>-<d2>` for the fused pair, used as the record directory stem.
    pub pair: String,
    pub depth: u32,
    pub seed: u64,
}

/// Unions the base objects and initial states into the fused domain's
/// namespace. The second problem's types and predicates go through the
/// collision renames; an object held by both bases with conflicting types is
/// renamed with a numeric suffix on the second side. With `num_objs` set,
/// each type is down-sampled to at most that many objects, preferring
/// objects the initial state mentions, and init atoms over dropped objects
/// are discarded.
pub fn build_objects_and_init(
    domain: &Domain,
    p1: &Problem,
    p2: &Problem,
    renames: &RenameMap,
    num_objs: Option<usize>,
    rng: &mut impl Rng,
) -> Result<(Vec<ObjectDecl>, State), ProbGenError> {
    let mut objects: BTreeMap<Ident, Ident> = BTreeMap::new(); // name -> type
    for o in &p1.objects {
        objects.insert(o.name.clone(), o.ty.clone());
    }
    // Renames applied per-object on the second side, identity on the first.
    let mut obj_rename: BTreeMap<Ident, Ident> = BTreeMap::new();
    for o in &p2.objects {
        let ty = renames.type_of(&o.ty).to_string();
        match objects.get(&o.name) {
            Some(existing) if *existing == ty => {}
            None => {
                objects.insert(o.name.clone(), ty);
            }
            Some(_) => {
                let mut n = 2usize;
                let fresh = loop {
                    let candidate = format!("{}_{n}", o.name);
                    if !objects.contains_key(&candidate) {
                        break candidate;
                    }
                    n += 1;
                };
                obj_rename.insert(o.name.clone(), fresh.clone());
                objects.insert(fresh, ty);
            }
        }
    }

    let mut init: BTreeSet<GroundAtom> = p1.init.atoms.clone();
    for atom in &p2.init.atoms {
        init.insert(GroundAtom {
            predicate: renames.predicate_of(&atom.predicate).to_string(),
            args: atom
                .args
                .iter()
                .map(|a| obj_rename.get(a).unwrap_or(a).clone())
                .collect(),
        });
    }

    // Drop atoms whose predicate vanished or changed arity in the fusion.
    init.retain(|a| {
        domain
            .predicate(&a.predicate)
            .is_some_and(|s| s.params.len() == a.args.len())
    });

    if let Some(cap) = num_objs {
        let cap = cap.max(1);
        let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (name, ty) in &objects {
            by_type.entry(ty).or_default().push(name);
        }
        let referenced: BTreeSet<&str> = init
            .iter()
            .flat_map(|a| a.args.iter().map(String::as_str))
            .collect();
        let mut kept: BTreeSet<Ident> = BTreeSet::new();
        for (_, names) in by_type {
            if names.len() <= cap {
                kept.extend(names.iter().map(|n| n.to_string()));
                continue;
            }
            let (mut wanted, mut rest): (Vec<&str>, Vec<&str>) =
                names.iter().partition(|n| referenced.contains(*n));
            wanted.shuffle(rng);
            rest.shuffle(rng);
            wanted.truncate(cap);
            for name in wanted.iter().chain(rest.iter()).take(cap) {
                kept.insert(name.to_string());
            }
        }
        objects.retain(|name, _| kept.contains(name));
        init.retain(|a| a.args.iter().all(|arg| kept.contains(arg)));
    }

    if objects.is_empty() {
        return Err(ProbGenError::EmptyObjectSet);
    }
    let objects: Vec<ObjectDecl> = objects
        .into_iter()
        .map(|(name, ty)| ObjectDecl { name, ty })
        .collect();
    Ok((objects, State { atoms: init }))
}

/// Uniform random walk over applicable ground actions. Stops early when no
/// action applies; a walk stalled at the very first step yields an empty
/// plan, and the goal is then sampled from the initial state itself.
pub fn random_walk(
    actions: &[GroundAction],
    init: &State,
    walk_len: usize,
    rng: &mut impl Rng,
) -> Result<(Plan, State), ProbGenError> {
    let mut state = init.clone();
    let mut steps = Vec::new();
    for _ in 0..walk_len {
        let applicable: Vec<&GroundAction> =
            actions.iter().filter(|a| is_applicable(&state, a)).collect();
        if applicable.is_empty() {
            break;
        }
        let chosen = applicable[rng.gen_range(0..applicable.len())];
        state = apply(&state, chosen)?;
        steps.push(PlanStep {
            action: chosen.schema.clone(),
            args: chosen.binding.clone(),
        });
    }
    Ok((Plan { steps }, state))
}

/// Samples a goal from the walk's final state: each atom independently with
/// probability `goal_prob`, drawn from the atoms the walk changed when any
/// exist, else from the whole state. An empty sample falls back to one
/// uniformly chosen atom from the same pool.
pub fn extract_goal(
    init: &State,
    final_state: &State,
    goal_prob: f64,
    rng: &mut impl Rng,
) -> Result<BTreeSet<GroundAtom>, ProbGenError> {
    if final_state.atoms.is_empty() {
        return Err(ProbGenError::EmptyFinalState);
    }
    let changed: Vec<&GroundAtom> = final_state
        .atoms
        .iter()
        .filter(|a| !init.atoms.contains(*a))
        .collect();
    let pool: Vec<&GroundAtom> = if changed.is_empty() {
        final_state.atoms.iter().collect()
    } else {
        changed
    };
    let mut goal: BTreeSet<GroundAtom> = BTreeSet::new();
    for atom in &pool {
        if rng.gen::<f64>() < goal_prob {
            goal.insert((*atom).clone());
        }
    }
    if goal.is_empty() {
        goal.insert(pool[rng.gen_range(0..pool.len())].clone());
    }
    Ok(goal)
}

/// One generation attempt with an already-derived rng.
fn generate_once(
    domain: &Domain,
    p1: &Problem,
    p2: &Problem,
    renames: &RenameMap,
    params: &GenerationParams,
    rng: &mut impl Rng,
) -> Result<(Problem, Plan), ProbGenError> {
    let (objects, init) =
        build_objects_and_init(domain, p1, p2, renames, params.num_objs, rng)?;
    let actions = enumerate_ground_actions(domain, &objects, DEFAULT_GROUND_CAP)?;
    let (witness, final_state) = random_walk(&actions, &init, params.walk_len, rng)?;
    let goal = extract_goal(&init, &final_state, params.goal_prob, rng)?;
    let problem = Problem::validated(
        format!("{}-prob", domain.name),
        domain.name.clone(),
        objects,
        init,
        goal,
        domain,
    )?;
    Ok((problem, witness))
}

/// Generates a problem plus witness for `domain`, retrying with freshly
/// derived streams when an attempt stalls. Attempt `i` uses the stream
/// `derive(master, [depth, item, i])`, so records are reproducible from
/// `(seed, depth, item)` alone.
pub fn generate(
    domain: &Domain,
    p1: &Problem,
    p2: &Problem,
    renames: &RenameMap,
    params: &GenerationParams,
    master_seed: u64,
    depth: u32,
    item: u64,
) -> Result<(Problem, Plan), ProbGenError> {
    let mut last: Option<ProbGenError> = None;
    for attempt in 0..DEFAULT_RETRIES {
        let mut rng = seed::rng_from(seed::derive(
            master_seed,
            &[u64::from(depth), item, attempt],
        ));
        match generate_once(domain, p1, p2, renames, params, &mut rng) {
            Ok(out) => return Ok(out),
            Err(e @ (ProbGenError::EmptyFinalState | ProbGenError::EmptyObjectSet)) => {
                last = Some(e)
            }
            Err(e) => return Err(e),
        }
    }
    Err(ProbGenError::RetriesExhausted {
        attempts: DEFAULT_RETRIES,
        last: last.expect("retry loop ran at least once").to_string(),
    })
}

/// Writes `domain.pddl`, `problem.pddl`, `witness.plan`, and `trace.log`
/// under `<out>/<pair>-d<depth>-s<seed>/` and returns that directory.
pub fn write_record(out: &Path, record: &GenerationRecord) -> Result<PathBuf, ProbGenError> {
    let dir = out.join(format!(
        "{}-d{}-s{}",
        record.pair, record.depth, record.seed
    ));
    let io = |path: &Path, source: std::io::Error| ProbGenError::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    for (name, text) in [
        ("domain.pddl", print_domain(&record.domain)),
        ("problem.pddl", print_problem(&record.problem)),
        ("witness.plan", print_plan(&record.witness)),
        ("trace.log", record.trace.to_log()),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| io(&path, e))?;
    }
    Ok(dir)
}
