//! Domain fusion: collision renaming, the probabilistic per-action mutation
//! pass, and the reversibility repair.
//!
//! Every random decision is drawn from an explicit seeded stream and logged
//! in a [`FusionTrace`]; replaying a trace on the same inputs reproduces the
//! fused domain without consulting the stream again.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::model::{
    ActionSchema, Domain, Ident, Literal, ModelError, Param, PredicateSchema, TypeDecl,
    TypeHierarchy,
};
use crate::seed;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("probability `{name}` = {value} is outside [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
    #[error("walk length must be at least 1")]
    BadWalkLength,
    #[error("domain `{0}` has no {1}; cannot fuse")]
    DegenerateDomain(Ident, &'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The knobs of one generation run: five mutation probabilities, the object
/// cap, the reversibility flag, the walk length, and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationParams {
    pub prob_add_pre: f64,
    pub prob_add_eff: f64,
    pub prob_rem_pre: f64,
    pub prob_rem_eff: f64,
    pub prob_neg: f64,
    pub num_objs: Option<usize>,
    pub rev_flag: bool,
    pub walk_len: usize,
    /// Per-atom goal sampling probability (0.3 unless overridden).
    pub goal_prob: f64,
    pub seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            prob_add_pre: 0.5,
            prob_add_eff: 0.5,
            prob_rem_pre: 0.0,
            prob_rem_eff: 0.3,
            prob_neg: 0.5,
            num_objs: None,
            rev_flag: false,
            walk_len: 20,
            goal_prob: 0.3,
            seed: 42,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), FusionError> {
        for (name, value) in [
            ("prob_add_pre", self.prob_add_pre),
            ("prob_add_eff", self.prob_add_eff),
            ("prob_rem_pre", self.prob_rem_pre),
            ("prob_rem_eff", self.prob_rem_eff),
            ("prob_neg", self.prob_neg),
            ("goal_prob", self.goal_prob),
        ] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(FusionError::BadProbability { name, value });
            }
        }
        if self.walk_len == 0 {
            return Err(FusionError::BadWalkLength);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameKind {
    Type,
    Predicate,
    Action,
}

impl NameKind {
    fn label(self) -> &'static str {
        match self {
            NameKind::Type => "type",
            NameKind::Predicate => "predicate",
            NameKind::Action => "action",
        }
    }
}

/// Renames applied to the second domain to make the merged name sets
/// disjoint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RenameMap {
    pub types: BTreeMap<Ident, Ident>,
    pub predicates: BTreeMap<Ident, Ident>,
    pub actions: BTreeMap<Ident, Ident>,
}

impl RenameMap {
    pub fn is_empty(&self) -> bool {
        self.types.is_empty() && self.predicates.is_empty() && self.actions.is_empty()
    }

    pub fn type_of<'a>(&'a self, name: &'a str) -> &'a str {
        self.types.get(name).map(String::as_str).unwrap_or(name)
    }

    pub fn predicate_of<'a>(&'a self, name: &'a str) -> &'a str {
        self.predicates.get(name).map(String::as_str).unwrap_or(name)
    }
}

/// One logged mutation decision, with the uniform draw that triggered it.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    Renamed {
        kind: NameKind,
        old: Ident,
        new: Ident,
    },
    AddedPrecondition {
        action: Ident,
        literal: Literal,
        fresh_params: Vec<Param>,
        add_draw: f64,
        neg_draw: f64,
    },
    AddedEffect {
        action: Ident,
        literal: Literal,
        fresh_params: Vec<Param>,
        add_draw: f64,
        neg_draw: f64,
    },
    RemovedPrecondition {
        action: Ident,
        literal: Literal,
        draw: f64,
    },
    RemovedEffect {
        action: Ident,
        literal: Literal,
        draw: f64,
    },
    /// The removal gate fired but the action holds its last effect.
    EffectRemovalSkipped { action: Ident, draw: f64 },
    ReversibilityRepair {
        predicate: Ident,
        action: Ident,
        literal: Literal,
        fresh_params: Vec<Param>,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FusionTrace {
    pub renames: RenameMap,
    pub events: Vec<TraceEvent>,
}

impl FusionTrace {
    /// Line-oriented text log, one event per line.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            match event {
                TraceEvent::Renamed { kind, old, new } => {
                    let _ = writeln!(out, "rename kind={} old={old} new={new}", kind.label());
                }
                TraceEvent::AddedPrecondition {
                    action,
                    literal,
                    add_draw,
                    neg_draw,
                    ..
                } => {
                    let _ = writeln!(
                        out,
                        "add-pre action={action} literal={literal} draw={add_draw:.6} neg-draw={neg_draw:.6}"
                    );
                }
                TraceEvent::AddedEffect {
                    action,
                    literal,
                    add_draw,
                    neg_draw,
                    ..
                } => {
                    let _ = writeln!(
                        out,
                        "add-eff action={action} literal={literal} draw={add_draw:.6} neg-draw={neg_draw:.6}"
                    );
                }
                TraceEvent::RemovedPrecondition {
                    action,
                    literal,
                    draw,
                } => {
                    let _ = writeln!(
                        out,
                        "rem-pre action={action} literal={literal} draw={draw:.6}"
                    );
                }
                TraceEvent::RemovedEffect {
                    action,
                    literal,
                    draw,
                } => {
                    let _ = writeln!(
                        out,
                        "rem-eff action={action} literal={literal} draw={draw:.6}"
                    );
                }
                TraceEvent::EffectRemovalSkipped { action, draw } => {
                    let _ = writeln!(out, "rem-eff-floor action={action} draw={draw:.6}");
                }
                TraceEvent::ReversibilityRepair {
                    predicate,
                    action,
                    literal,
                    ..
                } => {
                    let _ = writeln!(
                        out,
                        "rev-repair predicate={predicate} action={action} literal={literal}"
                    );
                }
            }
        }
        out
    }

    /// Reproduces the fused domain from the base pair by applying the logged
    /// decisions, without any random stream.
    pub fn replay(&self, d1: &Domain, d2: &Domain) -> Result<Domain, FusionError> {
        let renamed_d2 = apply_renames(d2, &self.renames);
        let mut actions: BTreeMap<Ident, ActionSchema> = d1
            .actions
            .iter()
            .chain(&renamed_d2.actions)
            .map(|a| (a.name.clone(), a.clone()))
            .collect();
        for event in &self.events {
            match event {
                TraceEvent::Renamed { .. } | TraceEvent::EffectRemovalSkipped { .. } => {}
                TraceEvent::AddedPrecondition {
                    action,
                    literal,
                    fresh_params,
                    ..
                } => {
                    if let Some(a) = actions.get_mut(action) {
                        a.params.extend(fresh_params.iter().cloned());
                        insert_literal(&mut a.preconditions, literal.clone());
                    }
                }
                TraceEvent::AddedEffect {
                    action,
                    literal,
                    fresh_params,
                    ..
                }
                | TraceEvent::ReversibilityRepair {
                    action,
                    literal,
                    fresh_params,
                    ..
                } => {
                    if let Some(a) = actions.get_mut(action) {
                        a.params.extend(fresh_params.iter().cloned());
                        insert_literal(&mut a.effects, literal.clone());
                    }
                }
                TraceEvent::RemovedPrecondition { action, literal, .. } => {
                    if let Some(a) = actions.get_mut(action) {
                        a.preconditions.remove(literal);
                    }
                }
                TraceEvent::RemovedEffect { action, literal, .. } => {
                    if let Some(a) = actions.get_mut(action) {
                        a.effects.remove(literal);
                    }
                }
            }
        }
        Ok(Domain::validated(
            fused_name(&d1.name, &d2.name),
            merged_types(d1, &renamed_d2),
            d1.predicates
                .iter()
                .chain(&renamed_d2.predicates)
                .cloned()
                .collect(),
            actions.into_values().collect(),
        )?)
    }
}

/// Inserts `literal` into a set; an already-present complement is replaced
/// (the newest draw wins), matching the add-wins grounding rule.
fn insert_literal(set: &mut BTreeSet<Literal>, literal: Literal) {
    set.remove(&literal.complement());
    set.insert(literal);
}

/// Deterministic name for the fused domain; long pedigrees collapse to a
/// hash so depth iteration cannot grow names without bound.
pub fn fused_name(n1: &str, n2: &str) -> Ident {
    let combined = format!("{n1}-{n2}");
    if combined.len() <= 48 {
        combined
    } else {
        let mut h = seed::mix(combined.len() as u64);
        for b in combined.bytes() {
            h = seed::mix(h ^ u64::from(b));
        }
        format!("fused-{h:016x}")
    }
}

fn fresh_name(base: &str, used: &BTreeSet<Ident>) -> Ident {
    let mut suffix = 2usize;
    loop {
        let candidate = format!("{base}_{suffix}");
        if !used.contains(&candidate) {
            return candidate;
        }
        suffix += 1;
    }
}

/// Renames every predicate, action, and declared type of `d2` that collides
/// with `d1` (suffix `_2`, then `_3`, ... until fresh). `d1` is returned
/// unchanged.
pub fn resolve_collisions(d1: &Domain, d2: &Domain) -> (Domain, Domain, RenameMap) {
    let mut map = RenameMap::default();
    // Predicates and actions share one namespace after fusion.
    let d1_pa: BTreeSet<Ident> = d1
        .predicates
        .iter()
        .map(|p| p.name.clone())
        .chain(d1.actions.iter().map(|a| a.name.clone()))
        .collect();
    let mut used: BTreeSet<Ident> = d1_pa
        .iter()
        .cloned()
        .chain(d2.predicates.iter().map(|p| p.name.clone()))
        .chain(d2.actions.iter().map(|a| a.name.clone()))
        .collect();
    for p in &d2.predicates {
        if d1_pa.contains(&p.name) {
            let new = fresh_name(&p.name, &used);
            used.insert(new.clone());
            map.predicates.insert(p.name.clone(), new);
        }
    }
    for a in &d2.actions {
        if d1_pa.contains(&a.name) {
            let new = fresh_name(&a.name, &used);
            used.insert(new.clone());
            map.actions.insert(a.name.clone(), new);
        }
    }
    let d1_types: BTreeSet<Ident> = d1.types.iter().map(|t| t.name.clone()).collect();
    let mut used_types: BTreeSet<Ident> = d1_types
        .iter()
        .cloned()
        .chain(d2.types.iter().map(|t| t.name.clone()))
        .collect();
    for t in &d2.types {
        if d1_types.contains(&t.name) {
            let new = fresh_name(&t.name, &used_types);
            used_types.insert(new.clone());
            map.types.insert(t.name.clone(), new);
        }
    }
    (d1.clone(), apply_renames(d2, &map), map)
}

/// Applies a rename map consistently through a domain.
pub fn apply_renames(domain: &Domain, map: &RenameMap) -> Domain {
    let rename = |m: &BTreeMap<Ident, Ident>, name: &Ident| -> Ident {
        m.get(name).cloned().unwrap_or_else(|| name.clone())
    };
    let rename_ty = |name: &Ident| rename(&map.types, name);
    Domain {
        name: domain.name.clone(),
        types: domain
            .types
            .iter()
            .map(|t| TypeDecl {
                name: rename_ty(&t.name),
                parent: rename_ty(&t.parent),
            })
            .collect(),
        predicates: domain
            .predicates
            .iter()
            .map(|p| PredicateSchema {
                name: rename(&map.predicates, &p.name),
                params: p
                    .params
                    .iter()
                    .map(|param| Param {
                        var: param.var.clone(),
                        ty: rename_ty(&param.ty),
                    })
                    .collect(),
            })
            .collect(),
        actions: domain
            .actions
            .iter()
            .map(|a| ActionSchema {
                name: rename(&map.actions, &a.name),
                params: a
                    .params
                    .iter()
                    .map(|param| Param {
                        var: param.var.clone(),
                        ty: rename_ty(&param.ty),
                    })
                    .collect(),
                preconditions: a
                    .preconditions
                    .iter()
                    .map(|l| Literal {
                        predicate: rename(&map.predicates, &l.predicate),
                        args: l.args.clone(),
                        negated: l.negated,
                    })
                    .collect(),
                effects: a
                    .effects
                    .iter()
                    .map(|l| Literal {
                        predicate: rename(&map.predicates, &l.predicate),
                        args: l.args.clone(),
                        negated: l.negated,
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn merged_types(d1: &Domain, d2: &Domain) -> Vec<TypeDecl> {
    let mut types: Vec<TypeDecl> = d1.types.iter().chain(&d2.types).cloned().collect();
    types.sort();
    types.dedup();
    types
}

/// Builds a literal over a uniformly chosen pool predicate, binding each
/// argument to a type-compatible existing parameter or a fresh `?gN`.
fn build_literal(
    action: &mut ActionSchema,
    pool: &[PredicateSchema],
    hierarchy: &TypeHierarchy,
    negated: bool,
    rng: &mut impl Rng,
) -> (Literal, Vec<Param>) {
    let schema = &pool[rng.gen_range(0..pool.len())];
    let mut fresh = Vec::new();
    let mut args = Vec::with_capacity(schema.params.len());
    for pred_param in &schema.params {
        let candidates: Vec<&Param> = action
            .params
            .iter()
            .filter(|p| hierarchy.is_subtype(&p.ty, &pred_param.ty))
            .collect();
        if candidates.is_empty() {
            let mut n = action.params.len();
            let var = loop {
                let v = format!("g{n}");
                if !action.params.iter().any(|p| p.var == v) {
                    break v;
                }
                n += 1;
            };
            let param = Param {
                var: var.clone(),
                ty: pred_param.ty.clone(),
            };
            action.params.push(param.clone());
            fresh.push(param);
            args.push(crate::model::Term::Var(var));
        } else {
            let chosen = candidates[rng.gen_range(0..candidates.len())];
            args.push(crate::model::Term::Var(chosen.var.clone()));
        }
    }
    (
        Literal {
            predicate: schema.name.clone(),
            args,
            negated,
        },
        fresh,
    )
}

/// One mutation pass over a single action. Draw order is fixed: add-pre,
/// add-eff, rem-pre, rem-eff, with the negation draw taken immediately
/// after each addition fires.
pub fn mutate_action(
    action: &ActionSchema,
    pool: &[PredicateSchema],
    hierarchy: &TypeHierarchy,
    params: &GenerationParams,
    rng: &mut impl Rng,
    trace: &mut Vec<TraceEvent>,
) -> ActionSchema {
    let mut out = action.clone();
    let add_pre_draw: f64 = rng.gen();
    if add_pre_draw < params.prob_add_pre {
        let neg_probe: f64 = rng.gen();
        // binding draws come after the negation draw so the trace can carry
        // both values for the event
        let negated = neg_probe < params.prob_neg;
        let (literal, fresh) = build_literal(&mut out, pool, hierarchy, negated, rng);
        insert_literal(&mut out.preconditions, literal.clone());
        trace.push(TraceEvent::AddedPrecondition {
            action: out.name.clone(),
            literal,
            fresh_params: fresh,
            add_draw: add_pre_draw,
            neg_draw: neg_probe,
        });
    }
    let add_eff_draw: f64 = rng.gen();
    if add_eff_draw < params.prob_add_eff {
        let neg_probe: f64 = rng.gen();
        let negated = neg_probe < params.prob_neg;
        let (literal, fresh) = build_literal(&mut out, pool, hierarchy, negated, rng);
        insert_literal(&mut out.effects, literal.clone());
        trace.push(TraceEvent::AddedEffect {
            action: out.name.clone(),
            literal,
            fresh_params: fresh,
            add_draw: add_eff_draw,
            neg_draw: neg_probe,
        });
    }
    let rem_pre_draw: f64 = rng.gen();
    if rem_pre_draw < params.prob_rem_pre && !out.preconditions.is_empty() {
        let idx = rng.gen_range(0..out.preconditions.len());
        let literal = out.preconditions.iter().nth(idx).cloned().unwrap();
        out.preconditions.remove(&literal);
        trace.push(TraceEvent::RemovedPrecondition {
            action: out.name.clone(),
            literal,
            draw: rem_pre_draw,
        });
    }
    let rem_eff_draw: f64 = rng.gen();
    if rem_eff_draw < params.prob_rem_eff {
        if out.effects.len() > 1 {
            let idx = rng.gen_range(0..out.effects.len());
            let literal = out.effects.iter().nth(idx).cloned().unwrap();
            out.effects.remove(&literal);
            trace.push(TraceEvent::RemovedEffect {
                action: out.name.clone(),
                literal,
                draw: rem_eff_draw,
            });
        } else {
            // never empty the effects set
            trace.push(TraceEvent::EffectRemovalSkipped {
                action: out.name.clone(),
                draw: rem_eff_draw,
            });
        }
    }
    out
}

/// Merges two collision-free domains and runs the mutation pass over every
/// action (first domain's actions in declaration order, then the second's).
pub fn fuse(
    d1: &Domain,
    d2: &Domain,
    params: &GenerationParams,
    rng: &mut impl Rng,
) -> Result<(Domain, FusionTrace), FusionError> {
    fuse_with_trace(d1, d2, params, rng, FusionTrace::default())
}

pub(crate) fn fuse_with_trace(
    d1: &Domain,
    d2: &Domain,
    params: &GenerationParams,
    rng: &mut impl Rng,
    mut trace: FusionTrace,
) -> Result<(Domain, FusionTrace), FusionError> {
    params.validate()?;
    for d in [d1, d2] {
        if d.actions.is_empty() {
            return Err(FusionError::DegenerateDomain(d.name.clone(), "actions"));
        }
        if d.predicates.is_empty() {
            return Err(FusionError::DegenerateDomain(d.name.clone(), "predicates"));
        }
    }
    let types = merged_types(d1, d2);
    let mut pool: Vec<PredicateSchema> =
        d1.predicates.iter().chain(&d2.predicates).cloned().collect();
    pool.sort();
    let scratch = Domain {
        name: String::new(),
        types: types.clone(),
        predicates: pool.clone(),
        actions: vec![],
    };
    let hierarchy = TypeHierarchy::of(&scratch)?;
    let mut actions = Vec::new();
    for action in d1.actions.iter().chain(&d2.actions) {
        actions.push(mutate_action(
            action,
            &pool,
            &hierarchy,
            params,
            rng,
            &mut trace.events,
        ));
    }
    let domain = Domain::validated(fused_name(&d1.name, &d2.name), types, pool, actions)?;
    Ok((domain, trace))
}

/// The full fusion pipeline over two raw domains: collision renaming on the
/// second, merge plus mutation pass, and the reversibility repair when
/// `rev_flag` is set. The returned trace replays to the same domain.
pub fn fuse_pair(
    d1: &Domain,
    d2: &Domain,
    params: &GenerationParams,
    rng: &mut impl Rng,
) -> Result<(Domain, FusionTrace, RenameMap), FusionError> {
    let (r1, r2, renames) = resolve_collisions(d1, d2);
    let mut trace = FusionTrace {
        renames: renames.clone(),
        events: Vec::new(),
    };
    for (kind, map) in [
        (NameKind::Type, &renames.types),
        (NameKind::Predicate, &renames.predicates),
        (NameKind::Action, &renames.actions),
    ] {
        for (old, new) in map {
            trace.events.push(TraceEvent::Renamed {
                kind,
                old: old.clone(),
                new: new.clone(),
            });
        }
    }
    let (mut fused, mut trace) = fuse_with_trace(&r1, &r2, params, rng, trace)?;
    if params.rev_flag {
        let (repaired, events) = repair_reversibility(&fused, rng)?;
        fused = repaired;
        trace.events.extend(events);
    }
    Ok((fused, trace, renames))
}

/// Ensures every predicate deleted somewhere is also added somewhere, by
/// attaching a positive effect of each offending predicate to a uniformly
/// chosen action. Idempotent.
pub fn repair_reversibility(
    domain: &Domain,
    rng: &mut impl Rng,
) -> Result<(Domain, Vec<TraceEvent>), FusionError> {
    let hierarchy = TypeHierarchy::of(domain)?;
    let mut added: BTreeSet<&str> = BTreeSet::new();
    let mut deleted: BTreeSet<&str> = BTreeSet::new();
    for a in &domain.actions {
        for l in &a.effects {
            if l.negated {
                deleted.insert(&l.predicate);
            } else {
                added.insert(&l.predicate);
            }
        }
    }
    let offenders: Vec<Ident> = deleted
        .difference(&added)
        .map(|s| s.to_string())
        .collect();
    if offenders.is_empty() {
        return Ok((domain.clone(), Vec::new()));
    }
    let mut actions = domain.actions.clone();
    let mut events = Vec::new();
    for predicate in offenders {
        let schema = domain
            .predicate(&predicate)
            .expect("delete-only predicate must be declared")
            .clone();
        let idx = rng.gen_range(0..actions.len());
        let action = &mut actions[idx];
        let pool = [schema];
        let (literal, fresh) = build_literal(action, &pool, &hierarchy, false, rng);
        insert_literal(&mut action.effects, literal.clone());
        events.push(TraceEvent::ReversibilityRepair {
            predicate,
            action: action.name.clone(),
            literal,
            fresh_params: fresh,
        });
    }
    let repaired = Domain::validated(
        domain.name.clone(),
        domain.types.clone(),
        domain.predicates.clone(),
        actions,
    )?;
    Ok((repaired, events))
}
